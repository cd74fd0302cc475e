import math

import numpy as np
import pytest

from nashlab.discretize import build_killed_generator, build_reflected_generator
from nashlab.errors import WindowError
from nashlab.model import get_model
from nashlab.spectral import Constant, Exponential, Polynomial, eigendecompose
from nashlab.verify import (
    CONVERGENT,
    DIVERGENT,
    INCONCLUSIVE,
    bounded_test_functions,
    classify_ladder,
    heavy_tail_regime,
    nash_exponents,
    nash_witness,
    semigroup_time_integral,
    verify_decay,
    verify_equality_chain,
    verify_nash_killed,
    verify_nash_whole,
    whole_line_split,
)


def test_equality_chain_bm2_constant():
    rep = verify_equality_chain(get_model("BM2"), (0, 1), Constant(), n=400, expected=1 / 12, tol_solve=1e-4)
    assert rep.passed
    assert {q["name"] for q in rep.quantities} >= {"pairing", "spectral_sum", "time_integral"}


def test_equality_chain_fractional_has_no_solve_route():
    rep = verify_equality_chain(get_model("BM2"), (0, 1), Polynomial(0.5), n=200)
    assert rep.passed
    assert any("route (i)" in n for n in rep.notes)


def test_time_integral_exponential_below_gap():
    dec = eigendecompose(build_killed_generator(get_model("BM2"), (0, 1), 300))
    f = np.ones(dec.n)
    expected = float(np.sum((dec.coefficients(f) ** 2) / (dec.eigenvalues - 3.0)))
    assert semigroup_time_integral(dec, f, Exponential(3.0)) == pytest.approx(expected, rel=1e-6)


def test_nash_exponents_are_conjugate():
    p, q = nash_exponents(1.5)
    assert 1 / p + 1 / q == 1


def test_ground_state_is_extremal():
    dec = eigendecompose(build_killed_generator(get_model("HT(4)"), (-1, 1), 200))
    assert abs(nash_witness(dec, dec.eigenvectors[:, 0], 2).slack) < 1e-12


def test_nash_killed_random():
    dec = eigendecompose(build_killed_generator(get_model("BM2"), (0, 1), 200))
    fs = bounded_test_functions(np.random.default_rng(1), dec.nodes, 60)
    assert np.all(np.abs(fs) <= 1)
    assert verify_nash_killed(dec, 1.0, fs).passed


def test_nash_killed_refuses_reflected():
    dec = eigendecompose(build_reflected_generator(get_model("BM2"), (0, 1), 50))
    assert not verify_nash_killed(dec, 1.0, np.ones((1, 50))).passed


def test_nash_whole_split_snaps_to_node():
    model = get_model("HT(4)")
    split = whole_line_split(model, 10, 0.3, 101)
    assert split.split_point == pytest.approx(split.gen.nodes[split.j])
    Fs = bounded_test_functions(np.random.default_rng(2), split.gen.nodes, 20)
    rep = verify_nash_whole(model, 10, 0.3, 1.0, Fs, n=101, split=split)
    assert rep.passed


def test_decay_guard():
    dec = eigendecompose(build_reflected_generator(get_model("HT(4)"), (-5, 5), 80))
    with pytest.raises(WindowError):
        verify_decay(dec, np.tanh(dec.nodes), (1, 30))


def test_decay_single_mode_is_exponential_regime():
    dec = eigendecompose(build_reflected_generator(get_model("BM2"), (0, 1), 100))
    rep = verify_decay(dec, dec.eigenvectors[:, 1], (0.001, 0.01), guard=False)
    assert rep.value("regime") == "exponential"
    assert rep.assertions[-1]["status"] == "n/a"


def test_classifier():
    assert classify_ladder([1.0, 1.01, 1.02]) == CONVERGENT
    assert classify_ladder([1.0, 2.0, 4.0]) == DIVERGENT
    assert classify_ladder([1.0, 1.3, 1.6]) == INCONCLUSIVE
    assert classify_ladder([1.0, math.inf]) == DIVERGENT
    assert heavy_tail_regime(4, 2) == CONVERGENT
    assert heavy_tail_regime(4, 4) == DIVERGENT
    assert heavy_tail_regime(4, 3) == INCONCLUSIVE
