import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nashlab.discretize import build_killed_generator, build_reflected_generator
from nashlab.model import get_model
from nashlab.spectral import (
    Constant,
    Exponential,
    Polynomial,
    dirichlet_energy,
    eigendecompose,
    make_rate,
    phi_functional,
    semigroup_apply,
    semigroup_norm_sq,
    spectral_functional,
    spectral_weights,
)


@pytest.fixture(scope="module")
def bm_dec():
    return eigendecompose(build_killed_generator(get_model("BM2"), (0, 1), 400))


def test_bm2_eigenvalues(bm_dec):
    xi = bm_dec.eigenvalues[:3]
    assert np.allclose(xi / (np.pi**2 * np.array([1, 4, 9])), 1, rtol=1e-4)


def test_eigenvectors_m_orthonormal(bm_dec):
    assert bm_dec.orthonormality_residual() < 1e-10


def test_parseval(bm_dec):
    f = np.sin(3 * bm_dec.nodes) + bm_dec.nodes**2
    mu = spectral_weights(bm_dec, f)
    assert mu.total == pytest.approx(np.dot(bm_dec.weights, f**2), rel=1e-12)


def test_ou_reflected_spectrum():
    dec = eigendecompose(build_reflected_generator(get_model("OU"), (-8, 8), 800))
    assert dec.eigenvalues[1] == pytest.approx(1.0, rel=1e-3)
    assert dec.eigenvalues[2] == pytest.approx(2.0, rel=1e-3)


def test_laplace_transforms():
    assert Polynomial(2).laplace(np.array([2.0]))[0] == pytest.approx(2 / 8)
    assert Constant().laplace(np.array([4.0]))[0] == pytest.approx(0.25)
    assert Exponential(1.0).laplace(np.array([3.0]))[0] == pytest.approx(0.5)
    assert math.isinf(Exponential(3.0).laplace(np.array([2.0]))[0])
    with pytest.raises(ValueError):
        make_rate("weird")


def test_infinite_phi_propagates(bm_dec):
    assert math.isinf(spectral_functional(bm_dec, np.ones(bm_dec.n), lambda xi: np.where(xi < 20, np.inf, 1.0)))


def test_nan_phi_raises(bm_dec):
    with pytest.raises(ValueError):
        spectral_functional(bm_dec, np.ones(bm_dec.n), lambda xi: np.full_like(xi, np.nan))


def test_semigroup_consistency(bm_dec):
    f = np.ones(bm_dec.n)
    pt = semigroup_apply(bm_dec, f, 0.025)  # norm_sq(t) is ||P_{t/2} f||^2
    assert np.dot(bm_dec.weights, pt**2) == pytest.approx(semigroup_norm_sq(bm_dec, f, 0.05), rel=1e-10)
    assert np.all(pt <= 1 + 1e-12)


def test_energy_routes_agree():
    gen = build_killed_generator(get_model("HT(4)"), (-1, 1), 200)
    dec = eigendecompose(gen)
    f = np.cos(gen.nodes)
    assert dirichlet_energy(dec, f) == pytest.approx(gen.energy(f), rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 4.0), st.floats(0.1, 10.0))
def test_phi_homogeneous_degree_two(l, c):
    dec = eigendecompose(build_killed_generator(get_model("BM2"), (0, 1), 40))
    f = np.sin(np.pi * dec.nodes) + 0.3
    assert phi_functional(dec, c * f, l) == pytest.approx(c**2 * phi_functional(dec, f, l), rel=1e-10)
