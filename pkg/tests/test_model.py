import math

import numpy as np
from scipy import integrate
import pytest
from hypothesis import given, settings, strategies as st

from nashlab.errors import ModelDomainError, NotNormalizableError
from nashlab.model import (
    CATALOG,
    get_model,
    heavy_tail,
    heavy_tail_total_mass,
    invariant_probability,
    list_models,
    model_from_expressions,
    scale_speed_from_sde,
    speed_mass,
    veretennikov_margin,
)


@pytest.mark.parametrize("name", ["BM2", "OU", "HT(2)", "HT(4)", "HT(6)"])
def test_sde_route_matches_closed_forms(name):
    model = get_model(name)
    s_sde, m_sde = scale_speed_from_sde(model)
    xs = np.linspace(-3, 3, 41)
    assert np.allclose(s_sde(xs), model.scale_density(xs), rtol=1e-9)
    assert np.allclose(m_sde(xs), model.speed_density(xs), rtol=1e-9)


def test_heavy_tail_mass_is_beta_integral():
    assert heavy_tail_total_mass(4) == pytest.approx(5 * math.pi / 8, rel=1e-14)
    assert speed_mass(get_model("HT(4)"), -math.inf, math.inf) == pytest.approx(5 * math.pi / 8, rel=1e-9)


def test_ou_mass_gaussian():
    assert speed_mass(get_model("OU"), -math.inf, math.inf) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-9)


def test_brownian_half_line_not_normalizable():
    with pytest.raises(NotNormalizableError):
        invariant_probability(get_model("BM2"), (0.0, math.inf))


def test_invariant_probability_integrates_to_one():
    dens = invariant_probability(get_model("HT(4)"), (-5.0, 5.0))
    xs = np.linspace(-5, 5, 20001)
    assert integrate.trapezoid(dens(xs), xs) == pytest.approx(1.0, abs=1e-6)
    assert dens(np.array([6.0]))[0] == 0.0


def test_catalog_listing_and_tags():
    names = [e.model.name for e in list_models()]
    assert {"BM2", "OU", "HT(4)"} <= set(names)
    assert names == sorted(names)
    assert all(e.model.name.startswith("HT(") for e in list_models("heavy-tail"))
    assert get_model("HT(3.5)").name == "HT(3.5)"
    with pytest.raises(KeyError):
        get_model("nope")


def test_heavy_tail_drift_condition():
    xs = np.linspace(-50, 50, 101)
    assert np.all(veretennikov_margin(heavy_tail(4), 4, xs) >= -1e-12)


def test_expression_model_matches_catalog():
    user = model_from_expressions("ou-expr", "-x", "sqrt(2)")
    s, m = user.densities()
    xs = np.linspace(-2, 2, 9)
    ou = CATALOG["OU"].model
    assert np.allclose(m(xs), ou.speed_density(xs), rtol=1e-9)


def test_domain_guard():
    model = model_from_expressions("log", "0", "ln(x)", domain=(1.5, math.inf))
    _, speed = model.densities()
    with pytest.raises(ModelDomainError):
        speed(np.array([1.0]))


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=1.0, max_value=8.0))
def test_heavy_tail_mass_property(r):
    assert speed_mass(heavy_tail(r), -math.inf, math.inf) == pytest.approx(heavy_tail_total_mass(r), rel=1e-7)
