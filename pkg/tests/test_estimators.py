import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from nashlab.estimators import HittingTimeMoments, NashFunctionals, SpectralTransformer


def test_transform_roundtrip():
    t = SpectralTransformer(n=99).fit()
    X = np.random.default_rng(0).normal(size=(3, 99))
    assert np.allclose(t.inverse_transform(t.transform(X)), X, atol=1e-10)
    assert t.eigenvalues_[0] == pytest.approx(np.pi**2, rel=1e-3)


def test_params_and_clone():
    t = SpectralTransformer(model="HT(4)", interval=(-1, 1), n_components=4)
    c = clone(t)
    assert c.get_params()["model"] == "HT(4)"
    assert c.set_params(n=50).n == 50


def test_not_fitted_and_width():
    with pytest.raises(NotFittedError):
        SpectralTransformer().transform(np.ones((1, 400)))
    t = SpectralTransformer(n=10).fit()
    with pytest.raises(ValueError):
        t.transform(np.ones((1, 11)))
    assert t.transform(np.ones((2, 10))).shape == (2, 10)


def test_hitting_moments_predict():
    h = HittingTimeMoments(n=999).fit()
    pred = h.predict([0.5, 0.0])
    assert pred[0, 0] == pytest.approx(1 / 8, rel=1e-6)
    assert pred[0, 1] == pytest.approx(5 / 192, rel=1e-4)
    assert np.all(pred[1] == 0)
    with pytest.raises(ValueError):
        h.predict([2.0])


def test_nash_functionals_in_pipeline():
    pipe = make_pipeline(NashFunctionals(n=60, l=2.0))
    X = np.random.default_rng(3).uniform(-1, 1, size=(5, 60))
    out = pipe.fit(X).transform(X)
    assert out.shape == (5, 5)
    assert np.all(out[:, 4] >= -1e-12)
