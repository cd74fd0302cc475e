"""scikit-learn style front ends.

Grid functions are rows of a 2-D array, one column per grid node, so the
estimators drop into pipelines that produce or consume such arrays.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .discretize import ABSORBING, REFLECTING, build_generator
from .model import DiffusionModel, get_model
from .moments import moment_recursion
from .spectral import eigendecompose
from .verify import nash_exponents


def _resolve(model):
    return model if isinstance(model, DiffusionModel) else get_model(model)


def _boundary(boundary):
    if isinstance(boundary, str):
        return (boundary, boundary)
    return tuple(boundary)


class _GeneratorMixin:
    def _build(self):
        return build_generator(_resolve(self.model), self.interval, self.n, _boundary(self.boundary))

    def _check_width(self, X):
        X = check_array(X, ensure_2d=True, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_} grid values")
        return X


class SpectralTransformer(_GeneratorMixin, TransformerMixin, BaseEstimator):
    """Map grid functions to speed-weighted eigen-coefficients ``(f, e_k)_m``.

    Parameters
    ----------
    model : str or DiffusionModel
        Catalog name (e.g. ``"HT(4)"``) or a model instance.
    interval : tuple of float
    n : int
        Number of grid nodes.
    boundary : {"absorbing", "reflecting"} or pair of them
    n_components : int or None
        Keep only the lowest modes in :meth:`transform`.
    """

    def __init__(self, model="BM2", interval=(0.0, 1.0), n=400, boundary=ABSORBING, n_components=None):
        self.model = model
        self.interval = interval
        self.n = n
        self.boundary = boundary
        self.n_components = n_components

    def fit(self, X=None, y=None):
        self.generator_ = self._build()
        self.decomposition_ = eigendecompose(self.generator_)
        self.eigenvalues_ = self.decomposition_.eigenvalues
        self.grid_ = self.generator_.nodes
        self.n_features_in_ = self.generator_.n
        if X is not None:
            self._check_width(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "decomposition_")
        X = self._check_width(X)
        coef = self.decomposition_.coefficients(X)
        return coef if self.n_components is None else coef[:, : self.n_components]

    def inverse_transform(self, C):
        check_is_fitted(self, "decomposition_")
        C = check_array(C, dtype=np.float64)
        full = np.zeros((C.shape[0], self.n_features_in_))
        full[:, : C.shape[1]] = C
        return self.decomposition_.synthesize(full)

    def spectral_measure(self, X):
        """Spectral weights ``w_k`` for every row of ``X``."""
        check_is_fitted(self, "decomposition_")
        return self.decomposition_.coefficients(self._check_width(X)) ** 2

    def semigroup(self, X, t):
        """``P_t`` applied to every row of ``X``."""
        check_is_fitted(self, "decomposition_")
        coef = self.decomposition_.coefficients(self._check_width(X))
        return self.decomposition_.synthesize(coef * np.exp(-self.eigenvalues_ * t))

    def get_feature_names_out(self, input_features=None):
        k = self.n_features_in_ if self.n_components is None else self.n_components
        return np.array([f"mode{i}" for i in range(1, k + 1)], dtype=object)


class NashFunctionals(_GeneratorMixin, TransformerMixin, BaseEstimator):
    """Per-row Nash bookkeeping on a killed generator.

    :meth:`transform` returns columns ``[norm_sq, energy, phi, rhs, slack]``
    where ``rhs = energy^{1/p} phi^{1/q}`` with ``p = (l+2)/(l+1)``.
    """

    def __init__(self, model="BM2", interval=(0.0, 1.0), n=400, l=1.0, boundary=ABSORBING):
        self.model = model
        self.interval = interval
        self.n = n
        self.l = l
        self.boundary = boundary

    def fit(self, X=None, y=None):
        if REFLECTING in _boundary(self.boundary) and ABSORBING not in _boundary(self.boundary):
            raise ValueError("Nash functionals need at least one absorbing side")
        self.generator_ = self._build()
        self.decomposition_ = eigendecompose(self.generator_)
        self.p_, self.q_ = nash_exponents(self.l)
        self.n_features_in_ = self.generator_.n
        return self

    def transform(self, X):
        check_is_fitted(self, "decomposition_")
        w = self.decomposition_.coefficients(self._check_width(X)) ** 2
        xi = self.decomposition_.eigenvalues
        norm = w.sum(axis=1)
        energy = w @ xi
        phi = w @ xi ** (-(self.l + 1))
        rhs = energy ** float(1 / self.p_) * phi ** float(1 / self.q_)
        scale = np.maximum(norm, rhs)
        slack = np.where(scale > 0, (rhs - norm) / np.where(scale > 0, scale, 1), 0.0)
        return np.column_stack([norm, energy, phi, rhs, slack])

    def get_feature_names_out(self, input_features=None):
        return np.array(["norm_sq", "energy", "phi", "rhs", "slack"], dtype=object)


class HittingTimeMoments(_GeneratorMixin, BaseEstimator):
    """Exit-time moments ``x -> E_x tau^k`` from the Dynkin recursion.

    ``predict`` takes starting points (one per row) and returns the
    linearly interpolated moments of orders ``1..order``.
    """

    def __init__(self, model="BM2", interval=(0.0, 1.0), n=400, order=2, boundary=ABSORBING):
        self.model = model
        self.interval = interval
        self.n = n
        self.order = order
        self.boundary = boundary

    def fit(self, X=None, y=None):
        self.generator_ = self._build()
        self.table_ = moment_recursion(self.generator_, self.order)
        return self

    def predict(self, X):
        check_is_fitted(self, "table_")
        X = check_array(np.asarray(X, dtype=float).reshape(-1, 1) if np.ndim(X) == 1 else X)
        x = X[:, 0]
        lo, hi = self.generator_.grid.a, self.generator_.grid.b
        if np.any((x < lo) | (x > hi)):
            raise ValueError(f"starting points must lie in [{lo}, {hi}]")
        # absorbing ends carry v = 0, reflecting ends repeat the edge value
        nodes = self.table_.nodes
        xs = np.concatenate([[lo], nodes, [hi]])
        out = np.empty((x.size, self.order))
        for k in range(1, self.order + 1):
            v = self.table_.values[k]
            left = 0.0 if self.generator_.boundary[0] == ABSORBING else v[0]
            right = 0.0 if self.generator_.boundary[1] == ABSORBING else v[-1]
            out[:, k - 1] = np.interp(x, xs, np.concatenate([[left], v, [right]]))
        return out
