"""Spectral calculus for discrete generators.

The discrete generator is self-adjoint in the speed-weighted inner product
``(f, g)_m = sum_i m_i f_i g_i``.  Everything the lab needs about the
semigroup is a finite sum over eigenpairs ``(xi_k, e_k)`` of ``-L``:
spectral weights ``w_k = (f, e_k)_m^2``, ``||P_{t/2} f||^2 = sum e^{-xi_k t} w_k``
and ``(f, phi(-L) f)_m = sum phi(xi_k) w_k``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg, special

from .discretize import GeneratorMatrix
from .errors import NumericError

# Weights below this fraction of ||f||^2 are treated as round-off zeros when
# deciding whether an infinite phi(xi_k) propagates.
WEIGHT_FLOOR = 1e-24


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, m-orthonormal
    weights: np.ndarray
    killed: bool
    nodes: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def orthonormality_residual(self) -> float:
        gram = self.eigenvectors.T @ (self.weights[:, None] * self.eigenvectors)
        return float(np.max(np.abs(gram - np.eye(self.n))))

    def coefficients(self, f) -> np.ndarray:
        """``(f, e_k)_m`` for every k; ``f`` may be 2-D with one function per row."""
        f = np.asarray(f, dtype=float)
        return (f * self.weights) @ self.eigenvectors

    def synthesize(self, coef) -> np.ndarray:
        return np.asarray(coef, dtype=float) @ self.eigenvectors.T


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    """Atoms ``(xi_k, w_k)`` of ``d(E_xi f, f)``."""

    eigenvalues: np.ndarray
    weights: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["k", "xi", "weight"])
            for k, (xi, w) in enumerate(zip(self.eigenvalues, self.weights), start=1):
                out.writerow([k, repr(float(xi)), repr(float(w))])


# -- rate functions ------------------------------------------------------------


class RateFunction:
    """Modulating rate ``r(t)`` with primitive ``R`` and Laplace transform."""

    name = "rate"

    def r(self, t):
        raise NotImplementedError

    def R(self, t):
        raise NotImplementedError

    def laplace(self, xi):
        raise NotImplementedError

    def describe(self) -> dict:
        return {"variant": self.name}


class Polynomial(RateFunction):
    """``r(t) = t^l``; Laplace transform ``Gamma(l+1) xi^-(l+1)``."""

    name = "polynomial"

    def __init__(self, l: float):
        if not l >= 0:
            raise ValueError(f"polynomial rate needs l >= 0, got {l}")
        self.l = float(l)

    def r(self, t):
        return np.power(np.asarray(t, dtype=float), self.l)

    def R(self, t):
        return np.power(np.asarray(t, dtype=float), self.l + 1) / (self.l + 1)

    def laplace(self, xi):
        xi = np.asarray(xi, dtype=float)
        if np.any(xi < 0):
            raise ValueError("Laplace transform evaluated at negative xi")
        with np.errstate(divide="ignore"):
            out = special.gamma(self.l + 1) * np.power(xi, -(self.l + 1))
        return np.where(xi == 0, np.inf, out)

    @property
    def is_integer(self) -> bool:
        return float(self.l).is_integer()

    def describe(self):
        return {"variant": self.name, "l": self.l}

    def __repr__(self):
        return f"Polynomial(l={self.l:g})"


class Constant(Polynomial):
    """``r = 1``; the plain exit time ``R(tau) = tau``."""

    name = "constant"

    def __init__(self):
        super().__init__(0.0)

    def describe(self):
        return {"variant": self.name}

    def __repr__(self):
        return "Constant()"


class Exponential(RateFunction):
    """``r(t) = e^{lam t}``; Laplace transform ``1/(xi - lam)``, infinite for ``xi <= lam``."""

    name = "exponential"

    def __init__(self, lam: float):
        if not lam > 0:
            raise ValueError(f"exponential rate needs lam > 0, got {lam}")
        self.lam = float(lam)

    def r(self, t):
        return np.exp(self.lam * np.asarray(t, dtype=float))

    def R(self, t):
        return np.expm1(self.lam * np.asarray(t, dtype=float)) / self.lam

    def laplace(self, xi):
        xi = np.asarray(xi, dtype=float)
        if np.any(xi < 0):
            raise ValueError("Laplace transform evaluated at negative xi")
        gap = xi - self.lam
        with np.errstate(divide="ignore"):
            return np.where(gap > 0, 1.0 / np.where(gap > 0, gap, 1.0), np.inf)

    def describe(self):
        return {"variant": self.name, "lam": self.lam}

    def __repr__(self):
        return f"Exponential(lam={self.lam:g})"


def make_rate(variant: str, param: float | None = None) -> RateFunction:
    variant = variant.lower()
    if variant == "constant":
        return Constant()
    if variant == "polynomial":
        return Polynomial(param)
    if variant == "exponential":
        return Exponential(param)
    raise ValueError(f"unknown rate variant {variant!r}")


def laplace_transform(rate: RateFunction, xi: float) -> float:
    return float(rate.laplace(xi))


# -- decomposition and evaluation ----------------------------------------------


def eigendecompose(gen: GeneratorMatrix) -> SpectralDecomposition:
    """Full eigensolve of ``-L`` via the symmetric similarity transform."""
    d, e = gen.symmetric_bands()
    try:
        vals, vecs = linalg.eigh_tridiagonal(d, e, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericError(
            f"tridiagonal eigensolve failed (n={gen.n}, diag range "
            f"[{d.min():.3e}, {d.max():.3e}]): {exc}"
        ) from None
    vecs = vecs / np.sqrt(gen.weights)[:, None]
    # fix signs so the first nonzero entry of every mode is positive
    pivot = np.argmax(np.abs(vecs) > 1e-8 * np.max(np.abs(vecs), axis=0), axis=0)
    signs = np.sign(vecs[pivot, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1
    vecs = vecs * signs
    return SpectralDecomposition(
        eigenvalues=vals, eigenvectors=vecs, weights=gen.weights.copy(),
        killed=gen.absorbing, nodes=gen.nodes.copy(),
    )


def spectral_weights(dec: SpectralDecomposition, f) -> SpectralMeasure:
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("grid function must be finite")
    return SpectralMeasure(dec.eigenvalues, dec.coefficients(f) ** 2)


def _measure(dec, f) -> SpectralMeasure:
    return f if isinstance(f, SpectralMeasure) else spectral_weights(dec, f)


def semigroup_norm_sq(dec: SpectralDecomposition, f, t: float) -> float:
    """``||P_{t/2} f||_m^2 = sum_k exp(-xi_k t) w_k``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    mu = _measure(dec, f)
    return float(np.sum(np.exp(-mu.eigenvalues * t) * mu.weights))


def semigroup_apply(dec: SpectralDecomposition, f, t: float) -> np.ndarray:
    """``P_t f`` as a grid function."""
    coef = dec.coefficients(f)
    return dec.synthesize(np.exp(-dec.eigenvalues * t) * coef)


def spectral_functional(dec: SpectralDecomposition, f, phi: Callable) -> float:
    """``sum_k phi(xi_k) w_k`` with explicit propagation of ``+inf``."""
    mu = _measure(dec, f)
    with np.errstate(all="ignore"):
        vals = np.asarray(phi(mu.eigenvalues), dtype=float) * np.ones_like(mu.weights)
    significant = mu.weights > WEIGHT_FLOOR * max(mu.total, np.finfo(float).tiny)
    if np.any(np.isnan(vals) & significant):
        raise ValueError("phi undefined at an eigenvalue carrying positive weight")
    if np.any(np.isposinf(vals) & significant):
        return math.inf
    vals = np.where(significant, vals, 0.0)
    return float(np.sum(vals * np.where(significant, mu.weights, 0.0)))


def dirichlet_energy(dec: SpectralDecomposition, f) -> float:
    return spectral_functional(dec, f, lambda xi: xi)


def phi_functional(dec: SpectralDecomposition, f, l: float) -> float:
    """``sum xi_k^-(l+1) w_k``, the Nash functional of order ``(l+2)/(l+1)``."""
    return spectral_functional(dec, f, lambda xi: np.where(xi > 0, xi, np.nan) ** (-(l + 1)))


def write_decay_curve(dec: SpectralDecomposition, f, path, t_min=1e-3, t_max=1e3, points=121) -> None:
    """CSV of ``t -> ||P_{t/2} f||^2`` on a log-spaced grid."""
    mu = _measure(dec, f)
    ts = np.logspace(math.log10(t_min), math.log10(t_max), points)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t", "norm_sq_half_t"])
        for t in ts:
            out.writerow([repr(float(t)), repr(semigroup_norm_sq(dec, mu, t))])
