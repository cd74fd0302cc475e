"""Hitting-time moments on the grid: Dynkin recursion and spectral route."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

from .discretize import GeneratorMatrix
from .errors import NumericError
from .spectral import (
    Exponential,
    Polynomial,
    RateFunction,
    SpectralDecomposition,
    eigendecompose,
    spectral_functional,
)


def _neg_bands(gen: GeneratorMatrix) -> np.ndarray:
    # banded storage of -L for solve_banded: rows are upper, diag, lower
    ab = np.zeros((3, gen.n))
    ab[0, 1:] = -gen.upper
    ab[1] = -gen.diag
    ab[2, :-1] = -gen.lower
    return ab


def solve_negative_generator(gen: GeneratorMatrix, rhs, shift: float = 0.0) -> np.ndarray:
    """Solve ``(-L - shift) u = rhs`` by tridiagonal elimination."""
    ab = _neg_bands(gen)
    ab[1] -= shift
    try:
        u = linalg.solve_banded((1, 1), ab, np.asarray(rhs, dtype=float))
    except linalg.LinAlgError as exc:
        raise NumericError(f"singular tridiagonal system (n={gen.n}): {exc}") from None
    if not np.all(np.isfinite(u)):
        raise NumericError(f"tridiagonal solve produced non-finite values (n={gen.n})")
    return u


def positive_definite_below(gen: GeneratorMatrix, shift: float) -> bool:
    """True iff ``-L - shift`` is positive definite, i.e. ``shift < xi_1``.

    Counts negative pivots of the LDL^T factorisation of the symmetrised
    matrix (Sturm sequence); independent of any eigensolve.
    """
    d, e = gen.symmetric_bands()
    pivot = d[0] - shift
    if pivot <= 0:
        return False
    e2 = e**2
    for i in range(1, d.size):
        pivot = d[i] - shift - e2[i - 1] / pivot
        if pivot <= 0:
            return False
    return True


@dataclass(frozen=True, eq=False)
class MomentTable:
    """``values[k]`` approximates ``x -> E_x tau^k`` on the grid nodes."""

    order: int
    nodes: np.ndarray
    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def moment(self, k: int) -> np.ndarray:
        return self.values[k]

    def at(self, x: float, k: int) -> float:
        """Linear interpolation of ``v_k`` at ``x``."""
        return float(np.interp(x, self.nodes, self.values[k]))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["x"] + [f"v{k}" for k in range(1, self.order + 1)])
            for i, x in enumerate(self.nodes):
                out.writerow([repr(float(x))] + [repr(float(v)) for v in self.values[1:, i]])


def moment_recursion(gen: GeneratorMatrix, K: int) -> MomentTable:
    """``(-L) v_k = k v_{k-1}`` with ``v_0 = 1``, solved sequentially."""
    if not gen.absorbing:
        raise NumericError("moment recursion needs at least one absorbing side")
    if K < 1:
        raise ValueError("K must be at least 1")
    vals = np.empty((K + 1, gen.n))
    vals[0] = 1.0
    for k in range(1, K + 1):
        vals[k] = solve_negative_generator(gen, k * vals[k - 1])
    return MomentTable(
        order=K, nodes=gen.nodes.copy(), values=vals,
        provenance={"model": gen.model_name, "n": gen.n, "interval": [gen.grid.a, gen.grid.b],
                    "boundary": list(gen.boundary)},
    )


def pairing(gen: GeneratorMatrix, f, rate: RateFunction) -> float:
    """``(f, Lambda_r(-L) f)_m`` by linear solves only.

    Polynomial rates with integer ``l`` use ``l+1`` recursion steps,
    exponential rates a single resolvent solve after a definiteness check.
    Non-integer ``l`` has no linear-solve route; ``ValueError`` is raised.
    """
    f = np.asarray(f, dtype=float)
    if isinstance(rate, Exponential):
        if not positive_definite_below(gen, rate.lam):
            return math.inf if np.any(f != 0) else 0.0
        u = solve_negative_generator(gen, f, shift=rate.lam)
        return gen.inner(f, u)
    if isinstance(rate, Polynomial):
        if not rate.is_integer:
            raise ValueError(f"no linear-solve route for non-integer l={rate.l}")
        u = f
        for k in range(1, int(rate.l) + 2):
            u = k * solve_negative_generator(gen, u)
        return gen.inner(f, u) / (rate.l + 1)
    raise TypeError(f"unsupported rate {rate!r}")


def modulated_moment(dec: SpectralDecomposition, f, rate: RateFunction) -> float:
    """``sum_k Lambda_r(xi_k) w_k`` -- the spectral route."""
    if not dec.killed:
        raise ValueError("modulated moments need a killed decomposition")
    return spectral_functional(dec, f, rate.laplace)


@dataclass(frozen=True)
class ModulatedMoment:
    value: float
    route: str
    check_value: float | None = None
    check_route: str | None = None
    diagnostic: str = ""

    @property
    def relative_gap(self) -> float | None:
        if self.check_value is None:
            return None
        if math.isinf(self.value) and math.isinf(self.check_value):
            return 0.0
        return abs(self.value - self.check_value) / abs(self.check_value)


def mean_modulated_moment(
    gen: GeneratorMatrix, l: float, dec: SpectralDecomposition | None = None, cross_check: bool = True
) -> ModulatedMoment:
    """``int v_{l+1}/(l+1) dm`` over the killed domain (speed-weighted, unnormalised).

    Integer ``l`` goes through the recursion; when ``cross_check`` is set the
    spectral route is evaluated too.  Other ``l`` use the spectral route only.
    """
    rate = Polynomial(l)
    ones = np.ones(gen.n)
    gamma = special.gamma(l + 1)
    if rate.is_integer:
        table = moment_recursion(gen, int(l) + 1)
        value = gen.inner(ones, table.values[-1]) / (l + 1)
        if not math.isfinite(value):
            return ModulatedMoment(math.inf, "recursion", diagnostic="recursion overflowed")
        if not cross_check:
            return ModulatedMoment(value, "recursion")
        dec = dec or eigendecompose(gen)
        spec = modulated_moment(dec, ones, rate)
        return ModulatedMoment(value, "recursion", spec, "spectral")
    dec = dec or eigendecompose(gen)
    value = modulated_moment(dec, ones, rate)
    diag = ""
    if not math.isfinite(value):
        diag = f"infinite: xi_1={dec.eigenvalues[0]:.3e}"
    else:
        # share of the total carried by the lowest mode: a diverging tail shows up here
        w1 = spectral_functional(dec, ones, lambda xi: np.where(xi == xi[0], gamma * xi ** (-(l + 1)), 0.0))
        diag = f"lowest-mode share {w1 / value:.3f}"
    return ModulatedMoment(value, "spectral", diagnostic=diag)
