"""Finite-volume tridiagonal approximations of the generator ``d/dm d/dS``.

Nodes are uniform in ``x``.  Each node carries a speed mass ``m_i`` (midpoint
rule on ``m'``) and each edge a conductance ``c = 1 / Delta S`` where
``Delta S`` is the exact scale increment between the two nodes.  Then

    (L f)_i = [c_{i+1/2} (f_{i+1} - f_i) - c_{i-1/2} (f_i - f_{i-1})] / m_i.

An absorbing side has a ghost node on the endpoint with ``f = 0`` at scale
distance ``Delta S`` (one grid step); a reflecting side has zero flux through
the endpoint, which is then a cell face half a step from the first node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DiscretizationError, ModelDomainError
from .model import DiffusionModel
from .quadrature import integrate_segments

ABSORBING = "absorbing"
REFLECTING = "reflecting"
_OFFSET = {ABSORBING: 1.0, REFLECTING: 0.5}


@dataclass(frozen=True)
class Grid:
    a: float
    b: float
    nodes: np.ndarray

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.nodes)

    def __post_init__(self):
        if self.nodes.size and np.any(np.diff(self.nodes) <= 0):
            raise DiscretizationError("grid nodes must be strictly increasing")


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Speed-weighted tridiagonal generator.

    ``conductance`` has length ``n - 1`` (edge ``i`` joins nodes ``i`` and
    ``i+1``); ``killing`` holds per-node conductances to the cemetery, which
    is where absorbing ghost edges end up.  A zero interior conductance
    splits the matrix into independent components.
    """

    grid: Grid
    weights: np.ndarray
    conductance: np.ndarray
    killing: np.ndarray
    boundary: tuple[str, str]
    model_name: str = ""

    @property
    def boundary_conductance(self) -> tuple[float, float]:
        return float(self.killing[0]), float(self.killing[-1])

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def upper(self) -> np.ndarray:
        return self.conductance / self.weights[:-1]

    @property
    def lower(self) -> np.ndarray:
        return self.conductance / self.weights[1:]

    @property
    def diag(self) -> np.ndarray:
        out_flow = np.zeros(self.n)
        out_flow[:-1] += self.conductance
        out_flow[1:] += self.conductance
        out_flow += self.killing
        return -out_flow / self.weights

    @property
    def absorbing(self) -> bool:
        return bool(np.any(self.killing > 0))

    def symmetric_bands(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal of ``-D^{1/2} L D^{-1/2}``, ``D = diag(m)``."""
        root = np.sqrt(self.weights)
        return -self.diag, -self.conductance / (root[:-1] * root[1:])

    def apply(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        flux = self.conductance * np.diff(f)
        out = np.zeros(self.n)
        out[:-1] += flux
        out[1:] -= flux
        out -= self.killing * f
        return out / self.weights

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)

    def row_sums(self) -> np.ndarray:
        return self.apply(np.ones(self.n))

    def symmetry_defect(self) -> float:
        """max |m_i L_{i,i+1} - m_{i+1} L_{i+1,i}| relative to max |m_i L_{i,i+1}|."""
        left = self.weights[:-1] * self.upper
        right = self.weights[1:] * self.lower
        scale = np.max(np.abs(left)) if left.size else 1.0
        return float(np.max(np.abs(left - right)) / scale) if left.size else 0.0

    def inner(self, f, g) -> float:
        return float(np.dot(self.weights * np.asarray(f, dtype=float), np.asarray(g, dtype=float)))

    def energy(self, f) -> float:
        """Discrete Dirichlet form ``-(f, L f)_m`` as a sum over edges."""
        f = np.asarray(f, dtype=float)
        total = float(np.dot(self.conductance, np.diff(f) ** 2))
        return total + float(np.dot(self.killing, f**2))

    def restrict(self, start: int, stop: int) -> "GeneratorMatrix":
        """Sub-generator on nodes ``start:stop``; cut edges become absorbing."""
        if not 0 <= start < stop <= self.n:
            raise DiscretizationError(f"bad node range {start}:{stop} for n={self.n}")
        killing = self.killing[start:stop].copy()
        if start > 0:
            killing[0] += self.conductance[start - 1]
        if stop < self.n:
            killing[-1] += self.conductance[stop - 1]
        bleft = self.boundary[0] if start == 0 else ABSORBING
        bright = self.boundary[1] if stop == self.n else ABSORBING
        nodes = self.nodes[start:stop]
        a = self.grid.a if start == 0 else self.nodes[start - 1]
        b = self.grid.b if stop == self.n else self.nodes[stop]
        return GeneratorMatrix(
            grid=Grid(a, b, nodes),
            weights=self.weights[start:stop].copy(),
            conductance=self.conductance[start : stop - 1].copy(),
            killing=killing,
            boundary=(bleft, bright),
            model_name=self.model_name,
        )


def _check_boundary(boundary):
    for side in boundary:
        if side not in _OFFSET:
            raise DiscretizationError(f"unknown boundary type {side!r}")


def build_generator(
    model: DiffusionModel, interval, n: int, boundary=(ABSORBING, ABSORBING)
) -> GeneratorMatrix:
    """Generator on ``interval`` with per-side boundary behaviour."""
    a, b = map(float, interval)
    _check_boundary(boundary)
    if n < 3:
        raise DiscretizationError(f"need n >= 3 nodes, got {n}")
    if not (np.isfinite(a) and np.isfinite(b) and a < b):
        raise DiscretizationError(f"interval must be finite and non-empty, got {interval}")
    if not model.contains(a, b):
        raise DiscretizationError(f"interval {interval} outside natural domain {model.domain} of {model.name}")
    off_l, off_r = _OFFSET[boundary[0]], _OFFSET[boundary[1]]
    h = (b - a) / (n - 1 + off_l + off_r)
    nodes = a + off_l * h + h * np.arange(n)
    nodes[-1] = b - off_r * h
    scale, speed = model.densities()
    try:
        weights = speed(nodes) * h
        ds = integrate_segments(scale, nodes[:-1], nodes[1:])
        ghost = integrate_segments(scale, [a, nodes[-1]], [nodes[0], b])
    except ModelDomainError as exc:
        raise DiscretizationError(f"{model.name}: {exc}") from None
    if not np.all(np.isfinite(ds)) or np.any(ds <= 0):
        raise DiscretizationError(f"{model.name}: non-finite scale increment on {interval}")
    bc = []
    for side, g in zip(boundary, ghost):
        if side == REFLECTING:
            bc.append(0.0)
        elif not np.isfinite(g) or g <= 0:
            raise DiscretizationError(
                f"{model.name}: boundary inaccessible (scale increment {g}) on {interval}"
            )
        else:
            bc.append(1.0 / g)
    killing = np.zeros(n)
    killing[0] += bc[0]
    killing[-1] += bc[1]
    return GeneratorMatrix(
        grid=Grid(a, b, nodes),
        weights=weights,
        conductance=1.0 / ds,
        killing=killing,
        boundary=tuple(boundary),
        model_name=model.name,
    )


def build_killed_generator(model: DiffusionModel, interval, n: int) -> GeneratorMatrix:
    """Dirichlet (killed at exit) generator; ghost values vanish at both ends."""
    return build_generator(model, interval, n, (ABSORBING, ABSORBING))


def build_reflected_generator(model: DiffusionModel, interval, n: int) -> GeneratorMatrix:
    """Neumann generator: zero scale flux at both ends, so ``L 1 = 0``."""
    return build_generator(model, interval, n, (REFLECTING, REFLECTING))


def concatenate(parts) -> GeneratorMatrix:
    """Direct sum of generators on disjoint, ordered intervals (zero coupling)."""
    parts = list(parts)
    nodes = np.concatenate([p.nodes for p in parts])
    cond = []
    for i, p in enumerate(parts):
        cond.append(p.conductance)
        if i < len(parts) - 1:
            cond.append(np.zeros(1))
    return GeneratorMatrix(
        grid=Grid(parts[0].grid.a, parts[-1].grid.b, nodes),
        weights=np.concatenate([p.weights for p in parts]),
        conductance=np.concatenate(cond),
        killing=np.concatenate([p.killing for p in parts]),
        boundary=(parts[0].boundary[0], parts[-1].boundary[1]),
        model_name=parts[0].model_name,
    )


def build_exterior_generator(model: DiffusionModel, inner, truncation: float, step: float) -> GeneratorMatrix:
    """Killed at entry into ``[inner[0], inner[1]]``, reflected at ``+-truncation``.

    Both halves use (approximately) the spacing ``step`` so the bulk
    resolution does not depend on the truncation radius.
    """
    lo, hi = map(float, inner)
    if not -truncation < lo < hi < truncation:
        raise DiscretizationError(f"inner interval {inner} must sit inside (-{truncation}, {truncation})")
    n_left = max(3, int(round((lo + truncation) / step - 0.5)))
    n_right = max(3, int(round((truncation - hi) / step - 0.5)))
    left = build_generator(model, (-truncation, lo), n_left, (REFLECTING, ABSORBING))
    right = build_generator(model, (hi, truncation), n_right, (ABSORBING, REFLECTING))
    return concatenate([left, right])
