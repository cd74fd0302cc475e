"""One-dimensional diffusion models and their natural scale / speed.

A model is ``dX = b(X) dt + sigma(X) dW`` with generator
``(1/2) sigma^2 f'' + b f'``.  Writing ``s'`` for the scale density and
``m'`` for the speed density,

    s'(x) = exp(-int_{x0}^x 2 b / sigma^2),    m'(x) = 2 / (sigma^2 s'(x)),

the generator becomes ``d/dm d/dS`` and the process is symmetric with
respect to ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import ModelDomainError, NotNormalizableError
from .quadrature import cumulative_from, integrate_segments

Func = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DiffusionModel:
    name: str
    drift: Func
    diffusion: Func
    reference_point: float = 0.0
    scale_density: Func | None = None
    speed_density: Func | None = None
    domain: tuple[float, float] = (-math.inf, math.inf)

    @property
    def has_closed_forms(self) -> bool:
        return self.scale_density is not None and self.speed_density is not None

    def densities(self) -> tuple[Func, Func]:
        """Scale and speed densities, closed forms preferred."""
        if self.has_closed_forms:
            return _guarded(self.scale_density, self), _guarded(self.speed_density, self)
        return scale_speed_from_sde(self)

    def contains(self, a: float, b: float) -> bool:
        lo, hi = self.domain
        return lo <= a < b <= hi


@dataclass(frozen=True)
class ModelCatalogEntry:
    model: DiffusionModel
    tags: tuple[str, ...]
    # name -> (value, oracle description)
    known_values: dict[str, tuple[float, str]] = field(default_factory=dict)


def _guarded(fn: Func, model: DiffusionModel) -> Func:
    def wrapped(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            val = np.asarray(fn(x), dtype=float)
        if not np.all(np.isfinite(val)) or np.any(val <= 0):
            raise ModelDomainError(f"{model.name}: density not finite/positive on requested points")
        return val

    return wrapped


def scale_speed_from_sde(model: DiffusionModel) -> tuple[Func, Func]:
    """Scale and speed densities obtained by quadrature of ``2b/sigma^2``.

    Closed forms on the model are ignored; this is the independent route
    used to cross-check catalog entries.
    """
    x0 = float(model.reference_point)

    def ratio(x):
        with np.errstate(all="ignore"):
            sig = np.asarray(model.diffusion(x), dtype=float)
            val = 2.0 * np.asarray(model.drift(x), dtype=float) / sig**2
        if not np.all(np.isfinite(val)) or np.any(sig <= 0):
            raise ModelDomainError(f"{model.name}: 2b/sigma^2 not finite on the requested interval")
        return val

    def potential(x):
        x = np.asarray(x, dtype=float)
        lo, hi = model.domain
        if np.any(x <= lo) or np.any(x >= hi):
            raise ModelDomainError(f"{model.name}: point outside natural domain {model.domain}")
        return cumulative_from(ratio, x0, x)

    def scale(x):
        return np.exp(-potential(x))

    def speed(x):
        x = np.asarray(x, dtype=float)
        sig = np.asarray(model.diffusion(x), dtype=float)
        return 2.0 * np.exp(potential(x)) / sig**2

    return scale, speed


@dataclass(frozen=True)
class InvariantDensity:
    """Speed density normalised on an interval; ``mass`` is m(interval)."""

    speed: Func
    interval: tuple[float, float]
    mass: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.interval[0]) & (x <= self.interval[1])
        out = np.zeros(x.shape)
        if np.any(inside):
            out[inside] = self.speed(x[inside]) / self.mass
        return out


def _tail_mass(speed, anchor, sign, name):
    # geometric shells [anchor + s 2^k, anchor + s 2^(k+1)] until they stop mattering
    part = float(integrate_segments(speed, [min(anchor, anchor + sign)], [max(anchor, anchor + sign)])[0])
    width = 1.0
    for _ in range(60):
        ends = sorted((anchor + sign * width, anchor + sign * 2 * width))
        try:
            piece = float(integrate_segments(speed, [ends[0]], [ends[1]], rtol=1e-12)[0])
        except ModelDomainError:
            break
        part += piece
        if piece <= 1e-16 * part:
            return part
        width *= 2
    raise NotNormalizableError(f"{name}: speed mass diverges")


def speed_mass(model: DiffusionModel, a: float, b: float) -> float:
    """m((a, b)); either end may be infinite."""
    _, speed = model.densities()
    if math.isfinite(a) and math.isfinite(b):
        return float(integrate_segments(speed, [a], [b], rtol=1e-12)[0])
    lo = a if math.isfinite(a) else None
    hi = b if math.isfinite(b) else None
    centre = lo if lo is not None else hi if hi is not None else float(model.reference_point)
    total = 0.0
    if lo is None:
        total += _tail_mass(speed, centre, -1, model.name)
    if hi is None:
        total += _tail_mass(speed, centre, +1, model.name)
    if lo is not None and hi is not None:  # pragma: no cover - handled above
        total += float(integrate_segments(speed, [lo], [hi])[0])
    return total


def invariant_probability(model: DiffusionModel, interval: tuple[float, float]) -> InvariantDensity:
    """Normalised speed density on ``interval`` (truncated invariant law)."""
    a, b = interval
    if not a < b:
        raise ValueError(f"empty interval {interval}")
    _, speed = model.densities()
    mass = speed_mass(model, a, b)
    if not math.isfinite(mass) or mass <= 0:
        raise NotNormalizableError(f"{model.name}: speed mass on {interval} is {mass}")
    return InvariantDensity(speed=speed, interval=(a, b), mass=mass)


# -- catalog -----------------------------------------------------------------


def brownian(name: str = "BM2") -> DiffusionModel:
    """Zero drift, sigma = sqrt(2): generator d^2/dx^2, s' = m' = 1."""
    sq2 = math.sqrt(2.0)
    return DiffusionModel(
        name=name,
        drift=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        diffusion=lambda x: np.full_like(np.asarray(x, dtype=float), sq2),
        scale_density=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        speed_density=lambda x: np.ones_like(np.asarray(x, dtype=float)),
    )


def ornstein_uhlenbeck(name: str = "OU") -> DiffusionModel:
    """b = -x, sigma = sqrt(2): Hermite spectrum {0, 1, 2, ...}."""
    sq2 = math.sqrt(2.0)
    return DiffusionModel(
        name=name,
        drift=lambda x: -np.asarray(x, dtype=float),
        diffusion=lambda x: np.full_like(np.asarray(x, dtype=float), sq2),
        scale_density=lambda x: np.exp(np.asarray(x, dtype=float) ** 2 / 2),
        speed_density=lambda x: np.exp(-np.asarray(x, dtype=float) ** 2 / 2),
    )


def heavy_tail(r: float, name: str | None = None) -> DiffusionModel:
    """b = -r x / (1 + x^2), sigma = 1, invariant law proportional to (1 + x^2)^-r."""
    if r <= 0.5:
        raise ValueError("heavy-tail exponent must exceed 1/2 for a finite speed measure")
    r = float(r)
    return DiffusionModel(
        name=name or f"HT({r:g})",
        drift=lambda x: -r * np.asarray(x, dtype=float) / (1 + np.asarray(x, dtype=float) ** 2),
        diffusion=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        scale_density=lambda x: (1 + np.asarray(x, dtype=float) ** 2) ** r,
        speed_density=lambda x: 2.0 * (1 + np.asarray(x, dtype=float) ** 2) ** (-r),
    )


def heavy_tail_total_mass(r: float) -> float:
    """int 2 (1 + x^2)^-r dx over the real line."""
    return 2.0 * math.sqrt(math.pi) * math.exp(special.gammaln(r - 0.5) - special.gammaln(r))


def veretennikov_margin(model: DiffusionModel, r: float, xs) -> np.ndarray:
    """``-r x^2/(1+x^2) - x b(x)``; non-negative wherever the radial drift bound holds."""
    xs = np.asarray(xs, dtype=float)
    return -r * xs**2 / (1 + xs**2) - xs * np.asarray(model.drift(xs), dtype=float)


def _catalog() -> list[ModelCatalogEntry]:
    pi2 = math.pi**2
    entries = [
        ModelCatalogEntry(
            brownian(),
            ("brownian", "bounded-test", "closed-form"),
            {
                "killed_(0,1)_xi1": (pi2, "Sturm-Liouville: sin(k pi x), xi_k = k^2 pi^2"),
                "E_1/2_tau": (1 / 8, "solve v'' = -1, v(0) = v(1) = 0"),
                "E_1/2_tau^2": (5 / 192, "v_2 = (x/12)(1 - 2x^2 + x^3)"),
                "int_v1_(0,1)": (1 / 12, "sum over odd k of 8/(k^4 pi^4)"),
                "int_v2/2_(0,1)": (1 / 120, "sum over odd k of 8/(k^6 pi^6)"),
            },
        ),
        ModelCatalogEntry(
            ornstein_uhlenbeck(),
            ("gaussian", "spectral-gap", "closed-form"),
            {
                "xi2_reflected": (1.0, "Hermite polynomials, spectrum {0,1,2,...}"),
                "speed_mass_R": (math.sqrt(2 * math.pi), "Gaussian integral"),
            },
        ),
    ]
    for r in (2.0, 4.0, 6.0):
        entries.append(
            ModelCatalogEntry(
                heavy_tail(r),
                ("heavy-tail", "polynomial-moments", "closed-form"),
                {
                    "speed_mass_R": (heavy_tail_total_mass(r), "Beta integral 2 sqrt(pi) G(r-1/2)/G(r)"),
                    "moment_order_mu": (r - 0.5, "int E_x tau^p m(dx) < oo iff p < r - 1/2"),
                    "moment_order_x": (r + 0.5, "E_x tau^p = oo for p > r + 1/2"),
                },
            )
        )
    return entries


CATALOG: dict[str, ModelCatalogEntry] = {e.model.name: e for e in _catalog()}


def get_model(name: str) -> DiffusionModel:
    """Catalog lookup; ``HT(<r>)`` is accepted for any r > 1/2."""
    if name in CATALOG:
        return CATALOG[name].model
    if name.startswith("HT(") and name.endswith(")"):
        try:
            r = float(name[3:-1])
        except ValueError:
            pass
        else:
            return heavy_tail(r)
    raise KeyError(f"unknown model {name!r}; known: {', '.join(CATALOG)}")


def list_models(tag: str | None = None) -> list[ModelCatalogEntry]:
    entries = sorted(CATALOG.values(), key=lambda e: e.model.name)
    if tag is not None:
        entries = [e for e in entries if tag in e.tags]
    return entries


def model_from_expressions(
    name: str, drift: str, diffusion: str, reference_point: float = 0.0,
    domain: tuple[float, float] = (-math.inf, math.inf),
) -> DiffusionModel:
    from .expr import parse_expression

    return DiffusionModel(
        name=name,
        drift=parse_expression(drift),
        diffusion=parse_expression(diffusion),
        reference_point=reference_point,
        domain=domain,
    )
