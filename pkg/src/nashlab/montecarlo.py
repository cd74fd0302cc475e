"""Euler-Maruyama path simulation: hitting times and occupation deviations.

Paths are processed in fixed-size blocks.  Block ``j`` draws from a Philox
stream keyed by ``(seed, j)``, so results depend only on the configuration,
never on how blocks are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .model import DiffusionModel
from .quadrature import integrate_segments


@dataclass(frozen=True)
class SimulationConfig:
    model: DiffusionModel
    dt: float
    n_paths: int
    seed: int = 0
    truncation: float | None = None
    bridge: bool = True
    block_size: int = 4096
    max_time: float = math.inf
    noise_scale: float = 1.0  # 0 gives the deterministic flow X' = b(X)
    workers: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        if self.block_size < 1:
            raise ValueError("block_size must be at least 1")

    def blocks(self):
        for j, start in enumerate(range(0, self.n_paths, self.block_size)):
            yield j, start, min(self.n_paths, start + self.block_size)

    def rng(self, block: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(block,))
        return np.random.Generator(np.random.Philox(seq))


# -- regions -------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    """Open interval ``(a, b)``; the process exits through either end."""

    a: float
    b: float

    def contains(self, x):
        return (x > self.a) & (x < self.b)

    def bridge_probability(self, x, y, var):
        pa = np.exp(-2.0 * np.maximum(x - self.a, 0) * np.maximum(y - self.a, 0) / var)
        pb = np.exp(-2.0 * np.maximum(self.b - x, 0) * np.maximum(self.b - y, 0) / var)
        return 1.0 - (1.0 - pa) * (1.0 - pb)


@dataclass(frozen=True)
class Exterior:
    """Complement of the closed interval ``[a, b]``."""

    a: float
    b: float

    def contains(self, x):
        return (x < self.a) | (x > self.b)

    def bridge_probability(self, x, y, var):
        right = x > self.b
        d1 = np.where(right, x - self.b, self.a - x)
        d2 = np.where(right, y - self.b, self.a - y)
        return np.exp(-2.0 * np.maximum(d1, 0) * np.maximum(d2, 0) / var)


# -- stationary starts -----------------------------------------------------------


class StationarySampler:
    """Inverse-CDF sampling of the truncated invariant law on a fine grid.

    The CDF is exact at cell faces (adaptive quadrature of ``m'``) and
    linear in between.
    """

    def __init__(self, model: DiffusionModel, interval, cells: int = 200_000, breakpoints=()):
        a, b = map(float, interval)
        faces = np.linspace(a, b, cells + 1)
        extra = [p for p in breakpoints if a < p < b]
        self.faces = np.unique(np.concatenate([faces, extra]))
        _, speed = model.densities()
        self.masses = integrate_segments(speed, self.faces[:-1], self.faces[1:])
        self.interval = (a, b)

    def _cdf(self, masses):
        cdf = np.concatenate([[0.0], np.cumsum(masses)])
        return cdf / cdf[-1]

    def probability(self, region) -> float:
        mid = 0.5 * (self.faces[:-1] + self.faces[1:])
        return float(np.sum(self.masses[region.contains(mid)]) / np.sum(self.masses))

    def sample(self, u, region=None):
        masses = self.masses
        if region is not None:
            mid = 0.5 * (self.faces[:-1] + self.faces[1:])
            masses = np.where(region.contains(mid), masses, 0.0)
        return np.interp(u, self._cdf(masses), self.faces)


# -- core stepping ---------------------------------------------------------------


def _coefficients(model, x, noise):
    with np.errstate(all="ignore"):
        b = np.asarray(model.drift(x), dtype=float) * np.ones_like(x)
        s = np.asarray(model.diffusion(x), dtype=float) * noise * np.ones_like(x)
    return b, s


def _reflect(y, L):
    if L is None:
        return y
    # fold repeatedly; a single Euler step rarely overshoots twice
    for _ in range(4):
        y = np.where(y > L, 2 * L - y, y)
        y = np.where(y < -L, -2 * L - y, y)
    return np.clip(y, -L, L)


@dataclass
class PathSummary:
    final: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray
    errors: int


def _simulate_block(cfg: SimulationConfig, block, x0, horizon):
    rng = cfg.rng(block)
    x = np.array(x0, dtype=float)
    lo, hi = x.copy(), x.copy()
    ok = np.ones(x.size, dtype=bool)
    steps = int(round(horizon / cfg.dt))
    sq = math.sqrt(cfg.dt)
    for _ in range(steps):
        z = rng.standard_normal(x.size)
        b, s = _coefficients(cfg.model, x, cfg.noise_scale)
        y = _reflect(x + b * cfg.dt + s * sq * z, cfg.truncation)
        bad = ~np.isfinite(y)
        ok &= ~bad
        x = np.where(ok, y, x)
        lo = np.minimum(lo, x)
        hi = np.maximum(hi, x)
    return x, lo, hi, int(np.sum(~ok))


def _map_blocks(cfg, fn):
    jobs = list(cfg.blocks())
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            return list(pool.map(lambda job: fn(*job), jobs))
    return [fn(*job) for job in jobs]


def _starts(x0, n):
    x0 = np.asarray(x0, dtype=float)
    return np.broadcast_to(x0, (n,)).copy() if x0.ndim == 0 else x0


def simulate_path(cfg: SimulationConfig, x0, horizon: float) -> PathSummary:
    """Run ``n_paths`` paths to ``horizon`` keeping only streaming summaries."""
    starts = _starts(x0, cfg.n_paths)
    parts = _map_blocks(cfg, lambda j, a, b: _simulate_block(cfg, j, starts[a:b], horizon))
    return PathSummary(
        final=np.concatenate([p[0] for p in parts]),
        minimum=np.concatenate([p[1] for p in parts]),
        maximum=np.concatenate([p[2] for p in parts]),
        errors=sum(p[3] for p in parts),
    )


# -- hitting times -----------------------------------------------------------------


@dataclass
class HittingSample:
    tau: np.ndarray  # NaN for censored or aborted paths
    start: str
    moments: dict = field(default_factory=dict)  # order -> (estimate, standard error)
    censored_fraction: float = 0.0
    errors: int = 0

    def estimate(self, order: int) -> tuple[float, float]:
        return self.moments[order]


def _hitting_block(cfg: SimulationConfig, block, x0, region):
    rng = cfg.rng(block)
    n = x0.size
    tau = np.full(n, np.nan)
    status = np.zeros(n, dtype=np.int8)  # 0 running, 1 exited, 2 censored, 3 error
    inside = region.contains(x0)
    tau[~inside] = 0.0
    status[~inside] = 1
    idx = np.flatnonzero(inside)
    x = x0[idx].copy()
    sq = math.sqrt(cfg.dt)
    max_steps = int(math.ceil(cfg.max_time / cfg.dt)) if math.isfinite(cfg.max_time) else None
    step = 0
    while idx.size:
        if max_steps is not None and step >= max_steps:
            status[idx] = 2
            break
        z = rng.standard_normal(idx.size)
        b, s = _coefficients(cfg.model, x, cfg.noise_scale)
        y = _reflect(x + b * cfg.dt + s * sq * z, cfg.truncation)
        bad = ~np.isfinite(y)
        left = ~region.contains(y) & ~bad
        if cfg.bridge:
            u = rng.random(idx.size)
            var = np.maximum(s * s * cfg.dt, np.finfo(float).tiny)
            left |= ~left & ~bad & (u < region.bridge_probability(x, y, var))
        tau[idx[left]] = (step + 0.5) * cfg.dt
        status[idx[left]] = 1
        status[idx[bad]] = 3
        keep = ~(left | bad)
        idx, x = idx[keep], y[keep]
        step += 1
    return tau, status


def sample_hitting_moments(cfg: SimulationConfig, region, start, orders=(1, 2), sampler=None) -> HittingSample:
    """Exit times of ``region`` from a fixed point or from the stationary law on it.

    ``start`` is a float, or ``"stationary"`` (``sampler`` required), in which
    case starts follow the invariant law restricted to ``region``.
    """
    if isinstance(start, str):
        if start != "stationary" or sampler is None:
            raise ValueError("start must be a number or 'stationary' with a sampler")
        starts = np.empty(cfg.n_paths)
        for j, a, b in cfg.blocks():
            u = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed, spawn_key=(j, 1)))).random(b - a)
            starts[a:b] = sampler.sample(u, region)
        label = "stationary"
    else:
        if not region.contains(np.array([float(start)]))[0]:
            raise ValueError(f"start {start} outside the region")
        starts = np.full(cfg.n_paths, float(start))
        label = f"x={float(start)!r}"
    parts = _map_blocks(cfg, lambda j, a, b: _hitting_block(cfg, j, starts[a:b], region))
    tau = np.concatenate([p[0] for p in parts])
    status = np.concatenate([p[1] for p in parts])
    done = tau[status == 1]
    moments = {}
    for k in orders:
        vals = done**k
        se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.inf
        moments[k] = (float(np.mean(vals)) if vals.size else math.nan, se)
    return HittingSample(
        tau=tau, start=label, moments=moments,
        censored_fraction=float(np.mean(status == 2)), errors=int(np.sum(status == 3)),
    )


# -- deviation experiment ----------------------------------------------------------


def deviation_bound(lam: float, t: float, l: float, C: float = 1.0) -> float:
    """``C max(lam^-(l+2), lam^-2(l+1)) t^-(l+1)``."""
    return C * max(lam ** (-(l + 2)), lam ** (-2 * (l + 1))) * t ** (-(l + 1))


def clopper_pearson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    alpha = 1 - level
    lo = 0.0 if k == 0 else float(stats.beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


@dataclass
class DeviationResult:
    l: float
    lam: float
    t: float
    count: int
    trials: int
    probability: float
    ci: tuple[float, float]
    bound: float
    low_power: bool

    def as_row(self) -> dict:
        return {
            "l": self.l, "lambda": self.lam, "horizon_time": self.t, "count": self.count,
            "trials": self.trials, "probability": self.probability, "ci_low": self.ci[0],
            "ci_high": self.ci[1], "bound_C1": self.bound, "low_power": self.low_power,
        }


@dataclass
class DeviationExperiment:
    results: list
    survival: dict  # t -> (P_mu(tau_G > t), ci)
    mu_v: float
    errors: int

    def cells(self, lam: float) -> list:
        return sorted((r for r in self.results if r.lam == lam), key=lambda r: r.t)


def _occupation_block(cfg: SimulationConfig, block, x0, inner, checkpoints):
    rng = cfg.rng(block)
    x = x0.copy()
    n = x.size
    v_prev = ((x >= inner[0]) & (x <= inner[1])).astype(float)
    entered = v_prev > 0
    first_entry = np.where(entered, 0.0, np.inf)
    occ = np.zeros(n)
    ok = np.ones(n, dtype=bool)
    steps = {int(round(t / cfg.dt)): t for t in checkpoints}
    averages = {}
    sq = math.sqrt(cfg.dt)
    for k in range(1, max(steps) + 1):
        z = rng.standard_normal(n)
        b, s = _coefficients(cfg.model, x, cfg.noise_scale)
        y = _reflect(x + b * cfg.dt + s * sq * z, cfg.truncation)
        bad = ~np.isfinite(y)
        ok &= ~bad
        y = np.where(ok, y, x)
        v = ((y >= inner[0]) & (y <= inner[1])).astype(float)
        hit = (v > 0) & ~entered
        if cfg.bridge:
            u = rng.random(n)
            var = np.maximum(s * s * cfg.dt, np.finfo(float).tiny)
            p = Exterior(*inner).bridge_probability(x, y, var)
            hit |= ~entered & ~hit & (u < p)
        first_entry[hit] = (k - 0.5) * cfg.dt
        entered |= hit
        occ += 0.5 * (v_prev + v) * cfg.dt
        v_prev, x = v, y
        if k in steps:
            averages[steps[k]] = occ / steps[k]
    return averages, first_entry, int(np.sum(~ok))


def deviation_experiment(
    cfg: SimulationConfig, inner, l: float, lambdas, times, sampler: StationarySampler, min_trials: int = 100
) -> DeviationExperiment:
    """Empirical ``P_mu(|(1/t) int_0^t V(X_s) ds - mu(V)| >= 4 lam)`` with ``V = 1_[a,b]``.

    Paths start from the truncated invariant law; ``P_mu(tau_G > t)`` for the
    exterior region ``G`` comes from the same paths.
    """
    inner = (float(inner[0]), float(inner[1]))
    mu_v = sampler.probability(_Closed(*inner))
    starts = np.empty(cfg.n_paths)
    for j, a, b in cfg.blocks():
        u = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed, spawn_key=(j, 1)))).random(b - a)
        starts[a:b] = sampler.sample(u)
    parts = _map_blocks(cfg, lambda j, a, b: _occupation_block(cfg, j, starts[a:b], inner, times))
    errors = sum(p[2] for p in parts)
    first_entry = np.concatenate([p[1] for p in parts])
    results = []
    for t in sorted(times):
        avg = np.concatenate([p[0][t] for p in parts])
        dev = np.abs(avg - mu_v)
        for lam in lambdas:
            trials = cfg.n_paths - errors
            if 4 * lam > 1:
                # |avg - mu(V)| <= 1 always, so the event is empty
                count = 0
            else:
                count = int(np.sum(dev >= 4 * lam))
            results.append(
                DeviationResult(
                    l=l, lam=lam, t=t, count=count, trials=trials,
                    probability=count / trials, ci=clopper_pearson(count, trials),
                    bound=deviation_bound(lam, t, l), low_power=trials < min_trials,
                )
            )
    survival = {}
    for t in sorted(times):
        k = int(np.sum(first_entry > t))
        survival[t] = (k / cfg.n_paths, clopper_pearson(k, cfg.n_paths))
    return DeviationExperiment(results=results, survival=survival, mu_v=mu_v, errors=errors)


@dataclass(frozen=True)
class _Closed:
    a: float
    b: float

    def contains(self, x):
        return (x >= self.a) & (x <= self.b)


# -- slope fits on count data --------------------------------------------------------


def loglog_slope(times, probabilities) -> tuple[float, int]:
    """Least-squares slope of log p against log t over cells with p > 0.

    Returns ``(slope, cells_used)``; the slope is NaN when fewer than two
    cells carry a positive probability.
    """
    t = np.asarray(times, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    pos = p > 0
    if np.sum(pos) < 2:
        return math.nan, int(np.sum(pos))
    return float(np.polyfit(np.log(t[pos]), np.log(p[pos]), 1)[0]), int(np.sum(pos))


def power_law_mle(times, counts, trials, level: float = 0.95) -> tuple[float, float]:
    """Binomial maximum-likelihood slope of ``p(t) = A t^beta`` and a profile upper bound.

    Zero-count cells are admissible.  The estimate is clipped to
    ``[-20, 20]``; with a single nonzero cell it sits at the lower clip.
    """
    t = np.log(np.asarray(times, dtype=float))
    k = np.asarray(counts, dtype=float)
    n = np.asarray(trials, dtype=float)
    tc = t - t.mean()

    def nll(alpha, beta):
        logp = np.minimum(alpha + beta * tc, -1e-12)
        p = np.exp(logp)
        return -float(np.sum(k * logp + (n - k) * np.log1p(-p)))

    def profile(beta):
        res = optimize.minimize_scalar(lambda a: nll(a, beta), bounds=(-60, 0), method="bounded")
        return res.fun

    betas = np.linspace(-20, 20, 801)
    prof = np.array([profile(b) for b in betas])
    best = int(np.argmin(prof))
    cut = prof[best] + 0.5 * stats.chi2.ppf(level, 1)
    upper = betas[best:][prof[best:] <= cut][-1]
    return float(betas[best]), float(upper)
