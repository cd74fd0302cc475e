"""Executable checks of the moment / spectral / Nash relations.

Each checker computes the quantities on both sides through separate
numerical routes and returns a :class:`VerificationReport`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from .discretize import (
    GeneratorMatrix,
    build_exterior_generator,
    build_killed_generator,
    build_reflected_generator,
)
from .errors import WindowError
from .model import DiffusionModel
from .moments import modulated_moment, moment_recursion, pairing
from .report import VerificationReport
from .spectral import (
    WEIGHT_FLOOR,
    Exponential,
    Polynomial,
    RateFunction,
    SpectralDecomposition,
    eigendecompose,
    phi_functional,
    spectral_weights,
)


def _rel(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b):
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return math.inf
    return abs(a - b) / max(abs(b), np.finfo(float).tiny)


# -- route (iii): time integral of the semigroup norm ---------------------------


def semigroup_time_integral(dec: SpectralDecomposition, f, rate: RateFunction,
                            u_range=(-30.0, 30.0), panels: int = 4000) -> float:
    """``int_0^oo r(t) ||P_{t/2} f||^2 dt`` by Simpson's rule in ``u = ln t``.

    The integrand is evaluated from the spectral series in log space; the
    pieces below ``e^{u_min}`` and above ``e^{u_max}`` are added from
    bounds on the extreme eigenvalues.
    """
    w = spectral_weights(dec, f).weights
    xi = dec.eigenvalues
    keep = w > WEIGHT_FLOOR * max(w.sum(), np.finfo(float).tiny)
    if not np.any(keep):
        return 0.0
    w, xi = w[keep], xi[keep]
    if isinstance(rate, Exponential):
        if np.any(xi <= rate.lam):
            return math.inf
        log_r = lambda t: rate.lam * t
    elif isinstance(rate, Polynomial):
        if np.any(xi <= 0):
            return math.inf
        log_r = lambda t: rate.l * np.log(t)
    else:
        raise TypeError(f"unsupported rate {rate!r}")
    u = np.linspace(u_range[0], u_range[1], panels + 1)
    t = np.exp(u)
    expo = (log_r(t) + u)[:, None] - t[:, None] * xi[None, :] + np.log(w)[None, :]
    top = expo.max(axis=1, keepdims=True)
    vals = np.exp(top[:, 0]) * np.sum(np.exp(expo - top), axis=1)
    body = float(integrate.simpson(vals, x=u))
    t_lo, t_hi = t[0], t[-1]
    # lower piece: R(t_lo) * sum w e^{-xi s} for s in [0, t_lo]; use the midpoint of its bounds
    r_lo = float(rate.R(t_lo))
    lower = 0.5 * r_lo * (float(np.sum(w)) + float(np.sum(w * np.exp(-xi * t_lo))))
    # upper piece: exact incomplete integrals mode by mode
    if isinstance(rate, Exponential):
        gap = xi - rate.lam
        upper = float(np.sum(w * np.exp(-gap * t_hi) / gap))
    else:
        a = rate.l + 1
        upper = float(np.sum(w * special.gamma(a) * special.gammaincc(a, xi * t_hi) / xi**a))
    return body + lower + upper


def verify_equality_chain(
    model: DiffusionModel, interval, rate: RateFunction, f=None, n: int = 2000,
    tol_solve: float = 1e-6, tol_quad: float = 1e-4, expected: float | None = None,
) -> VerificationReport:
    """Linear-solve pairing vs spectral sum vs semigroup time integral."""
    rep = VerificationReport(
        "verify-equality",
        inputs={"model": model.name, "interval": list(interval), "n": n, "rate": rate.describe(),
                "f": "ones" if f is None else "user", "expected": expected},
        tolerances={"solve_vs_spectral": tol_solve, "quadrature_vs_spectral": tol_quad},
    )
    gen = build_killed_generator(model, interval, n)
    dec = eigendecompose(gen)
    f = np.ones(gen.n) if f is None else np.asarray(f, dtype=float)
    rep.quantity("xi_1", float(dec.eigenvalues[0]), "spectral")
    try:
        route_i = pairing(gen, f, rate)
    except ValueError as exc:
        route_i = None
        rep.notes.append(f"route (i) unavailable: {exc}")
    route_ii = modulated_moment(dec, f, rate)
    route_iii = semigroup_time_integral(dec, f, rate)
    if route_i is not None:
        rep.quantity("pairing", route_i, "linear-solve (Dynkin recursion / resolvent)")
    rep.quantity("spectral_sum", route_ii, "eigendecomposition: sum Lambda_r(xi_k) w_k")
    rep.quantity("time_integral", route_iii, "log-time Simpson over sum e^{-xi_k t} w_k")
    divergent = [math.isinf(v) for v in (route_i, route_ii, route_iii) if v is not None]
    if any(divergent):
        rep.check("all routes infinite", all(divergent), f"routes={route_i}, {route_ii}, {route_iii}")
    else:
        if route_i is not None:
            gap = _rel(route_i, route_ii)
            rep.check("pairing == spectral", gap <= tol_solve, f"rel gap {gap:.3e}", tol_solve)
        gap = _rel(route_iii, route_ii)
        rep.check("time integral == spectral", gap <= tol_quad, f"rel gap {gap:.3e}", tol_quad)
    if expected is not None:
        for name, val, tol in (("pairing", route_i, tol_solve), ("spectral_sum", route_ii, tol_solve),
                               ("time_integral", route_iii, tol_quad)):
            if val is None:
                continue
            gap = _rel(val, expected)
            rep.check(f"{name} == expected", gap <= tol, f"value {val!r} vs {expected!r}, rel {gap:.3e}", tol)
    return rep.finish()


# -- Nash inequality for the killed process -----------------------------------------


@dataclass(frozen=True)
class NashWitness:
    l: Fraction
    lhs: float
    energy: float
    phi: float

    @property
    def p(self) -> Fraction:
        return (self.l + 2) / (self.l + 1)

    @property
    def q(self) -> Fraction:
        return self.l + 2

    @property
    def rhs(self) -> float:
        if self.lhs == 0 and self.energy == 0:
            return 0.0
        return self.energy ** float(1 / self.p) * self.phi ** float(1 / self.q)

    @property
    def slack(self) -> float:
        """``(rhs - lhs) / lhs``; zero when both sides vanish."""
        scale = max(self.lhs, self.rhs)
        return 0.0 if scale == 0 else (self.rhs - self.lhs) / scale


def bounded_test_functions(rng: np.random.Generator, nodes, count: int) -> np.ndarray:
    """``count`` grid functions with values in [-1, 1].

    Rows cycle through three families: independent uniform noise, random
    trigonometric sums on the grid's span, and random step functions.
    """
    nodes = np.asarray(nodes, dtype=float)
    span = max(nodes[-1] - nodes[0], np.finfo(float).tiny)
    u = (nodes - nodes[0]) / span
    out = np.empty((count, nodes.size))
    for i in range(count):
        kind = i % 3
        if kind == 0:
            out[i] = rng.uniform(-1, 1, nodes.size)
        elif kind == 1:
            freq = rng.uniform(0.5, 12, 5)
            amp = rng.normal(size=5)
            phase = rng.uniform(0, 2 * np.pi, 5)
            g = np.sin(np.outer(u, freq) * np.pi + phase) @ amp
            out[i] = g / max(np.max(np.abs(g)), np.finfo(float).tiny)
        else:
            cuts = np.sort(rng.uniform(0, 1, 4))
            levels = rng.uniform(-1, 1, 5)
            out[i] = levels[np.searchsorted(cuts, u)]
    return out


def nash_exponents(l) -> tuple[Fraction, Fraction]:
    lf = Fraction(l).limit_denominator(10**6) if not isinstance(l, Fraction) else l
    p, q = (lf + 2) / (lf + 1), lf + 2
    if 1 / p + 1 / q != 1:  # pragma: no cover - exact arithmetic
        raise AssertionError("conjugate exponents broken")
    return p, q


def nash_witness(dec: SpectralDecomposition, f, l) -> NashWitness:
    mu = spectral_weights(dec, f)
    xi, w = mu.eigenvalues, mu.weights
    lf = Fraction(l).limit_denominator(10**6)
    return NashWitness(
        l=lf, lhs=float(np.sum(w)), energy=float(np.sum(xi * w)),
        phi=float(np.sum(xi ** (-(float(lf) + 1)) * w)),
    )


def verify_nash_killed(
    dec: SpectralDecomposition, l: float, fs, t_values=None, slack_tol: float = 1e-12,
    homogeneity_tol: float = 1e-12,
) -> VerificationReport:
    """``||f||^2 <= E(f,f)^{1/p} Phi(f)^{1/q}`` plus homogeneity and contractivity of ``Phi``."""
    if not l > 0:
        raise ValueError("l must be positive")
    p, q = nash_exponents(l)
    fs = np.atleast_2d(np.asarray(fs, dtype=float))
    t_values = np.logspace(-3, 1, 20) if t_values is None else np.asarray(t_values, dtype=float)
    rep = VerificationReport(
        "verify-nash-killed",
        inputs={"l": l, "p": str(p), "q": str(q), "functions": len(fs), "n": dec.n,
                "t_values": len(t_values)},
        tolerances={"slack": slack_tol, "homogeneity": homogeneity_tol},
    )
    if not dec.killed or dec.eigenvalues[0] <= 0:
        rep.check("killed spectrum positive", False, f"xi_1={dec.eigenvalues[0]!r}")
        return rep.finish()
    rep.quantity("xi_1", float(dec.eigenvalues[0]), "spectral")
    coef = dec.coefficients(fs)
    w = coef**2
    xi = dec.eigenvalues
    lhs = w.sum(axis=1)
    energy = w @ xi
    phi = w @ xi ** (-(l + 1))
    rhs = energy ** float(1 / p) * phi ** float(1 / q)
    scale = np.maximum(lhs, rhs)
    slack = np.where(scale > 0, (rhs - lhs) / np.where(scale > 0, scale, 1), 0.0)
    worst = float(slack.min())
    rep.quantity("min_slack", worst, "Hoelder split over spectral atoms")
    rep.check("Nash inequality", worst >= -slack_tol, f"min relative slack {worst:.3e}", slack_tol)
    phi2 = (4 * w) @ xi ** (-(l + 1))
    hom = float(np.max(np.abs(phi2 / np.where(phi > 0, 4 * phi, 1) - 1) * (phi > 0)))
    rep.quantity("homogeneity_defect", hom, "Phi(2f) vs 4 Phi(f), weights recomputed")
    rep.check("Phi(2f) == 4 Phi(f)", hom <= homogeneity_tol, f"max rel defect {hom:.3e}", homogeneity_tol)
    worst_c = -math.inf
    for t in t_values:
        phit = (w * np.exp(-2 * xi * t)) @ xi ** (-(l + 1))
        worst_c = max(worst_c, float(np.max((phit - phi) / np.where(phi > 0, phi, 1))))
    rep.quantity("max_contraction_excess", worst_c, "Phi(P_t f) / Phi(f) - 1 over t grid")
    rep.check("Phi(P_t f) <= Phi(f)", worst_c <= slack_tol, f"max excess {worst_c:.3e}", slack_tol)
    return rep.finish()


# -- Nash inequality on the whole (truncated) line ------------------------------------


@dataclass
class WholeLineSplit:
    """Reflected generator on [-L, L] cut at node ``j`` into two killed halves."""

    gen: GeneratorMatrix
    j: int
    left: GeneratorMatrix
    right: GeneratorMatrix
    dec_left: SpectralDecomposition
    dec_right: SpectralDecomposition

    @property
    def split_point(self) -> float:
        return float(self.gen.nodes[self.j])


def whole_line_split(model: DiffusionModel, truncation: float, a: float, n: int,
                     gen: GeneratorMatrix | None = None) -> WholeLineSplit:
    if not -truncation < a < truncation:
        raise ValueError(f"split point {a} outside (-{truncation}, {truncation})")
    gen = gen or build_reflected_generator(model, (-truncation, truncation), n)
    j = int(np.argmin(np.abs(gen.nodes - a)))
    if j == 0 or j == gen.n - 1:
        raise ValueError(f"split point {a} too close to the truncation boundary")
    left, right = gen.restrict(0, j), gen.restrict(j + 1, gen.n)
    return WholeLineSplit(gen, j, left, right, eigendecompose(left), eigendecompose(right))


def _half_moment_mass(gen: GeneratorMatrix, dec: SpectralDecomposition, l: float) -> float:
    """``int E_x T_a^{l+1} m(dx)`` over one half."""
    ones = np.ones(gen.n)
    if float(l).is_integer():
        table = moment_recursion(gen, int(l) + 1)
        return gen.inner(ones, table.values[-1])
    return special.gamma(l + 2) * phi_functional(dec, ones, l)


def phi_split(split: WholeLineSplit, F, l: float) -> tuple[float, float, float]:
    """``(Phi_-, Phi_+, Phi_a)`` for ``F`` in the speed-weighted (unnormalised) form."""
    F = np.asarray(F, dtype=float)
    q = l + 2
    Fa = F[split.j]
    phi_m = phi_functional(split.dec_left, F[: split.j] - Fa, l)
    phi_p = phi_functional(split.dec_right, F[split.j + 1:] - Fa, l)
    return phi_m, phi_p, (phi_m ** (1 / q) + phi_p ** (1 / q)) ** q


def verify_nash_whole(
    model: DiffusionModel, truncation: float, a: float, l: float, Fs, n: int = 401,
    slack_tol: float = 1e-10, scan: bool = False, split: WholeLineSplit | None = None,
) -> VerificationReport:
    """Variance bound through the split functional ``Phi_a`` and its oscillation bound.

    Variance, energy and ``Phi_a`` are all taken with respect to the
    normalised law ``mu = m / m([-L, L])`` so the constant in front is one.
    ``Fs`` are grid functions on the reflected grid with ``n`` nodes.
    """
    if not l > 0:
        raise ValueError("l must be positive")
    p, q = nash_exponents(l)
    split = split or whole_line_split(model, truncation, a, n)
    gen = split.gen
    Fs = np.atleast_2d(np.asarray(Fs, dtype=float))
    if Fs.shape[1] != gen.n:
        raise ValueError(f"test functions must have {gen.n} grid values")
    rep = VerificationReport(
        "verify-nash-whole",
        inputs={"model": model.name, "truncation_L": truncation, "a_requested": a,
                "a_used": split.split_point, "l": l, "p": str(p), "q": str(q), "n": gen.n,
                "functions": len(Fs)},
        tolerances={"slack": slack_tol},
    )
    rep.notes.append("constant C = 1; variance, energy and Phi_a share the mu-normalisation")
    mass = float(gen.weights.sum())
    m_minus = _half_moment_mass(split.left, split.dec_left, l) / mass
    m_plus = _half_moment_mass(split.right, split.dec_right, l) / mass
    moment_factor = (m_minus ** (1 / float(q)) + m_plus ** (1 / float(q))) ** float(q)
    rep.quantity("M_minus", m_minus, "moment recursion" if float(l).is_integer() else "spectral")
    rep.quantity("M_plus", m_plus, "moment recursion" if float(l).is_integer() else "spectral")
    worst_nash, worst_osc = math.inf, math.inf
    for F in Fs:
        mean = float(np.dot(gen.weights, F) / mass)
        var = float(np.dot(gen.weights, (F - mean) ** 2) / mass)
        energy = gen.energy(F) / mass
        _, _, phi_a = phi_split(split, F, l)
        phi_a /= mass
        rhs = energy ** float(1 / p) * phi_a ** float(1 / q)
        scale = max(var, rhs)
        worst_nash = min(worst_nash, 0.0 if scale == 0 else (rhs - var) / scale)
        bound = 4 * float(np.max(np.abs(F - mean))) ** 2 * moment_factor
        scale = max(phi_a, bound)
        worst_osc = min(worst_osc, 0.0 if scale == 0 else (bound - phi_a) / scale)
    rep.quantity("min_nash_slack", worst_nash, "variance vs E^{1/p} Phi_a^{1/q}")
    rep.quantity("min_osc_slack", worst_osc, "Phi_a vs 4||F - mu F||^2 (M_-^{1/q} + M_+^{1/q})^q")
    rep.check("whole-line Nash inequality", worst_nash >= -slack_tol, f"min slack {worst_nash:.3e}", slack_tol)
    rep.check("oscillation bound on Phi_a", worst_osc >= -slack_tol, f"min slack {worst_osc:.3e}", slack_tol)
    if scan:
        cands = np.linspace(-truncation / 2, truncation / 2, 9)
        best = []
        for F in Fs[:5]:
            vals = [phi_split(whole_line_split(model, truncation, c, n, gen=gen), F, l)[2] / mass for c in cands]
            best.append(min(vals))
        rep.quantity("inf_a_phi_scan", best, f"min over 9 split points {cands.tolist()}")
    return rep.finish()


# -- polynomial decay of the reflected semigroup -------------------------------------


def verify_decay(
    dec: SpectralDecomposition, f, window=(1.0, 30.0), l: float = 2.0, points: int = 25,
    slack: float = 0.5, moment_order: float | None = None, guard: bool = True,
) -> VerificationReport:
    """Least-squares log-log slope of ``||P_t f - mu f||^2_mu`` over ``window``."""
    t_min, t_max = map(float, window)
    xi = dec.eigenvalues
    rep = VerificationReport(
        "verify-decay",
        inputs={"n": dec.n, "window": [t_min, t_max], "l": l, "points": points,
                "moment_order": moment_order, "guard": guard},
        tolerances={"slope_slack": slack},
    )
    if dec.killed:
        raise ValueError("decay check needs a reflected (conservative) decomposition")
    rep.quantity("xi_1", float(xi[0]), "spectral")
    rep.quantity("xi_2", float(xi[1]), "spectral")
    gap_time = 0.5 / xi[1] if xi[1] > 0 else math.inf
    rep.quantity("gap_time_scale", gap_time, "0.5 / xi_2")
    if guard and t_max > gap_time:
        raise WindowError(f"t_max={t_max} exceeds the truncation gap time 0.5/xi_2={gap_time:.3g}")
    f = np.asarray(f, dtype=float)
    mass = float(dec.weights.sum())
    f = f - float(np.dot(dec.weights, f)) / mass
    w = dec.coefficients(f) ** 2 / mass
    w[0] = 0.0  # ground state is constant; f is centred
    total = w.sum()
    ts = np.logspace(math.log10(t_min), math.log10(t_max), points)
    var = np.array([np.sum(np.exp(-2 * xi * t) * w) for t in ts])
    if np.any(var < 1e-300) or total == 0:
        raise WindowError("variance underflows inside the window")
    slope = float(np.polyfit(np.log(ts), np.log(var), 1)[0])
    rep.quantity("slope", slope, "least squares on log Var vs log t")
    rep.quantity("variance_curve", [[float(t), float(v)] for t, v in zip(ts, var)], "spectral series")
    if np.max(w) >= (1 - 1e-8) * total:
        rep.notes.append("single spectral atom: exponential regime")
        rep.quantity("regime", "exponential", "spectral weights")
        rep.check("polynomial slope", None, "exponential regime, slope check not applicable")
        return rep.finish()
    rep.quantity("regime", "polynomial", "spectral weights")
    target = -(l + 1) + slack
    if moment_order is not None and moment_order <= l + 1:
        rep.check("polynomial slope", None, f"moment order {moment_order} <= l+1, not asserted")
    else:
        rep.check("polynomial slope", slope <= target, f"slope {slope:.4f} <= {target}", slack)
    return rep.finish()


def decay_truncation_study(
    model: DiffusionModel, truncations, f_fn, step: float = 0.25, window=(1.0, 30.0), l: float = 2.0,
    slack: float = 0.5, stability: float = 0.2, moment_order: float | None = None,
) -> VerificationReport:
    """Repeat :func:`verify_decay` over truncation radii and compare slopes."""
    rep = VerificationReport(
        "verify-decay-study",
        inputs={"model": model.name, "truncations": list(truncations), "step": step,
                "window": list(window), "l": l},
        tolerances={"slope_slack": slack, "slope_stability": stability},
    )
    slopes = []
    for L in truncations:
        n = int(round(2 * L / step))
        gen = build_reflected_generator(model, (-L, L), n)
        sub = verify_decay(eigendecompose(gen), f_fn(gen.nodes), window, l, slack=slack,
                           moment_order=moment_order)
        slopes.append(sub.value("slope"))
        rep.quantity(f"slope_L{L:g}", slopes[-1], "verify-decay")
        rep.quantity(f"xi_2_L{L:g}", sub.value("xi_2"), "spectral")
        rep.quantity(f"variance_curve_L{L:g}", sub.value("variance_curve"), "spectral series")
        for a in sub.assertions:
            rep.check(f"L={L:g}: {a['name']}", None if a["status"] == "n/a" else a["status"] == "pass",
                      a["detail"], a["tolerance"])
    for i in range(len(slopes) - 1):
        change = abs(slopes[i + 1] - slopes[i])
        rep.check(f"slope stable L={truncations[i]:g}->{truncations[i + 1]:g}", change < stability,
                  f"|change| {change:.4f}", stability)
    return rep.finish()


# -- moment threshold study -------------------------------------------------------------

CONVERGENT, DIVERGENT, INCONCLUSIVE = "CONVERGENT", "DIVERGENT", "INCONCLUSIVE"


def classify_ladder(values, conv_tol: float = 0.05, div_growth: float = 0.5) -> str:
    values = list(values)
    if any(math.isinf(v) for v in values):
        return DIVERGENT
    changes = [values[i + 1] / values[i] - 1 for i in range(len(values) - 1)]
    if all(abs(c) < conv_tol for c in changes):
        return CONVERGENT
    if all(c > div_growth for c in changes):
        return DIVERGENT
    return INCONCLUSIVE


def heavy_tail_regime(r: float, l: float, d: int = 1) -> str:
    """What the moment bounds predict for order ``l+1`` under ``HT(r)``."""
    if r > d / 2 + 1 + l:
        return CONVERGENT
    if l + 1 > r - d / 2 + 1:
        return DIVERGENT
    return INCONCLUSIVE


def threshold_study(
    model: DiffusionModel, r: float, ls, ladder=(50.0, 100.0, 200.0), step: float = 0.25,
    inner=(-1.0, 1.0), conv_tol: float = 0.05, div_growth: float = 0.5,
) -> VerificationReport:
    """``sum xi^-(l+1) w`` for ``f = 1`` on the exterior of ``inner`` along a truncation ladder."""
    rep = VerificationReport(
        "threshold-study",
        inputs={"model": model.name, "r": r, "l_values": list(ls), "ladder": list(ladder),
                "step": step, "inner": list(inner)},
        tolerances={"convergent_rel_change": conv_tol, "divergent_growth": div_growth},
    )
    decs = []
    for L in ladder:
        gen = build_exterior_generator(model, inner, L, step)
        decs.append((gen, eigendecompose(gen)))
        rep.quantity(f"xi_1_L{L:g}", float(decs[-1][1].eigenvalues[0]), "spectral")
    curves = []
    for l in ls:
        vals = [phi_functional(dec, np.ones(gen.n), l) for gen, dec in decs]
        verdict = classify_ladder(vals, conv_tol, div_growth)
        predicted = heavy_tail_regime(r, l)
        rep.quantity(f"phi_l{l:g}", vals, "spectral functional along ladder")
        rep.quantity(f"class_l{l:g}", verdict, "ladder classifier", predicted=predicted)
        curves.extend((l, L, v) for L, v in zip(ladder, vals))
        if verdict == INCONCLUSIVE:
            rep.check(f"l={l:g} classification", None, "inconclusive, reported only")
        elif predicted == INCONCLUSIVE:
            rep.check(f"l={l:g} classification", None, f"{verdict}; outside both cited regimes")
        else:
            rep.check(f"l={l:g} classification", verdict == predicted, f"{verdict} (predicted {predicted})")
    rep.quantity("curve", curves, "rows (l, L, value)")
    return rep.finish()


# -- Monte Carlo cross-checks -------------------------------------------------------------


def verify_hitting_moments(cfg, region, start, orders=(1, 2), oracle: dict | None = None,
                           n_se: float = 4.0, sampler=None, censor_tol: float = 1e-3) -> VerificationReport:
    """Simulated exit-time moments against deterministic oracle values."""
    from .montecarlo import sample_hitting_moments

    rep = VerificationReport(
        "simulate-hitting",
        inputs={"model": cfg.model.name, "dt_time": cfg.dt, "paths": cfg.n_paths, "seed": cfg.seed,
                "bridge": cfg.bridge, "region": [type(region).__name__, region.a, region.b],
                "start": start, "orders": list(orders), "truncation_L": cfg.truncation},
        tolerances={"standard_errors": n_se, "censoring_fraction": censor_tol},
    )
    sample = sample_hitting_moments(cfg, region, start, orders, sampler=sampler)
    rep.quantity("censored_fraction", sample.censored_fraction, "monte carlo")
    rep.quantity("aborted_paths", sample.errors, "monte carlo")
    rep.check("censoring", sample.censored_fraction < censor_tol, f"{sample.censored_fraction:.2e}", censor_tol)
    for k in orders:
        est, se = sample.moments[k]
        rep.quantity(f"E_tau^{k}", est, "monte carlo", standard_error=se)
        if oracle and k in oracle:
            rep.quantity(f"oracle_E_tau^{k}", oracle[k], "moment recursion")
            z = abs(est - oracle[k]) / se if se > 0 else math.inf
            rep.check(f"order {k} within {n_se:g} SE", z <= n_se, f"|z| = {z:.3f}", n_se)
    rep.sample = sample
    return rep.finish()


def verify_deviation(cfg, inner, l: float, lambdas, times, sampler, slack: float = 0.5) -> VerificationReport:
    """Occupation-time deviation probabilities: monotonicity, zero cells and log-log slope."""
    from .montecarlo import deviation_experiment, loglog_slope, power_law_mle

    rep = VerificationReport(
        "deviation",
        inputs={"model": cfg.model.name, "inner": list(inner), "l": l, "lambdas": list(lambdas),
                "horizon_times": list(times), "paths": cfg.n_paths, "dt_time": cfg.dt, "seed": cfg.seed,
                "truncation_L": cfg.truncation},
        tolerances={"slope_slack": slack, "ci_level": 0.95},
    )
    rep.notes.append("bound evaluated at C = 1; only shapes and slopes are compared")
    exp = deviation_experiment(cfg, inner, l, lambdas, times, sampler)
    rep.quantity("mu_V", exp.mu_v, "inverse-CDF grid of truncated mu")
    rep.quantity("aborted_paths", exp.errors, "monte carlo")
    rep.quantity("table", [r.as_row() for r in exp.results], "monte carlo")
    rep.quantity("survival", {str(t): v for t, v in exp.survival.items()}, "monte carlo, same paths")
    for lam in lambdas:
        cells = exp.cells(lam)
        if 4 * lam > 1:
            rep.check(f"lambda={lam:g}: empty event", all(c.count == 0 for c in cells), "4 lambda > 1")
            continue
        mono = all(b.ci[0] <= a.ci[1] for a, b in zip(cells, cells[1:]))
        rep.check(f"lambda={lam:g}: non-increasing in t", mono,
                  "; ".join(f"t={c.t:g}: {c.probability:.2e} [{c.ci[0]:.1e},{c.ci[1]:.1e}]" for c in cells))
        slope, used = loglog_slope([c.t for c in cells], [c.probability for c in cells])
        mle, upper = power_law_mle([c.t for c in cells], [c.count for c in cells], [c.trials for c in cells])
        rep.quantity(f"slope_lambda{lam:g}", slope, f"least squares over {used} nonzero cells")
        rep.quantity(f"mle_slope_lambda{lam:g}", mle, "binomial power-law MLE", upper_95=upper)
        target = -(l + 1) + slack
        if math.isnan(slope):
            rep.check(f"lambda={lam:g}: log-log slope", False,
                      f"undetermined: {used} nonzero cell(s); MLE {mle:.2f}, 95% upper {upper:.2f}", slack)
        else:
            rep.check(f"lambda={lam:g}: log-log slope", slope <= target, f"slope {slope:.3f} <= {target}", slack)
    rep.experiment = exp
    return rep.finish()
