"""Batch command line front end.

    nashlab run --config run.ini --out results/
    nashlab verify-equality --model BM2 --n 2000
    nashlab list-models --tag heavy-tail --json

Each check writes ``report-<check>.json`` and ``curves-<check>.csv`` into
the output directory.  Reports contain only deterministic numbers; wall
clock times go to ``timings.json``.  Exit status: 0 all assertions pass,
1 an assertion failed, 2 invalid configuration, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import CHECKS, RunConfig, defaults, load_config, validate
from .discretize import build_generator, build_killed_generator, build_reflected_generator
from .errors import ConfigError, LabError
from .expr import parse_expression
from .model import get_model, list_models
from .moments import mean_modulated_moment, moment_recursion
from .montecarlo import Exterior, Interval, SimulationConfig, StationarySampler
from .report import SCHEMA_VERSION, VerificationReport
from .spectral import eigendecompose, make_rate, spectral_weights
from .verify import (
    bounded_test_functions,
    decay_truncation_study,
    nash_witness,
    threshold_study,
    verify_deviation,
    verify_equality_chain,
    verify_hitting_moments,
    verify_nash_killed,
    verify_nash_whole,
    whole_line_split,
)

log = logging.getLogger("nashlab")

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _rng(cfg: RunConfig, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed, spawn_key=(tag,))))


def _merge(target: VerificationReport, sub: VerificationReport, prefix: str) -> None:
    for q in sub.quantities:
        target.quantities.append({**q, "name": f"{prefix}{q['name']}"})
    for a in sub.assertions:
        target.assertions.append({**a, "name": f"{prefix}{a['name']}"})
    target.notes.extend(n for n in sub.notes if n not in target.notes)


# -- checks: each returns (report, header, rows) -----------------------------------


def check_spectrum(cfg: RunConfig):
    sp, g, tol = cfg["spectrum"], cfg["grid"], cfg["tolerances"]
    models = sp["models"] or (cfg["model"]["name"],)
    boundaries = sp["boundaries"] or (g["boundary"],)
    rep = VerificationReport(
        "spectrum",
        inputs={"models": list(models), "boundaries": list(boundaries), "interval": list(g["interval"]), "n": g["n"]},
        tolerances={"reflected_xi1": tol["reflected_xi1"], "constant_residual": tol["constant_residual"]},
    )
    rows = []
    for name in models:
        model = cfg.model() if not sp["models"] else get_model(name)
        for side in boundaries:
            gen = build_generator(model, g["interval"], g["n"], (side, side))
            dec = eigendecompose(gen)
            xi = dec.eigenvalues
            tag = f"{model.name}/{side}: "
            k = min(sp["modes"], xi.size)
            rep.quantity(f"{tag}xi", xi[:k].tolist(), "tridiagonal eigensolve")
            rep.quantity(f"{tag}orthonormality_residual", dec.orthonormality_residual(), "E^T M E - I")
            rows.extend((model.name, side, i + 1, float(v)) for i, v in enumerate(xi[:k]))
            if side == "absorbing":
                rep.check(f"{tag}xi_1 > 0", bool(xi[0] > 0), f"xi_1 = {xi[0]:.6e}")
                if model.name == "BM2":
                    width = g["interval"][1] - g["interval"][0]
                    for j in (1, 2):
                        exact = (j * math.pi / width) ** 2
                        rel = abs(xi[j - 1] / exact - 1)
                        rep.quantity(f"{tag}xi_{j}/exact", float(xi[j - 1] / exact), f"(j pi / width)^2, j={j}")
                        rep.check(f"{tag}xi_{j} within 0.1% of closed form", rel < 1e-3, f"rel {rel:.3e}", 1e-3)
            else:
                e1 = dec.eigenvectors[:, 0]
                resid = float(np.ptp(e1) / np.max(np.abs(e1)))
                rep.quantity(f"{tag}ground_state_spread", resid, "(max - min) / max|e_1|")
                rep.check(f"{tag}|xi_1| small", bool(abs(xi[0]) <= tol["reflected_xi1"]),
                          f"|xi_1| = {abs(xi[0]):.3e}", tol["reflected_xi1"])
                rep.check(f"{tag}constant ground state", resid <= tol["constant_residual"],
                          f"spread {resid:.3e}", tol["constant_residual"])
    return rep.finish(), ("model", "boundary", "k", "xi"), rows


def check_moments(cfg: RunConfig):
    g, tol = cfg["grid"], cfg["tolerances"]
    order = cfg["moments"]["order"]
    model = cfg.model()
    gen = build_killed_generator(model, g["interval"], g["n"])
    table = moment_recursion(gen, order)
    rep = VerificationReport(
        "moments",
        inputs={"model": model.name, "interval": list(g["interval"]), "n": g["n"], "order": order},
        tolerances={"recursion_vs_spectral": tol["solve"]},
    )
    mid = 0.5 * (g["interval"][0] + g["interval"][1])
    for k in range(1, order + 1):
        rep.quantity(f"E_tau^{k} at x={mid:g}", table.at(mid, k), "moment recursion, linear interpolation")
    for l in range(order):
        mm = mean_modulated_moment(gen, float(l))
        rep.quantity(f"mean_moment_l{l}", mm.value, mm.route, check=mm.check_value)
        gap = mm.relative_gap
        rep.check(f"l={l}: recursion == spectral", gap is not None and gap <= tol["solve"],
                  f"rel gap {gap:.3e}", tol["solve"])
    rows = [(float(x), *(float(table.values[k][i]) for k in range(1, order + 1))) for i, x in enumerate(table.nodes)]
    return rep.finish(), ("x", *(f"v{k}" for k in range(1, order + 1))), rows


def _rate(cfg: RunConfig):
    r = cfg["rate"]
    if r["variant"] == "polynomial":
        return make_rate("polynomial", r["l"])
    if r["variant"] == "exponential":
        return make_rate("exponential", r["lambda_per_time"])
    return make_rate("constant")


def check_equality(cfg: RunConfig):
    g, tol = cfg["grid"], cfg["tolerances"]
    model, rate = cfg.model(), _rate(cfg)
    rep = verify_equality_chain(model, g["interval"], rate, n=g["n"], tol_solve=tol["solve"],
                                tol_quad=tol["quadrature"], expected=cfg["rate"]["expected"])
    gen = build_killed_generator(model, g["interval"], g["n"])
    mu = spectral_weights(eigendecompose(gen), np.ones(gen.n))
    lap = rate.laplace(mu.eigenvalues)
    rows = [(i + 1, float(x), float(w), float(v)) for i, (x, w, v) in enumerate(zip(mu.eigenvalues, mu.weights, lap))]
    return rep, ("k", "xi", "weight", "laplace"), rows


def check_nash_killed(cfg: RunConfig):
    g, nash, tol = cfg["grid"], cfg["nash"], cfg["tolerances"]
    model = cfg.model()
    gen = build_killed_generator(model, g["interval"], g["n"])
    dec = eigendecompose(gen)
    fs = bounded_test_functions(_rng(cfg, 4), gen.nodes, nash["functions"])
    rep = VerificationReport(
        "verify-nash-killed",
        inputs={"model": model.name, "interval": list(g["interval"]), "n": g["n"],
                "l_values": list(nash["l_values"]), "functions": nash["functions"], "seed": cfg.seed},
        tolerances={"slack": tol["nash_slack"], "ground_state_equality": 1e-10},
    )
    rows = []
    for l in nash["l_values"]:
        sub = verify_nash_killed(dec, l, fs, slack_tol=tol["nash_slack"])
        _merge(rep, sub, f"l={l:g}: ")
        w = nash_witness(dec, dec.eigenvectors[:, 0], l)
        rep.quantity(f"l={l:g}: e_1 slack", w.slack, "single mode")
        rep.check(f"l={l:g}: e_1 equality", abs(w.slack) <= 1e-10, f"slack {w.slack:.3e}", 1e-10)
        rows.append((l, sub.value("min_slack"), w.slack, sub.value("max_contraction_excess")))
    return rep.finish(), ("l", "min_slack", "e1_slack", "max_contraction_excess"), rows


def check_nash_whole(cfg: RunConfig):
    g, nash, tol = cfg["grid"], cfg["nash"], cfg["tolerances"]
    model, L = cfg.model(), g["truncation_length"]
    gen = build_reflected_generator(model, (-L, L), nash["whole_n"])
    Fs = bounded_test_functions(_rng(cfg, 5), gen.nodes, nash["whole_functions"])
    rep = VerificationReport(
        "verify-nash-whole",
        inputs={"model": model.name, "truncation_L": L, "n": gen.n, "l": nash["l_whole"],
                "split_points": list(nash["split_points"]), "functions": len(Fs), "seed": cfg.seed},
        tolerances={"slack": tol["whole_slack"]},
    )
    rows = []
    for a in nash["split_points"]:
        split = whole_line_split(model, L, a, gen.n, gen=gen)
        sub = verify_nash_whole(model, L, a, nash["l_whole"], Fs, n=gen.n, slack_tol=tol["whole_slack"], split=split)
        _merge(rep, sub, f"a={a:g}: ")
        rep.quantity(f"a={a:g}: a_used", split.split_point, "nearest grid node")
        rows.append((a, split.split_point, sub.value("min_nash_slack"), sub.value("min_osc_slack"),
                     sub.value("M_minus"), sub.value("M_plus")))
    return rep.finish(), ("a_requested", "a_used", "min_nash_slack", "min_osc_slack", "M_minus", "M_plus"), rows


def check_decay(cfg: RunConfig):
    d, g, tol = cfg["decay"], cfg["grid"], cfg["tolerances"]
    fn = parse_expression(d["test_function"])
    rep = decay_truncation_study(
        cfg.model(), d["truncations_length"], fn, step=g["step_length"], window=d["window_time"], l=d["l"],
        slack=tol["slope_slack"], stability=tol["slope_stability"], moment_order=d["moment_order"],
    )
    rep.inputs["test_function"] = d["test_function"]
    rows = []
    for L in d["truncations_length"]:
        rows.extend((L, t, v) for t, v in rep.value(f"variance_curve_L{L:g}"))
    return rep, ("L", "t", "variance"), rows


def check_threshold(cfg: RunConfig):
    t, g, tol = cfg["threshold"], cfg["grid"], cfg["tolerances"]
    rep = threshold_study(
        cfg.model(), t["r"], t["l_values"], ladder=t["ladder_length"], step=g["step_length"], inner=t["inner"],
        conv_tol=tol["convergent_change"], div_growth=tol["divergent_growth"],
    )
    return rep, ("l", "L", "phi"), rep.value("curve")


def _simulation(cfg: RunConfig) -> SimulationConfig:
    mc = cfg["montecarlo"]
    truncation = cfg["grid"]["truncation_length"] if mc["region"] == "exterior" or mc["start"] == "stationary" else None
    return SimulationConfig(
        model=cfg.model(), dt=mc["dt_time"], n_paths=mc["paths"], seed=cfg.seed, truncation=truncation,
        bridge=mc["bridge"], block_size=mc["block_size"], max_time=mc["max_time"], workers=cfg.workers,
    )


def _region(cfg: RunConfig):
    a, b = cfg["montecarlo"]["region_bounds"]
    return Interval(a, b) if cfg["montecarlo"]["region"] == "interval" else Exterior(a, b)


def _sampler(cfg: RunConfig) -> StationarySampler:
    L = cfg["grid"]["truncation_length"]
    return StationarySampler(cfg.model(), (-L, L), cells=cfg["montecarlo"]["sampler_cells"],
                             breakpoints=cfg["montecarlo"]["region_bounds"])


def check_hitting(cfg: RunConfig):
    mc, g = cfg["montecarlo"], cfg["grid"]
    region, sim = _region(cfg), _simulation(cfg)
    oracle = dict(zip(mc["orders"], mc["oracle"]))
    route = "config"
    if not oracle and isinstance(region, Interval) and mc["start"] != "stationary":
        gen = build_killed_generator(sim.model, (region.a, region.b), g["n"])
        table = moment_recursion(gen, max(mc["orders"]))
        oracle = {k: table.at(mc["start"], k) for k in mc["orders"]}
        route = f"moment recursion, n={g['n']}"
    sampler = _sampler(cfg) if mc["start"] == "stationary" else None
    rep = verify_hitting_moments(sim, region, mc["start"], mc["orders"], oracle or None,
                                 n_se=cfg["tolerances"]["standard_errors"], sampler=sampler)
    rep.inputs["oracle_route"] = route if oracle else "none"
    tau = rep.sample.tau[np.isfinite(rep.sample.tau)]
    rows = []
    if tau.size:
        counts, edges = np.histogram(tau, bins=50)
        rows = [(float(edges[i]), float(edges[i + 1]), int(c)) for i, c in enumerate(counts)]
    return rep, ("tau_lo", "tau_hi", "count"), rows


def check_deviation(cfg: RunConfig):
    mc, tol = cfg["montecarlo"], cfg["tolerances"]
    rep = verify_deviation(_simulation(cfg), mc["region_bounds"], mc["l"], mc["lambdas"], mc["horizon_times"],
                           _sampler(cfg), slack=tol["slope_slack"])
    rows = [tuple(r.as_row().values()) for r in rep.experiment.results]
    header = tuple(rep.experiment.results[0].as_row()) if rep.experiment.results else ()
    return rep, header, rows


RUNNERS = {
    "spectrum": check_spectrum,
    "moments": check_moments,
    "verify-equality": check_equality,
    "verify-nash-killed": check_nash_killed,
    "verify-nash-whole": check_nash_whole,
    "verify-decay": check_decay,
    "threshold-study": check_threshold,
    "simulate-hitting": check_hitting,
    "deviation": check_deviation,
}


# -- orchestration -------------------------------------------------------------------------


def _write_curves(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for row in rows:
            out.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _execute(check: str, cfg: RunConfig):
    t0 = time.perf_counter()
    try:
        rep, header, rows = RUNNERS[check](cfg)
        return check, rep, header, rows, None, time.perf_counter() - t0
    except ConfigError as exc:
        return check, None, None, None, ("config", str(exc)), time.perf_counter() - t0
    except (LabError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return check, None, None, None, ("numeric", f"{type(exc).__name__}: {exc}"), time.perf_counter() - t0


# config errors outrank numeric failures, which outrank assertion failures
_SEVERITY = {EXIT_OK: 0, EXIT_ASSERT: 1, EXIT_NUMERIC: 2, EXIT_CONFIG: 3}


def _worse(a: int, b: int) -> int:
    return a if _SEVERITY[a] >= _SEVERITY[b] else b


def run_checks(cfg: RunConfig, out_dir, as_json: bool = False, stream=None) -> int:
    """Run every configured check; returns the exit status."""
    stream = stream or sys.stdout
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config-used.ini").write_text(cfg.to_ini())
    checks = list(dict.fromkeys(cfg.checks))
    if cfg.workers > 1 and len(checks) > 1:
        # monte carlo blocks use their own pool; checks here only share the CPU
        with ThreadPoolExecutor(min(cfg.workers, len(checks))) as pool:
            results = list(pool.map(lambda c: _execute(c, cfg), checks))
    else:
        results = [_execute(c, cfg) for c in checks]
    status, timings = EXIT_OK, {}
    for check, rep, header, rows, err, seconds in results:  # serialized writing
        timings[check] = seconds
        if err is not None:
            kind, msg = err
            print(f"[ERROR] {check}: {msg}", file=sys.stderr)
            status = _worse(status, EXIT_CONFIG if kind == "config" else EXIT_NUMERIC)
            continue
        rep.inputs["config"] = cfg.to_ini(exclude=("out_dir", "workers"))
        (out / f"report-{check}.json").write_text(rep.to_json(include_runtime=False) + "\n")
        _write_curves(out / f"curves-{check}.csv", header, rows)
        if as_json:
            stream.write(rep.to_json(include_runtime=False) + "\n")
        else:
            for line in rep.summary_lines():
                print(line, file=stream)
        if not rep.passed:
            status = _worse(status, EXIT_ASSERT)
    (out / "timings.json").write_text(json.dumps({"seconds": timings}, indent=2) + "\n")
    return status


def list_models_payload(tag: str | None = None) -> dict:
    entries = []
    for e in list_models(tag):
        entries.append({
            "name": e.model.name,
            "tags": list(e.tags),
            "known_values": {k: {"value": v, "oracle": src} for k, (v, src) in e.known_values.items()},
        })
    return {"schema_version": SCHEMA_VERSION, "models": entries}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nashlab", description="Spectral, moment and Nash-inequality checks for 1D diffusions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI run configuration")
    common.add_argument("--out", type=Path, help="output directory (overrides [run] out_dir)")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides [run] seed)")
    common.add_argument("--workers", type=int, help="worker threads (overrides [run] workers)")
    common.add_argument("--json", action="store_true", help="print reports as JSON")
    common.add_argument("-v", "--verbose", action="store_true")
    single = argparse.ArgumentParser(add_help=False)
    single.add_argument("--model", help="catalog model name, e.g. HT(4)")
    single.add_argument("--n", type=int, help="grid nodes")
    single.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"))
    single.add_argument("--truncation", type=float, metavar="L", help="truncation radius (length)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the checks listed in [run] checks")
    for check in CHECKS:
        sub.add_parser(check, parents=[common, single], help=f"run the {check} check")
    lm = sub.add_parser("list-models", help="show the model catalog")
    lm.add_argument("--tag", help="only models carrying this tag")
    lm.add_argument("--json", action="store_true")
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else defaults()
    run = cfg["run"]
    if args.seed is not None:
        run["seed"] = args.seed
    if args.workers is not None:
        run["workers"] = args.workers
    if args.out is not None:
        run["out_dir"] = str(args.out)
    if args.command != "run":
        run["checks"] = (args.command,)
        if args.model is not None:
            cfg["model"].update(name=args.model, drift="", diffusion="")
        if args.n is not None:
            cfg["grid"]["n"] = args.n
        if args.interval is not None:
            cfg["grid"]["interval"] = tuple(args.interval)
        if args.truncation is not None:
            cfg["grid"]["truncation_length"] = args.truncation
    elif not cfg.checks:
        raise ConfigError("[run] checks is empty; nothing to do")
    return validate(cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list-models":
        payload = list_models_payload(args.tag)
        if args.json:
            print(json.dumps(payload, indent=2))
        else:
            for m in payload["models"]:
                print(f"{m['name']:8} {','.join(m['tags'])}")
        return EXIT_OK
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.debug("checks %s, seed %d, workers %d", cfg.checks, cfg.seed, cfg.workers)
    return run_checks(cfg, cfg["run"]["out_dir"], as_json=args.json)


if __name__ == "__main__":
    sys.exit(main())
