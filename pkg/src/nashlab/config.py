"""INI run configuration: schema, parsing and validation.

Every key is declared below with its parser and default; anything else is
rejected before a single number is computed.  Keys naming a physical
quantity carry its unit (``dt_time``, ``truncation_length`` ...).
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .expr import ExpressionError
from .model import DiffusionModel, get_model, model_from_expressions

CHECKS = (
    "spectrum", "moments", "verify-equality", "verify-nash-killed", "verify-nash-whole",
    "verify-decay", "threshold-study", "simulate-hitting", "deviation",
)


def _floats(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _words(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


def _start(text):
    text = text.strip()
    return text if text == "stationary" else float(text)


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {
        "checks": (_words, ()),
        "out_dir": (str, "out"),
        "seed": (int, 0),
        "workers": (int, 1),
    },
    "model": {
        "name": (str, "BM2"),
        "drift": (str, ""),
        "diffusion": (str, ""),
        "reference_point": (float, 0.0),
    },
    "grid": {
        "interval": (_floats, (0.0, 1.0)),
        "n": (int, 2000),
        "boundary": (str, "absorbing"),
        "truncation_length": (float, 50.0),
        "step_length": (float, 0.25),
    },
    "spectrum": {
        "models": (_words, ()),
        "boundaries": (_words, ()),
        "modes": (int, 5),
    },
    "rate": {
        "variant": (str, "constant"),
        "l": (float, 1.0),
        "lambda_per_time": (float, 1.0),
        "expected": (_opt_float, None),
    },
    "moments": {
        "order": (int, 2),
    },
    "nash": {
        "l_values": (_floats, (0.5, 1.0, 2.0)),
        "functions": (int, 1000),
        "split_points": (_floats, (0.0,)),
        "l_whole": (float, 2.0),
        "whole_n": (int, 401),
        "whole_functions": (int, 100),
    },
    "decay": {
        "truncations_length": (_floats, (100.0, 200.0)),
        "window_time": (_floats, (1.0, 30.0)),
        "l": (float, 2.0),
        "test_function": (str, "tanh(x)"),
        "moment_order": (_opt_float, None),
    },
    "threshold": {
        "r": (float, 4.0),
        "l_values": (_floats, (2.0, 3.0, 4.0)),
        "ladder_length": (_floats, (50.0, 100.0, 200.0)),
        "inner": (_floats, (-1.0, 1.0)),
    },
    "montecarlo": {
        "dt_time": (float, 1e-4),
        "paths": (int, 100_000),
        "bridge": (_bool, True),
        "start": (_start, 0.5),
        "region": (str, "interval"),
        "region_bounds": (_floats, (0.0, 1.0)),
        "orders": (_ints, (1, 2)),
        "oracle": (_floats, ()),
        "max_time": (float, math.inf),
        "horizon_times": (_floats, (10.0, 30.0, 100.0)),
        "lambdas": (_floats, (0.1,)),
        "l": (float, 1.0),
        "block_size": (int, 4096),
        "sampler_cells": (int, 200_000),
    },
    "tolerances": {
        "solve": (float, 1e-6),
        "quadrature": (float, 1e-4),
        "nash_slack": (float, 1e-12),
        "whole_slack": (float, 1e-10),
        "slope_slack": (float, 0.5),
        "slope_stability": (float, 0.2),
        "standard_errors": (float, 4.0),
        "convergent_change": (float, 0.05),
        "divergent_growth": (float, 0.5),
        "reflected_xi1": (float, 1e-10),
        "constant_residual": (float, 1e-8),
    },
}


@dataclass
class RunConfig:
    """Validated configuration; ``values[section][key]`` holds parsed values."""

    values: dict = field(default_factory=dict)
    source: str | None = None

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    @property
    def checks(self) -> tuple[str, ...]:
        return self.values["run"]["checks"]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    @property
    def workers(self) -> int:
        return self.values["run"]["workers"]

    def model(self) -> DiffusionModel:
        sec = self.values["model"]
        if sec["drift"] or sec["diffusion"]:
            return model_from_expressions(sec["name"], sec["drift"] or "0", sec["diffusion"] or "1",
                                          sec["reference_point"])
        return get_model(sec["name"])

    def override(self, section: str, key: str, value) -> None:
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        self.values[section][key] = value
        validate(self)

    def to_ini(self, exclude=()) -> str:
        """Round-trippable INI text; ``exclude`` drops keys that never affect numbers."""
        lines = []
        for section, keys in self.values.items():
            lines.append(f"[{section}]")
            for key, val in keys.items():
                if key not in exclude:
                    lines.append(f"{key} = {_format(val)}")
            lines.append("")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {s: dict(v) for s, v in self.values.items()}


def _format(val) -> str:
    if val is None:
        return "none"
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, tuple):
        return ", ".join(_format(v) for v in val)
    if isinstance(val, float):
        return repr(val)
    return str(val)


def defaults() -> RunConfig:
    return RunConfig({s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()})


def parse_config(text: str, source: str | None = None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep key case so typos are reported verbatim
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    cfg = defaults()
    cfg.source = source
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            conv = SCHEMA[section][key][0]
            try:
                cfg.values[section][key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r} in [{section}]: {exc}") from None
    validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def validate(cfg: RunConfig) -> RunConfig:
    v = cfg.values
    for check in v["run"]["checks"]:
        _require(check in CHECKS, f"unknown check {check!r} in [run] checks; choose from {', '.join(CHECKS)}")
    _require(v["run"]["workers"] >= 1, "workers must be >= 1")
    _require(0 <= v["run"]["seed"] < 2**64, "seed must be an unsigned 64-bit integer")
    try:
        cfg.model()
    except KeyError as exc:
        raise ConfigError(f"[model] name: {exc.args[0]}") from None
    except ExpressionError as exc:
        raise ConfigError(f"[model] expression: {exc}") from None
    g = v["grid"]
    _require(g["n"] >= 3, f"[grid] n must be >= 3, got {g['n']}")
    _require(len(g["interval"]) == 2 and g["interval"][0] < g["interval"][1],
             f"[grid] interval must be two increasing numbers, got {g['interval']}")
    _require(g["boundary"] in ("absorbing", "reflecting"), f"[grid] boundary {g['boundary']!r} unknown")
    _require(g["truncation_length"] > 0 and g["step_length"] > 0, "[grid] lengths must be positive")
    sp = v["spectrum"]
    for name in sp["models"]:
        try:
            get_model(name)
        except KeyError as exc:
            raise ConfigError(f"[spectrum] models: {exc.args[0]}") from None
    _require(all(b in ("absorbing", "reflecting") for b in sp["boundaries"]), "[spectrum] boundaries unknown")
    _require(sp["modes"] >= 1, "[spectrum] modes must be >= 1")
    r = v["rate"]
    _require(r["variant"] in ("constant", "polynomial", "exponential"), f"[rate] variant {r['variant']!r} unknown")
    _require(r["l"] >= 0, "[rate] l must be >= 0")
    _require(v["moments"]["order"] >= 1, "[moments] order must be >= 1")
    nash = v["nash"]
    _require(all(l > 0 for l in nash["l_values"]) and nash["l_whole"] > 0, "[nash] l must be positive")
    _require(nash["functions"] >= 1, "[nash] functions must be >= 1")
    _require(nash["whole_n"] >= 3, f"[nash] whole_n must be >= 3, got {nash['whole_n']}")
    d = v["decay"]
    _require(len(d["window_time"]) == 2 and 0 < d["window_time"][0] < d["window_time"][1],
             "[decay] window_time must be two increasing positive times")
    _require(all(L > 0 for L in d["truncations_length"]), "[decay] truncations must be positive")
    try:
        from .expr import parse_expression
        parse_expression(d["test_function"])
    except ExpressionError as exc:
        raise ConfigError(f"[decay] test_function: {exc}") from None
    t = v["threshold"]
    _require(len(t["inner"]) == 2 and t["inner"][0] < t["inner"][1], "[threshold] inner must be increasing")
    mc = v["montecarlo"]
    _require(mc["dt_time"] > 0, "[montecarlo] dt_time must be > 0")
    _require(mc["paths"] >= 1, "[montecarlo] paths must be >= 1")
    _require(mc["block_size"] >= 1, "[montecarlo] block_size must be >= 1")
    _require(mc["region"] in ("interval", "exterior"), f"[montecarlo] region {mc['region']!r} unknown")
    _require(len(mc["region_bounds"]) == 2 and mc["region_bounds"][0] < mc["region_bounds"][1],
             "[montecarlo] region_bounds must be increasing")
    _require(all(k >= 1 for k in mc["orders"]), "[montecarlo] orders must be >= 1")
    _require(len(mc["oracle"]) in (0, len(mc["orders"])), "[montecarlo] oracle needs one value per order")
    _require(all(x > 0 for x in mc["horizon_times"]), "[montecarlo] horizon_times must be positive")
    _require(all(x > 0 for x in mc["lambdas"]), "[montecarlo] lambdas must be positive")
    return cfg
