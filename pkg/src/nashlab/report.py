"""Verification reports: routed quantities, tolerances and verdicts."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

SCHEMA_VERSION = 1


def _jsonable(value):
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "+inf" if value > 0 else "-inf"
        return value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item"):  # numpy scalar
        return _jsonable(value.item())
    return value


@dataclass
class VerificationReport:
    name: str
    inputs: dict = field(default_factory=dict)
    quantities: list = field(default_factory=list)
    assertions: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    runtime: float = 0.0
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def quantity(self, name: str, value, route: str, **extra):
        self.quantities.append({"name": name, "value": value, "route": route, **extra})
        return value

    def check(self, name: str, passed: bool | None, detail: str = "", tolerance=None):
        """Record an assertion; ``passed=None`` marks it not applicable."""
        self.assertions.append(
            {"name": name, "status": "n/a" if passed is None else ("pass" if passed else "fail"),
             "detail": detail, "tolerance": tolerance}
        )
        return passed

    def value(self, name: str):
        for q in self.quantities:
            if q["name"] == name:
                return q["value"]
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(a["status"] != "fail" for a in self.assertions)

    @property
    def failures(self) -> list:
        return [a for a in self.assertions if a["status"] == "fail"]

    def finish(self) -> "VerificationReport":
        self.runtime = time.perf_counter() - self._t0
        return self

    def to_dict(self, include_runtime: bool = True) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "inputs": self.inputs,
            "quantities": self.quantities,
            "assertions": self.assertions,
            "tolerances": self.tolerances,
            "notes": self.notes,
            "passed": self.passed,
        }
        if include_runtime:
            out["runtime_seconds"] = self.runtime
        return _jsonable(out)

    def to_json(self, include_runtime: bool = True) -> str:
        return json.dumps(self.to_dict(include_runtime), indent=2)

    def summary_lines(self) -> list[str]:
        return [f"[{a['status'].upper():4}] {self.name}: {a['name']} {a['detail']}" for a in self.assertions]
