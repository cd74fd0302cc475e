"""Deviation slope where the sample size can resolve it (not an acceptance criterion)."""

from pathlib import Path

from nashlab.cli import run_checks
from nashlab.config import load_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_small_lambda_slope_resolved(tmp_path):
    import json

    cfg = load_config(CONFIGS / "s09_deviation_small_lambda.ini")
    status = run_checks(cfg, tmp_path, stream=open("/dev/null", "w"))
    rep = json.loads((tmp_path / "report-deviation.json").read_text())
    rows = [q for q in rep["quantities"] if q["name"] == "table"][0]["value"]
    assert all(r["count"] > 0 for r in rows)
    assert status == 0, rep["assertions"]
