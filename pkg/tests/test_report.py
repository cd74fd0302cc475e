import json
import math

from nashlab.report import VerificationReport


def test_statuses_and_json():
    rep = VerificationReport("x")
    rep.quantity("a", math.inf, "route")
    rep.quantity("b", float("nan"), "route")
    rep.check("ok", True)
    rep.check("skip", None)
    assert rep.passed
    rep.check("bad", False, "detail")
    assert not rep.passed and len(rep.failures) == 1
    data = json.loads(rep.finish().to_json(include_runtime=False))
    assert data["schema_version"] == 1
    assert data["quantities"][0]["value"] == "+inf"
    assert data["quantities"][1]["value"] == "nan"
    assert "runtime_seconds" not in data
    assert [a["status"] for a in data["assertions"]] == ["pass", "n/a", "fail"]
