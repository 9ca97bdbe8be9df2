"""Acceptance gate: all nine correctness criteria, one verdict line each.

The whole battery runs once through the user-facing CLI entry point
(`moranlimits selfcheck`); each test then reports and asserts its own
criterion so a regression shows up as exactly one red line. Run with
`pytest tests/test_acceptance.py -v -s` to see the verdicts live.
"""

import io
import json
from contextlib import redirect_stdout

import pytest

from moranlimits import cli

CRITERIA = (
    "1-flow-closed-form-vs-rk4",
    "2-linear-two-type-reduction",
    "3-stable-point-attraction",
    "4-variance-evaluators-agree",
    "5-lln-sup-deviation",
    "6-clt-scaled-marginals",
    "7-stationary-product-exactness",
    "8-stationary-gaussian-limit",
    "9-artifact-reproducibility",
)

_CONFIG = {
    "schema_version": "1",
    "model": {"N": 100, "s": 1.0, "u": 0.5, "nu0": 0.5},
    "seed": 1,
}


@pytest.fixture(scope="module")
def selfcheck_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("selfcheck")
    config_path = root / "config.json"
    config_path.write_text(json.dumps(_CONFIG), encoding="utf-8")
    out_dir = root / "out"
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        exit_code = cli.main(
            ["selfcheck", "--config", str(config_path), "--out", str(out_dir)]
        )
    report = json.loads((out_dir / "selfcheck_report.json").read_text(encoding="utf-8"))
    checks = {entry["name"]: entry for entry in report["results"]["checks"]}
    return exit_code, report, checks


@pytest.mark.parametrize("criterion", CRITERIA)
def test_criterion(selfcheck_run, criterion):
    _, _, checks = selfcheck_run
    assert criterion in checks, f"selfcheck never ran {criterion}"
    entry = checks[criterion]
    verdict = "PASS" if entry["passed"] else "FAIL"
    print(f"{verdict} {entry['name']}: {entry['detail']}")
    assert entry["passed"], f"{entry['name']}: {entry['detail']}"


def test_all_criteria_present_and_exit_code_zero(selfcheck_run):
    exit_code, report, checks = selfcheck_run
    assert set(checks) == set(CRITERIA)
    assert report["results"]["all_passed"] is True
    assert exit_code == 0
