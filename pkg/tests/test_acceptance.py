"""Acceptance criteria 1-10 on the default configuration.

The full pipeline runs twice through the command-line entry point; criteria 1-9
are read from the first run and criterion 10 compares the CSV bytes of both.
One PASS/FAIL line per criterion is printed in the terminal summary.
"""

import json

import pytest

from littlecarleson import acceptance as acc
from littlecarleson.cli import main

LINES: dict[int, str] = {}


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("acceptance")
    codes = [main(["all", "--out", str(base / name)]) for name in ("first", "second")]
    meta = json.loads((base / "first" / "metadata.json").read_text())
    return base / "first", base / "second", codes, {c["criterion"]: c for c in meta["checks"]}


def record(number, passed, detail):
    LINES[number] = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    print(LINES[number])


def brief(metrics):
    return ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                     for k, v in metrics.items() if not isinstance(v, (list, dict)))


@pytest.mark.parametrize("number", range(1, 10))
def test_criterion(runs, number):
    _, _, _, checks = runs
    check = checks[number]
    record(number, check["passed"], f"{check['title']}: {brief(check['metrics'])}")
    details = check["metrics"].get("violation_details")
    assert check["passed"], details or check["metrics"]


def test_criterion_10_reproducible_outputs(runs):
    first, second, codes, _ = runs
    same, diff = acc.compare_outputs(first, second)
    names = sorted(p.name for p in first.glob("*.csv"))
    record(10, same and codes[0] == codes[1], f"byte-identical CSVs across two runs ({len(names)} files)")
    assert same, diff
    assert codes[0] == codes[1]
