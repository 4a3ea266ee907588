import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m or (report.when != "call" and report.passed):
        return
    entry = _CRITERIA.setdefault(int(m.group(1)), {"name": m.group(2), "outcomes": [], "notes": []})
    entry["outcomes"].append("skipped" if report.skipped else report.outcome)
    entry["notes"] += [f"{k}={v}" for k, v in report.user_properties]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num, entry in sorted(_CRITERIA.items()):
        outcomes = entry["outcomes"]
        if "failed" in outcomes:
            verdict = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        notes = f"  ({', '.join(entry['notes'])})" if entry["notes"] else ""
        terminalreporter.write_line(f"criterion {num:>2} {entry['name']}: {verdict}{notes}")
