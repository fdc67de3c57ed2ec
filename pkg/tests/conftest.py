"""Print one pass/fail line per acceptance criterion at the end of the run."""

import re

_CRITERIA = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_criterion_(\d+)_", report.nodeid)
    if not m:
        return
    k = int(m.group(1))
    entry = _CRITERIA.setdefault(k, {"passed": True, "seen": False, "notes": []})
    if report.when == "call" or report.failed:
        entry["seen"] = True
        if report.failed:
            entry["passed"] = False
    for name, value in report.user_properties:
        if name == "note" and value not in entry["notes"]:
            entry["notes"].append(value)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for k in sorted(_CRITERIA):
        e = _CRITERIA[k]
        status = "PASS" if e["passed"] and e["seen"] else "FAIL"
        notes = f"  ({'; '.join(e['notes'])})" if e["notes"] else ""
        tr.write_line(f"criterion {k:2d} [PRIMARY]: {status}{notes}")
