import re

ACCEPTANCE_FILE = "test_acceptance.py"


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, with the measured detail."""
    rows = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if ACCEPTANCE_FILE not in nodeid or getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            m = re.search(r"test_criterion_(\d+)_(\w+)", nodeid)
            if not m:
                continue
            key = int(m.group(1))
            detail = "; ".join(v for k, v in getattr(rep, "user_properties", []) if k == "detail")
            ok = outcome == "passed"
            prev = rows.get(key)
            if prev is None or (prev[0] and not ok) or (not prev[2] and detail):
                rows[key] = (ok if prev is None else prev[0] and ok, m.group(2), detail)
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(rows):
        ok, name, detail = rows[key]
        line = f"criterion {key:2d} {name}: {'PASS' if ok else 'FAIL'}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
