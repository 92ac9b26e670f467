CRITERIA = []


def report(label, ok, detail):
    """Record one acceptance line; printed in the terminal summary."""
    CRITERIA.append((label, ok, detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
