"""Shared pytest wiring: the ``criterion(n)`` marker and a per-criterion report."""
from collections import defaultdict

CRITERIA = {
    1: "critical distance 25.8 um",
    2: "single-soliton NPSE upshift in [1.04, 1.06]",
    3: "single-soliton 1D GPE upshift in [1.01, 1.03]",
    4: "deep TF1D single-soliton ratio in [0.99, 1.01]",
    5: "two-soliton upshift: max in [1.10, 1.18] at smallest amplitude, decreasing",
    6: "particle model within 5% of NPSE pair frequencies (both trap sets)",
    7: "merge run: even soliton count, symmetric central pair",
    8: "property suites (conservation, convergence, limits, tracking accuracy)",
}

_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): test backs acceptance criterion n")


def pytest_collection_modifyitems(items):
    for item in items:
        for mark in item.iter_markers("criterion"):
            item.user_properties.append(("criterion", mark.args[0]))


def pytest_runtest_logreport(report):
    crits = [v for k, v in report.user_properties if k == "criterion"]
    if not crits:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        outcome = "skipped" if report.skipped else "passed" if report.passed else "failed"
        values = [f"{k}={v}" for k, v in report.user_properties if k != "criterion"]
        for c in crits:
            _outcomes[c].append((outcome, values))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, text in CRITERIA.items():
        entries = _outcomes.get(n, [])
        results = [e[0] for e in entries]
        if not results:
            status = "NOT RUN"
        elif "failed" in results:
            status = "FAIL"
        elif all(r == "passed" for r in results):
            status = "PASS"
        else:
            status = "SKIPPED"
        values = "; ".join(v for e in entries for v in e[1])
        line = f"criterion {n}: {status:8s} {text} ({len(results)} tests)"
        tr.write_line(line + (f" [{values}]" if values else ""))
