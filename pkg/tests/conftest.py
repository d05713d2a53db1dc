import re

_AC = re.compile(r"test_acceptance\.py::test_ac(\d+)_")
_results: dict[int, str] = {}


def pytest_runtest_logreport(report):
    m = _AC.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.failed:
        _results[n] = "FAIL"
    elif report.when == "call" and n not in _results:
        _results[n] = "PASS" if report.passed else "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        terminalreporter.write_line(f"AC{n} {_results[n]}")
