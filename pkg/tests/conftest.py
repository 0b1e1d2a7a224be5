"""Prints one PASS/FAIL line per acceptance criterion after the run."""
import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: one acceptance criterion")


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" not in report.nodeid:
        return
    name = report.nodeid.split("::", 1)[1].split("[", 1)[0]
    if report.when == "call" or report.failed:
        _results[name] = _results.get(name, True) and report.passed


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    import test_acceptance
    titles = {n: (getattr(test_acceptance, n).__doc__ or n).strip()
              for n in _results if hasattr(test_acceptance, n)}
    order = [n for n in dir(test_acceptance) if n in _results]
    order.sort(key=lambda n: getattr(test_acceptance, n).__code__.co_firstlineno)
    terminalreporter.section("acceptance criteria")
    for k, name in enumerate(order, 1):
        verdict = "PASS" if _results[name] else "FAIL"
        terminalreporter.write_line(f"[{k}] {verdict}  {titles[name]}")
