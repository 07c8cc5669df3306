import pytest

_verdicts = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    _verdicts.append((number, title, "PASS" if rep.passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, verdict, detail in sorted(_verdicts):
        line = f"criterion {number} [{title}]: {verdict}"
        terminalreporter.write_line(f"{line} ({detail})" if detail else line)
