"""Collects acceptance verdicts and prints them as one block after the run."""

import pytest

VERDICTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def verdict(request):
    """``verdict(ok, detail)`` records the criterion named by the test's docstring."""
    name = (request.node.function.__doc__ or request.node.name).strip().splitlines()[0]

    def record(ok: bool, detail: str) -> bool:
        VERDICTS[request.node.nodeid] = (bool(ok), f"{name}: {detail}")
        return bool(ok)

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and rep.failed and "verdict" in getattr(item, "fixturenames", ()):
        ok, text = VERDICTS.get(item.nodeid, (False, item.name))
        if ok:  # criterion met but a later check in the test broke
            VERDICTS[item.nodeid] = (False, text + " (test raised)")
        elif item.nodeid not in VERDICTS:
            VERDICTS[item.nodeid] = (False, f"{item.name}: raised {call.excinfo.typename}")


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for ok, text in VERDICTS.values():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {text}")
