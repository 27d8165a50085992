import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    state = {"label": request.node.name, "detail": ""}

    def describe(label, detail=""):
        state["label"], state["detail"] = label, detail

    yield describe
    rep = getattr(request.node, "rep_call", None)
    passed = rep is not None and rep.passed
    line = f"{'PASS' if passed else 'FAIL'}  {state['label']}"
    if state["detail"]:
        line += f"  ({state['detail']})"
    ACCEPTANCE_LINES.append(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
