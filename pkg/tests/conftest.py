import pytest

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of a numbered acceptance criterion.

    Call ``criterion(k, ok, detail)``; a test that errors before recording
    is reported as FAIL.
    """
    seen = []

    def record(k: int, ok: bool, detail: str = ""):
        _CRITERIA[k] = (bool(ok), detail)
        seen.append(k)

    yield record
    if not seen:
        k = request.node.get_closest_marker("criterion")
        if k is not None:
            _CRITERIA[k.args[0]] = (False, "raised before reporting")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        ok, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
