import pytest

from nehari_lab import Mesh, SolverOptions

_CRITERIA = {}


def record(number: int, title: str, ok: bool, detail: str = ""):
    """Remember one acceptance outcome; printed once at the end of the session."""
    _CRITERIA[number] = (title, bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {k:2d}. {title}: {detail}")


@pytest.fixture(scope="session")
def mesh():
    return Mesh(0.0, 1.0, 511)


@pytest.fixture(scope="session")
def small_mesh():
    return Mesh(0.0, 1.0, 63)


@pytest.fixture(scope="session")
def opts():
    return SolverOptions()
