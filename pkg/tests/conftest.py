import pytest

from stratified_sparse.groups import build_group
from stratified_sparse.spectral import assemble_sublaplacian, decompose, spectral_decompose


@pytest.fixture(scope="session")
def torus64():
    return build_group("torus:d=1,n=64")


@pytest.fixture(scope="session")
def torus16():
    return build_group("torus:d=1,n=16")


@pytest.fixture(scope="session")
def heis4():
    return build_group("heisenberg:n=4")


@pytest.fixture(scope="session")
def heis6():
    return build_group("heisenberg:n=6")


@pytest.fixture(scope="session")
def dec_torus64(torus64):
    return decompose(torus64, 32.0)


@pytest.fixture(scope="session")
def dec_torus64_s8(torus64):
    return decompose(torus64, 8.0)


@pytest.fixture(scope="session")
def dec_heis6(heis6):
    return spectral_decompose(assemble_sublaplacian(heis6, 32.0))


# ----------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion

_SESSION = {"start": None, "lines": []}


def pytest_sessionstart(session):
    import time
    _SESSION["start"] = time.perf_counter()


def pytest_collection_modifyitems(session, config, items):
    # the wall-clock criterion measures the whole session, so it runs last
    last = [it for it in items if it.name == "test_criterion_14_wall_clock"]
    items[:] = [it for it in items if it not in last] + last


@pytest.fixture
def session_start():
    return _SESSION["start"]


@pytest.fixture
def criterion(capsys):
    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        _SESSION["lines"].append(line)
        with capsys.disabled():
            print("\n" + line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _SESSION["lines"]:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_SESSION["lines"]):
            terminalreporter.write_line(line)
