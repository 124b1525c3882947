import pytest

from qpelab.cache import cached_phases
from qpelab.qsp import SignFunctionSpec

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def phase_cache(request):
    """Phase fits shared by the whole run, persisted under pytest's cache dir."""
    directory = request.config.cache.mkdir("qpelab-phases")

    def get(delta, kappa, degree, seed=0):
        return cached_phases(SignFunctionSpec(delta, kappa, degree), seed=seed, directory=directory)

    return get


@pytest.fixture
def criterion():
    """``record(number, passed, detail)``; every recorded line is echoed after the run."""

    def record(number: int, passed: bool, detail: str) -> bool:
        _CRITERIA[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
