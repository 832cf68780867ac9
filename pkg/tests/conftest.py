import numpy as np
import pytest

from blockcoh import fixture, st_projectors
from blockcoh.search import OptimizerBudget


@pytest.fixture(scope="session")
def P():
    return st_projectors()


@pytest.fixture(scope="session")
def ordering_pair():
    return fixture("ordering_pair_rho1").matrix, fixture("ordering_pair_rho2").matrix


@pytest.fixture(scope="session")
def l1_rel_pair():
    return fixture("l1_rel_pair_rho1").matrix, fixture("l1_rel_pair_rho2").matrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def fast_budget():
    return OptimizerBudget(restarts=4)


def balanced_state() -> np.ndarray:
    """(|S> + |T0>)/sqrt(2) in the S-T basis."""
    v = np.array([1, 0, 1, 0], dtype=complex) / np.sqrt(2)
    return np.outer(v, v.conj())


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Remember one acceptance verdict; all of them are printed at the end of the run."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
