import numpy as np
import pytest

from dirac_hartree.basis import Domain, LatticeParameter, build_basis
from dirac_hartree.operators import ProblemParams, SpinorState
from dirac_hartree.solver import SolverOptions, ladder


@pytest.fixture(scope="session")
def default_basis():
    return build_basis()


@pytest.fixture(scope="session")
def small_basis():
    return build_basis(Domain(1.0), LatticeParameter(1.0), M=2, N=4, N_d=8, N_r=64, N_theta=16)


@pytest.fixture(scope="session")
def default_ladder(default_basis):
    """The five-branch ladder at omega = 0, kappa = -1 (shared by several modules)."""
    return ladder(default_basis, ProblemParams(0.0, -1.0), 5, SolverOptions())


def random_state(basis, seed, norm=1.0):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=basis.n_dirac) + 1j * rng.normal(size=basis.n_dirac)
    return SpinorState(basis, norm * c / np.linalg.norm(c))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
