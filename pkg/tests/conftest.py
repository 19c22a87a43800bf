import json
from pathlib import Path

import numpy as np
import pytest

from deepvqe.integrals import apply_stretching, compute_sto3g_integrals, lowdin_orthogonalize
from deepvqe.jordan_wigner import SpinOrbitalOrdering, jordan_wigner
from deepvqe.molecules import TREE10_FRAGMENTS, fragment_qubit_blocks, hydrogen_chain, tree10
from deepvqe.partition import SubsystemPartition, partition

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracle():
    return json.loads((DATA / "oracle.json").read_text())


def lowdin_system(geom):
    ints, S = compute_sto3g_integrals(geom)
    return lowdin_orthogonalize(ints, S)


@pytest.fixture(scope="session")
def h4():
    """H4 chain in Loewdin orbitals, its qubit Hamiltonian and a 2+2 orbital partition."""
    lo = lowdin_system(hydrogen_chain(4, 0.74))
    H = jordan_wigner(lo)
    ph = partition(H, SubsystemPartition.contiguous([4, 4]))
    return lo, H, ph


@pytest.fixture(scope="session")
def tree10_x1():
    lo = lowdin_system(apply_stretching(tree10(), 1.0))
    H = jordan_wigner(lo, SpinOrbitalOrdering.interleaved(10))
    ph = partition(H, SubsystemPartition(20, fragment_qubit_blocks(TREE10_FRAGMENTS)))
    return lo, H, ph


def random_unit(rng, n, complex_=True):
    v = rng.normal(size=n) + (1j * rng.normal(size=n) if complex_ else 0)
    return v / np.linalg.norm(v)


# acceptance verdicts, printed once at the end of the run
VERDICTS = {}


@pytest.fixture
def verdict():
    def record(criterion, status, detail=""):
        VERDICTS[criterion] = (status, detail)
    return record


def _criterion_key(name):
    head = name.split()[0]
    return (int("".join(c for c in head if c.isdigit())), head)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(VERDICTS, key=_criterion_key):
        status, detail = VERDICTS[name]
        terminalreporter.write_line(f"criterion {name}: {status}  {detail}".rstrip())
