import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepvqe.fci import fci_energy
from deepvqe.partition import (DecoupledSubsystemsError, SubsystemPartition, filter_interactions,
                               partition, strongest_interaction_qubits)
from deepvqe.pauli import PauliSum, QubitHamiltonian


def test_term_routing():
    h = QubitHamiltonian.from_pauli_sum(PauliSum.from_words(
        [(0.3, "Z0 Z3"), (0.2, "X0 X1"), (1.5, "I")], 4))
    ph = partition(h, SubsystemPartition.contiguous([2, 2]))
    assert ph.constant == 1.5
    assert ph.locals[0].equals(PauliSum.from_words([(0.2, "X0 X1")], 2))
    assert len(ph.locals[1]) == 0
    (term,) = ph.interactions
    assert term.lam == 0.3
    assert term.words([2, 2]) == ["Z0", "Z1"]


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 10), st.integers(1, 200), st.integers(0, 2**31 - 1))
def test_reassembly_identity(n, n_terms, seed):
    rng = np.random.default_rng(seed)
    xs = rng.integers(0, 1 << n, n_terms).astype(np.uint64)
    zs = rng.integers(0, 1 << n, n_terms).astype(np.uint64)
    h = QubitHamiltonian(n, xs, zs, rng.normal(size=n_terms))
    assignment = rng.integers(0, 3, n)
    assignment[:3 if n >= 3 else n] = np.arange(min(3, n))
    p = SubsystemPartition.from_assignment(list(assignment))
    ph = partition(h, p)
    back = ph.reassemble()
    assert back.equals(h, tol=0.0)
    assert len(back) == len(h)
    # merged: no two interactions share a factor tuple
    keys = {(tuple(x), tuple(z)) for x, z in zip(ph.xm.tolist(), ph.zm.tolist())}
    assert len(keys) == ph.n_interactions


def test_tree10_reassembly_ground_energy(tree10_x1):
    lo, H, ph = tree10_x1
    assert ph.partition.sizes == [2, 6, 6, 6]
    assert ph.reassemble().equals(H, tol=0.0)


def test_interactions_sorted_by_magnitude(tree10_x1):
    lam = np.abs(tree10_x1[2].lam)
    assert np.all(lam[:-1] >= lam[1:])


def test_filter_interactions():
    rng = np.random.default_rng(5)
    h = QubitHamiltonian(6, rng.integers(0, 64, 80).astype(np.uint64),
                         rng.integers(0, 64, 80).astype(np.uint64), rng.normal(size=80))
    ph = partition(h, SubsystemPartition.contiguous([3, 3]))
    assert filter_interactions(ph, 0.0).n_interactions == ph.n_interactions
    assert filter_interactions(ph, 1e9).n_interactions == 0
    small = filter_interactions(ph, 0.8)
    big = filter_interactions(ph, 0.3)
    as_set = lambda q: {(float(l), tuple(x), tuple(z))
                        for l, x, z in zip(q.lam, q.xm.tolist(), q.zm.tolist())}
    assert as_set(small) <= as_set(big)
    with pytest.raises(ValueError):
        filter_interactions(ph, -1)


def test_strongest_interaction():
    h = QubitHamiltonian.from_pauli_sum(PauliSum.from_words(
        [(0.5, "Z0 Z2"), (-0.9, "X1 X3")], 4))
    ph = partition(h, SubsystemPartition(4, ((0, 1), (2, 3))))
    assert strongest_interaction_qubits(ph) == [[1], [1]]
    assert strongest_interaction_qubits(ph, per_subsystem=False) == [[1], [1]]
    # invariant under positive rescaling
    ph.lam = ph.lam * 3.0
    assert strongest_interaction_qubits(ph) == [[1], [1]]
    # closed over spin partners 0<->1, 2<->3
    assert strongest_interaction_qubits(ph, partner_of=[1, 0, 3, 2]) == [[0, 1], [0, 1]]


def test_decoupled_subsystems():
    h = QubitHamiltonian.from_pauli_sum(PauliSum.from_words([(1.0, "Z0"), (1.0, "Z1")], 2))
    ph = partition(h, SubsystemPartition.contiguous([1, 1]))
    with pytest.raises(DecoupledSubsystemsError):
        strongest_interaction_qubits(ph)


def test_partition_validation():
    with pytest.raises(ValueError):
        SubsystemPartition(3, ((0, 1), (1, 2)))
    with pytest.raises(ValueError):
        partition(QubitHamiltonian(3), SubsystemPartition.contiguous([2]))


def test_text_serialisation(tree10_x1):
    text = tree10_x1[2].to_text()
    assert text.startswith("# partitioned hamiltonian: M=4 n_qubits=20")
    assert f"[interactions] count {tree10_x1[2].n_interactions}" in text
