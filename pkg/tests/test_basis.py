import numpy as np
import pytest

from deepvqe.basis import (BasisStrategy, build_basis, build_basis_fixed_qubits, gram_schmidt,
                           number_adapted, qubit_report, split_qubit_budget, swap_operator)
from deepvqe.jordan_wigner import SpinOrbitalOrdering, sz_operator
from deepvqe.partition import SubsystemPartition, partition, strongest_interaction_qubits
from deepvqe.pauli import PauliSum, QubitHamiltonian
from deepvqe.subsystem import solve_excited


def test_gram_schmidt_examples():
    e00 = np.array([1, 0, 0, 0], dtype=complex)
    e01 = np.array([0, 1, 0, 0], dtype=complex)
    Q, kept, _ = gram_schmidt(np.column_stack([e00, e00 + e01]))
    assert Q.shape[1] == 2
    assert np.allclose(np.abs(Q[:, 1]), np.abs(e01))
    Q, kept, _ = gram_schmidt(np.column_stack([e00, e00]))
    assert Q.shape[1] == 1 and list(kept) == [True, False]


def test_gram_schmidt_rank():
    rng = np.random.default_rng(0)
    low = rng.normal(size=(16, 8)) @ rng.normal(size=(8, 20))
    Q, kept, _ = gram_schmidt(low.astype(complex))
    assert Q.shape[1] == np.linalg.matrix_rank(low) == 8
    assert np.abs(Q.conj().T @ Q - np.eye(8)).max() < 1e-10


def toy():
    h = QubitHamiltonian.from_pauli_sum(PauliSum.from_words(
        [(-1.0, "Z0"), (-1.0, "Z1"), (0.4, "X0 X1"), (0.05, "Z0 Z1"), (0.2, "Y0 Y1")], 2))
    return partition(h, SubsystemPartition.contiguous([1, 1]))


def test_single_pauli_one_qubit():
    ph = toy()
    start = np.array([[1.0], [0.0]], dtype=complex)
    b = build_basis(BasisStrategy("SinglePauli", (1, 1)), start, ph, 0)
    assert b.K == 2 and b.m == 1
    assert b.gram_error() < 1e-10


def test_strategy_validation():
    with pytest.raises(ValueError):
        BasisStrategy("Interactions", (1,))
    with pytest.raises(ValueError):
        BasisStrategy("SinglePauli", (1,), epsilon=0.1)
    with pytest.raises(ValueError):
        BasisStrategy("InteractionsFixQubits", (1,))
    with pytest.raises(ValueError):
        BasisStrategy("Bogus", (1,))
    with pytest.raises(ValueError):
        BasisStrategy("SinglePauli", (0,))
    assert BasisStrategy("Interactions", (1, 1), epsilon=0.01).label == \
        "Interactions(11)[eps=0.01]"


def test_interactions_threshold():
    ph = toy()
    start = np.array([[1.0], [0.0]], dtype=complex)
    # |lambda| > 0.1 keeps X and Y factors only, both flip |0> to |1>
    b = build_basis(BasisStrategy("Interactions", (1, 1), epsilon=0.1), start, ph, 0)
    assert b.K == 2
    b = build_basis(BasisStrategy("Interactions", (1, 1), epsilon=1.0), start, ph, 0)
    assert b.K == 1


def test_swap_operator_matrix():
    m = swap_operator(0, 1, 2).to_matrix()
    expected = np.eye(4)[[0, 2, 1, 3]]
    assert np.allclose(m, expected)


def tree_starts(ph, l):
    ordering = SpinOrbitalOrdering.interleaved(10)
    out = []
    for i, block in enumerate(ph.partition.blocks):
        sz = sz_operator(ordering, block).restrict(block)
        out.append(solve_excited(ph.locals[i], l, sz)[0])
    return out


@pytest.fixture(scope="module")
def tree_setup(tree10_x1):
    ph = tree10_x1[2]
    edges = strongest_interaction_qubits(ph, partner_of=SpinOrbitalOrdering.interleaved(10)
                                         .partner_of())
    return ph, edges, {1: tree_starts(ph, 1), 2: tree_starts(ph, 2)}


@pytest.mark.parametrize("kind, l, n_tot", [
    ("ParticleConserving", 1, 17), ("ParticleConservingEdge", 1, 11),
    ("SinglePauliEdge", 1, 11), ("ParticleConservingEdge", 2, 14), ("SinglePauliEdge", 2, 14),
])
def test_tree10_qubit_counts(tree_setup, kind, l, n_tot):
    ph, edges, starts = tree_setup
    strat = BasisStrategy(kind, (l,) * 4)
    bases = [build_basis(strat, starts[l][i], ph, i, edges=edges) for i in range(4)]
    assert qubit_report(bases)[2] == n_tot
    for i, b in enumerate(bases):
        assert b.gram_error() < 1e-10
        # starting vectors reproduced by the first l basis vectors
        S = starts[l][i]
        assert np.allclose(np.abs(np.sum(b.vectors[:, :l].conj() * S, axis=0)), 1, atol=1e-10)


def test_basis_size_bounds(tree_setup):
    ph, edges, starts = tree_setup
    for i, n in enumerate(ph.partition.sizes):
        for kind, bound in [("SinglePauli", 1 + 3 * n),
                            ("ParticleConserving", 1 + 2 * n + n * (n - 1) // 2),
                            ("SinglePauliEdge", 1 + 3 * len(edges[i])),
                            ("ParticleConservingEdge",
                             1 + 2 * len(edges[i]) + len(edges[i]) * (len(edges[i]) - 1) // 2)]:
            b = build_basis(BasisStrategy(kind, (1,) * 4), starts[1][i], ph, i, edges=edges)
            assert b.K <= bound
        eps = 1e-2
        n_ops = int(np.sum(ph.active(i) & (np.abs(ph.lam) > eps)))
        b = build_basis(BasisStrategy("Interactions", (1,) * 4, epsilon=eps), starts[1][i], ph, i)
        assert b.K <= 1 + n_ops


def test_more_starts_never_shrink_span(tree_setup):
    ph, edges, starts = tree_setup
    for kind in ("SinglePauliEdge", "ParticleConservingEdge"):
        for i in range(4):
            b1 = build_basis(BasisStrategy(kind, (1,) * 4), starts[1][i], ph, i, edges=edges)
            b2 = build_basis(BasisStrategy(kind, (2,) * 4), starts[2][i], ph, i, edges=edges)
            proj = b2.vectors @ (b2.vectors.conj().T @ b1.vectors)
            assert np.abs(proj - b1.vectors).max() < 1e-8


def test_edge_basis_invariant_under_rescaling(tree_setup):
    ph, edges, starts = tree_setup
    scaled = ph.with_interactions(np.arange(ph.n_interactions))
    scaled.lam = 2.5 * ph.lam
    edges2 = strongest_interaction_qubits(scaled, partner_of=SpinOrbitalOrdering
                                          .interleaved(10).partner_of())
    assert edges2 == edges


def test_fixed_qubits_budget_examples(tree_setup):
    ph, edges, starts = tree_setup
    i = 1
    full = build_basis(BasisStrategy("Interactions", (1,) * 4, epsilon=0.0), starts[1][i], ph, i)
    roomy = build_basis_fixed_qubits(starts[1][i], ph, i, 6)
    assert roomy.K == full.K and roomy.epsilon_adapt == 0.0
    tight = build_basis_fixed_qubits(starts[1][i], ph, i, 0)
    assert tight.K == 1
    assert tight.epsilon_adapt > 0
    mid = build_basis_fixed_qubits(starts[1][i], ph, i, 3)
    assert mid.K <= 8
    with pytest.raises(ValueError):
        build_basis_fixed_qubits(starts[2][i], ph, i, 0)


def test_number_adapted_keeps_span(tree_setup):
    ph, edges, starts = tree_setup
    b = build_basis(BasisStrategy("ParticleConserving", (1,) * 4), starts[1][1], ph, 1)
    nb = number_adapted(b)
    assert nb.n_labels is not None and nb.K == b.K
    assert np.abs(nb.vectors @ (nb.vectors.conj().T @ b.vectors) - b.vectors).max() < 1e-10
    # ground state stays first
    assert abs(abs(np.vdot(nb.vectors[:, 0], b.vectors[:, 0])) - 1) < 1e-10


def test_split_qubit_budget():
    assert split_qubit_budget(12, [2, 6, 6, 6]) == [2, 4, 3, 3]
    assert split_qubit_budget(20, [2, 6, 6, 6]) == [2, 6, 6, 6]
    assert sum(split_qubit_budget(7, [4, 4])) == 7


def test_provenance_text(tree_setup):
    ph, edges, starts = tree_setup
    b = build_basis(BasisStrategy("SinglePauliEdge", (1,) * 4), starts[1][0], ph, 0, edges=edges)
    text = b.provenance_text()
    assert text.startswith(f"# subsystem 0: K={b.K} m={b.m}")
    assert "start" in text
