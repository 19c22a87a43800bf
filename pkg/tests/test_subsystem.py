import numpy as np
import pytest

from deepvqe.jordan_wigner import SpinOrbitalOrdering, sz_operator
from deepvqe.pauli import PauliSum, QubitHamiltonian
from deepvqe.subsystem import StateVector, label_by_sz, solve_excited, solve_lowest


def test_minus_z():
    sol = solve_lowest(QubitHamiltonian.from_pauli_sum(PauliSum.from_words([(-1.0, "Z0")], 1)))
    assert abs(sol.ground.energy + 1) < 1e-12
    assert sol.ground.degeneracy == 1
    assert abs(abs(sol.ground.states[0, 0]) - 1) < 1e-12


def test_x_tensor_identity_is_twofold():
    h = QubitHamiltonian.from_pauli_sum(PauliSum.from_words([(1.0, "X0")], 2))
    sol = solve_lowest(h)
    assert sol.ground.degeneracy == 2
    assert abs(sol.ground.energy + 1) < 1e-12


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        solve_lowest(QubitHamiltonian(1), 0)


def random_h(rng, n, terms=30):
    xs = rng.integers(0, 1 << n, terms).astype(np.uint64)
    zs = rng.integers(0, 1 << n, terms).astype(np.uint64)
    return QubitHamiltonian(n, xs, zs, rng.normal(size=terms))


def test_dense_and_iterative_agree():
    rng = np.random.default_rng(0)
    h = random_h(rng, 8, 60)
    dense = solve_lowest(h, 3)
    sparse = solve_lowest(h, 3, dense_max_qubits=4)
    assert np.allclose(dense.energies[:3], sparse.energies[:3], atol=1e-9)
    w = np.linalg.eigvalsh(h.to_matrix())
    assert np.allclose(dense.energies[:3], w[:3], atol=1e-9)


def test_residuals_and_orthonormality():
    rng = np.random.default_rng(1)
    h = random_h(rng, 6)
    sol = solve_lowest(h, 4)
    V = sol.states()
    assert np.abs(V.conj().T @ V - np.eye(V.shape[1])).max() < 1e-10
    Hm = h.to_matrix()
    for lv in sol.levels:
        r = Hm @ lv.states - lv.energy * lv.states
        assert np.linalg.norm(r, axis=0).max() < 1e-8 * max(1, abs(lv.energy))


def one_orbital_sz():
    return sz_operator(SpinOrbitalOrdering.interleaved(1)).to_matrix()


def test_label_single_electron_pair():
    alpha = np.array([0, 1, 0, 0], dtype=complex)
    beta = np.array([0, 0, 1, 0], dtype=complex)
    states, sz, tags = label_by_sz(np.column_stack([beta, alpha]), one_orbital_sz())
    assert tags == ["up", "down"]
    assert np.allclose(sz, [0.5, -0.5])
    assert np.allclose(np.abs(states[:, 0]), np.abs(alpha))


def test_label_rotates_superpositions_to_sz_eigenstates():
    alpha = np.array([0, 1, 0, 0], dtype=complex)
    beta = np.array([0, 0, 1, 0], dtype=complex)
    mix = np.column_stack([(alpha + beta) / np.sqrt(2), (alpha - beta) / np.sqrt(2)])
    states, sz, tags = label_by_sz(mix, one_orbital_sz())
    assert tags == ["up", "down"]
    assert np.allclose(np.abs(states[:, 0]), np.abs(alpha))
    assert np.allclose(np.abs(states[:, 1]), np.abs(beta))


def test_tree10_branch_doublet(tree10_x1):
    lo, H, ph = tree10_x1
    ordering = SpinOrbitalOrdering.interleaved(10)
    block = ph.partition.blocks[1]
    sz = sz_operator(ordering, block).restrict(block)
    sol = solve_lowest(ph.locals[1], 1, sz=sz)
    assert sol.ground.degeneracy == 2
    assert sorted(sol.ground.tags) == ["down", "up"]
    assert np.allclose(sol.ground.sz, [0.5, -0.5], atol=1e-8)


def test_projector_reproducible(tree10_x1):
    ph = tree10_x1[2]
    P = []
    for _ in range(2):
        V = solve_lowest(ph.locals[1], 1).ground.states
        P.append(V @ V.conj().T)
    assert np.linalg.norm(P[0] - P[1]) < 1e-8


def test_solve_excited_counts_and_preference(tree10_x1):
    ordering = SpinOrbitalOrdering.interleaved(10)
    ph = tree10_x1[2]
    block = ph.partition.blocks[1]
    sz = sz_operator(ordering, block).restrict(block)
    states, labels, _ = solve_excited(ph.locals[1], 1, sz)
    assert states.shape[1] == 1 and labels[0][2] == "down"
    states, labels, _ = solve_excited(ph.locals[1], 1, sz, spin_preference="up")
    assert labels[0][2] == "up"
    states, labels, _ = solve_excited(ph.locals[1], 2, sz)
    assert [t for _, _, t in labels] == ["up", "down"]
    for _, s, _ in labels:
        assert abs(2 * s - round(2 * s)) < 1e-8


def test_state_vector_binary_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    sv = StateVector(3, v / np.linalg.norm(v))
    raw = sv.to_bytes()
    assert raw[:4] == (3).to_bytes(4, "little")
    assert len(raw) == 4 + 16 * 8
    path = tmp_path / "v.bin"
    sv.save(path)
    back = StateVector.load(path)
    assert back.n_qubits == 3 and np.array_equal(back.amplitudes, sv.amplitudes)
    with pytest.raises(ValueError):
        StateVector.from_bytes(raw[:-8])
