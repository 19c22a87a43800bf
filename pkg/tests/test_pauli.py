import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepvqe.pauli import (PauliSum, PauliTerm, QubitHamiltonian, matrix_representation, multiply,
                           single_pauli)

LETTER = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
          "Z": np.diag([1.0, -1.0])}


def kron_oracle(term: PauliTerm) -> np.ndarray:
    """Matrix of a Pauli term with qubit 0 as the least significant bit."""
    m = np.eye(1)
    for q in reversed(range(term.n_qubits)):
        m = np.kron(m, LETTER[term.letter(q)])
    return term.coefficient * m


def test_single_qubit_products():
    x = PauliTerm.from_word("X0", 1)
    y = PauliTerm.from_word("Y0", 1)
    z = PauliTerm.from_word("Z0", 1)
    p = multiply(x, y)
    assert p.word == "Z0" and p.coefficient == 1j
    zz = multiply(z, z)
    assert zz.word == "I" and zz.coefficient == 1


def test_two_qubit_product_against_matrices():
    a = PauliTerm.from_word("X0 Z1", 2)
    b = PauliTerm.from_word("Y0 Y1", 2)
    assert np.allclose(kron_oracle(multiply(a, b)), kron_oracle(a) @ kron_oracle(b))


def test_multiply_mismatched_sizes():
    with pytest.raises(ValueError):
        multiply(PauliTerm.from_word("X0", 1), PauliTerm.from_word("X0", 2))


words = st.lists(st.sampled_from("IXYZ"), min_size=3, max_size=3)


@given(words, words)
def test_product_phase_property(a, b):
    ta = PauliTerm.from_word(" ".join(f"{c}{q}" for q, c in enumerate(a) if c != "I"), 3)
    tb = PauliTerm.from_word(" ".join(f"{c}{q}" for q, c in enumerate(b) if c != "I"), 3)
    assert np.allclose(kron_oracle(ta * tb), kron_oracle(ta) @ kron_oracle(tb))


def test_matrix_representation_small():
    assert np.allclose(PauliSum.identity(1).to_matrix(), np.eye(2))
    assert np.allclose(single_pauli("X", 0, 1).to_matrix(), [[0, 1], [1, 0]])


def random_hermitian_sum(rng, n, n_terms):
    xs = rng.integers(0, 1 << n, n_terms).astype(np.uint64)
    zs = rng.integers(0, 1 << n, n_terms).astype(np.uint64)
    return QubitHamiltonian(n, xs, zs, rng.normal(size=n_terms))


def test_matrix_matches_kronecker_oracle():
    rng = np.random.default_rng(0)
    h = random_hermitian_sum(rng, 3, 12)
    oracle = sum(kron_oracle(t) for t in h)
    assert np.abs(h.to_matrix() - oracle).max() < 1e-14
    assert np.abs(h.to_matrix() - h.to_matrix().conj().T).max() < 1e-12
    sparse = matrix_representation(h, sparse=True).toarray()
    assert np.abs(sparse - oracle).max() < 1e-14


def test_matrix_on_subset_and_outside_support():
    h = PauliSum.from_words([(1.0, "Z1 X3")], 4)
    m = h.to_matrix(qubits=[1, 3])
    assert np.allclose(m, np.kron(LETTER["X"], LETTER["Z"]))
    with pytest.raises(ValueError):
        h.to_matrix(qubits=[0, 1])


def test_apply_matches_matrix():
    rng = np.random.default_rng(1)
    h = random_hermitian_sum(rng, 5, 40)
    psi = rng.normal(size=32) + 1j * rng.normal(size=32)
    assert np.allclose(h.apply(psi), h.to_matrix() @ psi)


def test_merging_and_drop_tolerance():
    s = PauliSum.from_words([(1.0, "X0"), (-1.0, "X0"), (0.5, "Z1"), (1e-14, "Y0")], 2)
    assert len(s) == 1
    assert s.equals(PauliSum.from_words([(0.5, "Z1")], 2))


def test_hamiltonian_requires_hermitian():
    with pytest.raises(ValueError):
        QubitHamiltonian.from_pauli_sum(PauliSum.from_words([(1j, "X0")], 1))


def test_text_round_trip_sorted():
    rng = np.random.default_rng(2)
    h = random_hermitian_sum(rng, 4, 20)
    text = h.to_text()
    back = QubitHamiltonian.from_text(text, 4)
    assert back.equals(h)
    assert back.to_text() == text


def test_text_parse_error_has_line():
    with pytest.raises(ValueError, match="line 2"):
        PauliSum.from_text("1.0 X0\nfoo Z1\n", 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_commutator_is_matrix_commutator(seed):
    rng = np.random.default_rng(seed)
    a = random_hermitian_sum(rng, 3, 5)
    b = random_hermitian_sum(rng, 3, 5)
    A, B = a.to_matrix(), b.to_matrix()
    assert np.allclose(a.commutator(b).to_matrix(), A @ B - B @ A)
