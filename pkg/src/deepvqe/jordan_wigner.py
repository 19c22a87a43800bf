"""Jordan-Wigner map from second-quantised integrals to a qubit Hamiltonian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrals import IntegralSet
from .pauli import DROP_TOL, PauliSum, QubitHamiltonian, product_phase, _IPOW


@dataclass(frozen=True)
class SpinOrbitalOrdering:
    """Bijection (spatial orbital, spin) -> qubit.

    The default puts the alpha/beta pair of each spatial orbital on adjacent
    qubits, following ``spatial_order``; listing the orbitals subsystem by
    subsystem makes every subsystem a contiguous qubit block.
    """

    qubit_of: tuple[tuple[int, int], ...]  # qubit_of[p] = (alpha qubit, beta qubit)

    def __post_init__(self):
        flat = [q for pair in self.qubit_of for q in pair]
        if sorted(flat) != list(range(len(flat))):
            raise ValueError("spin-orbital ordering is not a bijection onto 0..n_spin-1")

    @classmethod
    def interleaved(cls, n_spatial: int, spatial_order=None) -> "SpinOrbitalOrdering":
        order = list(range(n_spatial)) if spatial_order is None else list(spatial_order)
        if sorted(order) != list(range(n_spatial)):
            raise ValueError("spatial_order must be a permutation of the spatial orbitals")
        pos = {p: k for k, p in enumerate(order)}
        return cls(tuple((2 * pos[p], 2 * pos[p] + 1) for p in range(n_spatial)))

    @classmethod
    def blocked_spin(cls, n_spatial: int) -> "SpinOrbitalOrdering":
        """All alpha orbitals first, then all beta orbitals."""
        return cls(tuple((p, n_spatial + p) for p in range(n_spatial)))

    @property
    def n_spatial(self) -> int:
        return len(self.qubit_of)

    @property
    def n_qubits(self) -> int:
        return 2 * len(self.qubit_of)

    def qubit(self, p: int, spin: int) -> int:
        return self.qubit_of[p][spin]

    def spin_of_qubit(self) -> np.ndarray:
        """+1 for alpha qubits, -1 for beta qubits."""
        s = np.zeros(self.n_qubits, dtype=int)
        for a, b in self.qubit_of:
            s[a], s[b] = 1, -1
        return s

    def partner_of(self) -> np.ndarray:
        """Qubit holding the opposite spin of the same spatial orbital."""
        out = np.zeros(self.n_qubits, dtype=int)
        for a, b in self.qubit_of:
            out[a], out[b] = b, a
        return out

    def describe(self) -> str:
        return " ".join(f"{p}a:{a} {p}b:{b}" for p, (a, b) in enumerate(self.qubit_of))


def _ladder_components(qubits, dagger, string_masks=None):
    """Pauli components of a_q (or a_q^dagger): two strings per operator.

    ``a_q = (X_q + iY_q)/2 * Z_string`` with the string on all lower qubits
    unless ``string_masks`` overrides it.
    """
    q = np.asarray(qubits, dtype=np.uint64)
    bit = np.uint64(1) << q
    low = bit - np.uint64(1) if string_masks is None else np.asarray(string_masks, np.uint64)
    sign = -1j if dagger else 1j
    xs = np.stack([bit, bit], axis=-1)
    zs = np.stack([low, low | bit], axis=-1)
    cs = np.broadcast_to(np.array([0.5, 0.5 * sign]), xs.shape)
    return xs, zs, cs


def ladder_products(n_qubits, indices, daggers, coeffs, string_masks=None,
                    tol=DROP_TOL) -> PauliSum:
    """Sum_k coeffs[k] * prod_j op_j(indices[k, j]) as a Pauli sum.

    ``daggers[j]`` says whether factor j is a creation operator. Products are
    formed left to right, vectorised over k.
    """
    indices = np.atleast_2d(np.asarray(indices, dtype=np.int64))
    coeffs = np.asarray(coeffs, dtype=complex)
    m, order = indices.shape
    xs = np.zeros((m, 1), dtype=np.uint64)
    zs = np.zeros((m, 1), dtype=np.uint64)
    cs = coeffs[:, None].astype(complex)
    for j in range(order):
        strings = None if string_masks is None else string_masks[indices[:, j]]
        fx, fz, fc = _ladder_components(indices[:, j], daggers[j], strings)
        e, nx, nz = product_phase(xs[:, :, None], zs[:, :, None], fx[:, None, :], fz[:, None, :])
        cs = (cs[:, :, None] * fc[:, None, :] * _IPOW[e]).reshape(m, -1)
        xs = nx.reshape(m, -1)
        zs = nz.reshape(m, -1)
    return PauliSum(n_qubits, xs.ravel(), zs.ravel(), cs.ravel(), tol=tol)


def annihilation(q: int, n_qubits: int, string_qubits=None) -> PauliSum:
    """a_q with the JW string on ``string_qubits`` (default: all qubits below q)."""
    masks = None
    if string_qubits is not None:
        m = 0
        for s in string_qubits:
            m |= 1 << int(s)
        masks = np.zeros(n_qubits, dtype=np.uint64)
        masks[q] = m
    return ladder_products(n_qubits, [[q]], [False], [1.0], masks)


def creation(q: int, n_qubits: int, string_qubits=None) -> PauliSum:
    return annihilation(q, n_qubits, string_qubits).adjoint()


def number_operator(n_qubits: int, qubits=None) -> QubitHamiltonian:
    qubits = list(range(n_qubits) if qubits is None else qubits)
    pairs = [(-0.5, f"Z{q}") for q in qubits] + [(0.5 * len(qubits), "I")]
    return QubitHamiltonian.from_pauli_sum(PauliSum.from_words(pairs, n_qubits))


def sz_operator(ordering: SpinOrbitalOrdering, qubits=None) -> QubitHamiltonian:
    """S_z = (N_alpha - N_beta)/2 restricted to ``qubits`` (default: all)."""
    n = ordering.n_qubits
    spin = ordering.spin_of_qubit()
    qubits = range(n) if qubits is None else qubits
    pairs = [(-0.25 * spin[q], f"Z{q}") for q in qubits]
    pairs.append((0.25 * sum(spin[q] for q in qubits), "I"))
    return QubitHamiltonian.from_pauli_sum(PauliSum.from_words(pairs, n))


def spin_orbital_integrals(integrals: IntegralSet, ordering: SpinOrbitalOrdering):
    """Return (h1_so, h2_so) over qubit indices.

    ``h2_so[p,q,r,s]`` multiplies ``a+_p a+_q a_s a_r`` with the 1/2 included
    in the caller.
    """
    n = ordering.n_qubits
    h1 = integrals.h1
    g = integrals.eri_physicist
    h1_so = np.zeros((n, n))
    h2_so = np.zeros((n, n, n, n))
    qa = np.array([ordering.qubit(p, 0) for p in range(integrals.n_spatial)])
    qb = np.array([ordering.qubit(p, 1) for p in range(integrals.n_spatial)])
    for q in (qa, qb):
        h1_so[np.ix_(q, q)] = h1
    for s1 in (qa, qb):
        for s2 in (qa, qb):
            h2_so[np.ix_(s1, s2, s1, s2)] = g
    return h1_so, h2_so


def jordan_wigner(integrals: IntegralSet, ordering: SpinOrbitalOrdering | None = None,
                  tol: float = DROP_TOL) -> QubitHamiltonian:
    """Qubit Hamiltonian of the integrals under the JW map.

    ``a+_p -> (prod_{q<p} Z_q)(X_p - iY_p)/2``; the constant includes e_nuc.
    """
    if ordering is None:
        ordering = SpinOrbitalOrdering.interleaved(integrals.n_spatial)
    if ordering.n_spatial != integrals.n_spatial:
        raise ValueError("ordering and integrals disagree on the orbital count")
    n = ordering.n_qubits
    h1_so, h2_so = spin_orbital_integrals(integrals, ordering)

    one = np.argwhere(np.abs(h1_so) > 0)
    parts = [ladder_products(n, one, (True, False), h1_so[one[:, 0], one[:, 1]], tol=0.0)]

    two = np.argwhere(np.abs(h2_so) > 0)
    # a+_p a+_q a_s a_r vanishes for p == q or r == s
    two = two[(two[:, 0] != two[:, 1]) & (two[:, 2] != two[:, 3])]
    vals = 0.5 * h2_so[two[:, 0], two[:, 1], two[:, 2], two[:, 3]]
    idx = two[:, [0, 1, 3, 2]]
    chunk = 20000
    for start in range(0, len(idx), chunk):
        parts.append(ladder_products(n, idx[start:start + chunk], (True, True, False, False),
                                     vals[start:start + chunk], tol=0.0))
    parts.append(PauliSum.identity(n, integrals.e_nuc))
    # merge once so cancelling contributions from different chunks meet before dropping
    op = PauliSum(n, np.concatenate([p.xs for p in parts]), np.concatenate([p.zs for p in parts]),
                  np.concatenate([p.coeffs for p in parts]), tol=tol)
    return QubitHamiltonian.from_pauli_sum(op)
