"""Pauli strings in symplectic (x, z) bitmask form.

A string with masks ``(x, z)`` denotes ``i^{|x & z|} X^x Z^z``, so a qubit with
both bits set carries a ``Y``. Basis state ``|b>`` stores qubit ``q`` in bit
``q`` of ``b``; dense matrices therefore follow ``kron(P_{n-1}, ..., P_0)``.
Masks are held as ``uint64`` arrays, which caps operators at 64 qubits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

DROP_TOL = 1e-12
HERMITIAN_TOL = 1e-12

_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_IPOW = np.array([1, 1j, -1, -1j])


def popcount(a):
    return np.bitwise_count(np.asarray(a, dtype=np.uint64)).astype(np.int64)


def product_phase(x1, z1, x2, z2):
    """Exponent ``e`` (mod 4) with ``P(x1,z1) P(x2,z2) = i^e P(x1^x2, z1^z2)``."""
    x3 = np.bitwise_xor(x1, x2)
    z3 = np.bitwise_xor(z1, z2)
    e = (popcount(np.bitwise_and(x1, z1)) + popcount(np.bitwise_and(x2, z2))
         - popcount(np.bitwise_and(x3, z3)) + 2 * popcount(np.bitwise_and(z1, x2)))
    return np.mod(e, 4), x3, z3


@dataclass(frozen=True)
class PauliTerm:
    x_mask: int
    z_mask: int
    coefficient: complex = 1.0
    n_qubits: int = 1

    @classmethod
    def from_word(cls, word: str, n_qubits: int, coefficient: complex = 1.0) -> "PauliTerm":
        """Parse ``"X0 Z3 Y5"`` (or ``"I"``)."""
        x = z = 0
        for tok in word.split():
            letter, q = tok[0].upper(), tok[1:]
            if letter == "I" and not q:
                continue
            if letter not in _BITS or not q.isdigit():
                raise ValueError(f"bad Pauli token {tok!r}")
            q = int(q)
            if q >= n_qubits:
                raise ValueError(f"qubit {q} out of range for {n_qubits} qubits")
            bx, bz = _BITS[letter]
            if (x >> q) & 1 or (z >> q) & 1:
                raise ValueError(f"qubit {q} appears twice in {word!r}")
            x |= bx << q
            z |= bz << q
        return cls(x, z, complex(coefficient), n_qubits)

    @property
    def support(self) -> list[int]:
        m = self.x_mask | self.z_mask
        return [q for q in range(self.n_qubits) if (m >> q) & 1]

    def letter(self, q: int) -> str:
        return _LETTERS[((self.x_mask >> q) & 1, (self.z_mask >> q) & 1)]

    @property
    def word(self) -> str:
        toks = [f"{self.letter(q)}{q}" for q in self.support]
        return " ".join(toks) if toks else "I"

    def __mul__(self, other):
        if isinstance(other, PauliTerm):
            return multiply(self, other)
        return PauliTerm(self.x_mask, self.z_mask, self.coefficient * other, self.n_qubits)

    __rmul__ = __mul__

    def __repr__(self):
        return f"PauliTerm({self.coefficient:g} * {self.word})"


def multiply(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit counts differ: {a.n_qubits} vs {b.n_qubits}")
    e, x, z = product_phase(np.uint64(a.x_mask), np.uint64(a.z_mask),
                            np.uint64(b.x_mask), np.uint64(b.z_mask))
    return PauliTerm(int(x), int(z), a.coefficient * b.coefficient * _IPOW[int(e)], a.n_qubits)


def _merge(xs, zs, cs, tol):
    if len(cs) == 0:
        return xs, zs, cs
    order = np.lexsort((zs, xs))
    xs, zs, cs = xs[order], zs[order], cs[order]
    new = np.ones(len(xs), dtype=bool)
    new[1:] = (xs[1:] != xs[:-1]) | (zs[1:] != zs[:-1])
    idx = np.flatnonzero(new)
    cs = np.add.reduceat(cs, idx)
    xs, zs = xs[idx], zs[idx]
    keep = np.abs(cs) > tol
    return xs[keep], zs[keep], cs[keep]


def compress_mask(masks, qubits):
    """Gather the bits at positions ``qubits`` into positions 0..k-1."""
    masks = np.asarray(masks, dtype=np.uint64)
    out = np.zeros_like(masks)
    for k, q in enumerate(qubits):
        out |= ((masks >> np.uint64(q)) & np.uint64(1)) << np.uint64(k)
    return out


def expand_mask(masks, qubits):
    """Inverse of :func:`compress_mask`."""
    masks = np.asarray(masks, dtype=np.uint64)
    out = np.zeros_like(masks)
    for k, q in enumerate(qubits):
        out |= ((masks >> np.uint64(k)) & np.uint64(1)) << np.uint64(q)
    return out


def qubit_mask(qubits) -> int:
    m = 0
    for q in qubits:
        m |= 1 << int(q)
    return m


class PauliSum:
    """Linear combination of Pauli strings with complex coefficients.

    Construction merges duplicate strings and drops coefficients with modulus
    at or below ``tol``. Instances are treated as immutable.
    """

    def __init__(self, n_qubits, xs=(), zs=(), coeffs=(), tol=DROP_TOL, merged=False):
        if n_qubits > 64:
            raise ValueError("at most 64 qubits are supported")
        self.n_qubits = int(n_qubits)
        xs = np.asarray(xs, dtype=np.uint64).ravel()
        zs = np.asarray(zs, dtype=np.uint64).ravel()
        cs = np.asarray(coeffs, dtype=complex).ravel()
        if not (len(xs) == len(zs) == len(cs)):
            raise ValueError("mask and coefficient arrays differ in length")
        if len(xs) and self.n_qubits < 64:
            limit = np.uint64(1 << self.n_qubits)
            if np.any(xs >= limit) or np.any(zs >= limit):
                raise ValueError("Pauli mask exceeds n_qubits")
        if not merged:
            xs, zs, cs = _merge(xs, zs, cs, tol)
        self.xs, self.zs, self.coeffs = xs, zs, cs

    # construction helpers
    @classmethod
    def identity(cls, n_qubits, coeff=1.0):
        return cls(n_qubits, [0], [0], [coeff])

    @classmethod
    def zero(cls, n_qubits):
        return cls(n_qubits)

    @classmethod
    def from_terms(cls, terms, n_qubits=None):
        terms = list(terms)
        if n_qubits is None:
            n_qubits = terms[0].n_qubits
        return cls(n_qubits, [t.x_mask for t in terms], [t.z_mask for t in terms],
                   [t.coefficient for t in terms])

    @classmethod
    def from_words(cls, pairs, n_qubits):
        """``pairs`` of ``(coefficient, word)``, e.g. ``[(0.5, "X0 Z1")]``."""
        return cls.from_terms([PauliTerm.from_word(w, n_qubits, c) for c, w in pairs], n_qubits)

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        for x, z, c in zip(self.xs, self.zs, self.coeffs):
            yield PauliTerm(int(x), int(z), complex(c), self.n_qubits)

    @property
    def terms(self) -> list[PauliTerm]:
        return list(self)

    def _like(self, xs, zs, cs, **kw):
        return PauliSum(self.n_qubits, xs, zs, cs, **kw)

    def __add__(self, other):
        if np.isscalar(other):
            other = PauliSum.identity(self.n_qubits, other)
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        return self._like(np.concatenate([self.xs, other.xs]),
                          np.concatenate([self.zs, other.zs]),
                          np.concatenate([self.coeffs, other.coeffs]))

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if np.isscalar(other):
            return self._like(self.xs, self.zs, self.coeffs * other)
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        e, x, z = product_phase(self.xs[:, None], self.zs[:, None],
                                other.xs[None, :], other.zs[None, :])
        c = self.coeffs[:, None] * other.coeffs[None, :] * _IPOW[e]
        return self._like(x.ravel(), z.ravel(), c.ravel())

    def __rmul__(self, other):
        if np.isscalar(other):
            return self * other
        return NotImplemented

    def __matmul__(self, other):
        return self * other

    def adjoint(self) -> "PauliSum":
        return self._like(self.xs, self.zs, np.conj(self.coeffs), merged=True)

    def commutator(self, other) -> "PauliSum":
        return self * other - other * self

    def anticommutator(self, other) -> "PauliSum":
        return self * other + other * self

    def is_zero(self, tol=DROP_TOL) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def equals(self, other, tol=DROP_TOL) -> bool:
        return (self - other).is_zero(tol)

    def max_imag(self) -> float:
        return float(np.abs(self.coeffs.imag).max(initial=0.0))

    def is_hermitian(self, tol=HERMITIAN_TOL) -> bool:
        return self.max_imag() < tol

    def constant(self) -> complex:
        hit = (self.xs == 0) & (self.zs == 0)
        return complex(self.coeffs[hit].sum())

    def support_masks(self) -> np.ndarray:
        return self.xs | self.zs

    def support(self) -> list[int]:
        m = int(np.bitwise_or.reduce(self.support_masks())) if len(self) else 0
        return [q for q in range(self.n_qubits) if (m >> q) & 1]

    def restrict(self, qubits) -> "PauliSum":
        """Re-index onto ``qubits`` (local qubit k = global ``qubits[k]``)."""
        qubits = [int(q) for q in qubits]
        outside = np.uint64(((1 << self.n_qubits) - 1) & ~qubit_mask(qubits))
        if np.any(self.support_masks() & outside):
            raise ValueError("operator acts outside the requested qubits")
        return PauliSum(len(qubits), compress_mask(self.xs, qubits),
                        compress_mask(self.zs, qubits), self.coeffs, merged=True)

    def embed(self, qubits, n_qubits) -> "PauliSum":
        """Place this operator on ``qubits`` of an ``n_qubits`` register."""
        if len(qubits) != self.n_qubits:
            raise ValueError("need one target qubit per local qubit")
        return PauliSum(n_qubits, expand_mask(self.xs, qubits), expand_mask(self.zs, qubits),
                        self.coeffs, merged=True)

    # linear algebra
    def _grouped(self):
        if len(self.xs) == 0:
            return
        order = np.argsort(self.xs, kind="stable")
        xs = self.xs[order]
        starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
        ends = np.r_[starts[1:], len(xs)]
        for a, b in zip(starts, ends):
            idx = order[a:b]
            yield self.xs[idx[0]], self.zs[idx], self.coeffs[idx]

    def _diagonals(self, basis):
        """Yield ``(x, d)`` with ``P|b> = d[b] |b ^ x>`` summed over strings sharing x."""
        for x, zs, cs in self._grouped():
            ph = cs * _IPOW[popcount(np.uint64(x) & zs) % 4]
            signs = 1 - 2 * (popcount(basis[:, None] & zs[None, :]) & 1)
            yield x, signs @ ph

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """``H @ psi`` for a dense state (or a stack of states as columns)."""
        psi = np.asarray(psi)
        dim = 1 << self.n_qubits
        if psi.shape[0] != dim:
            raise ValueError(f"state has length {psi.shape[0]}, expected {dim}")
        basis = np.arange(dim, dtype=np.uint64)
        out = np.zeros(psi.shape, dtype=complex)
        for x, d in self._diagonals(basis):
            src = (basis ^ x).astype(np.int64)
            if psi.ndim == 1:
                out += d[src] * psi[src]
            else:
                out += d[src, None] * psi[src]
        return out

    def expectation(self, psi: np.ndarray) -> complex:
        return complex(np.vdot(psi, self.apply(psi)))

    def to_matrix(self, qubits=None, sparse=False):
        """Matrix on ``qubits`` (default: all), local qubit k = ``qubits[k]``."""
        op = self if qubits is None else self.restrict(qubits)
        dim = 1 << op.n_qubits
        basis = np.arange(dim, dtype=np.uint64)
        if sparse:
            rows, cols, vals = [], [], []
            for x, d in op._diagonals(basis):
                nz = np.abs(d) > 0
                rows.append((basis[nz] ^ x).astype(np.int64))
                cols.append(basis[nz].astype(np.int64))
                vals.append(d[nz])
            if not rows:
                return sp.csr_matrix((dim, dim), dtype=complex)
            return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows),
                                  np.concatenate(cols))), shape=(dim, dim))
        mat = np.zeros((dim, dim), dtype=complex)
        cols = basis.astype(np.int64)
        for x, d in op._diagonals(basis):
            mat[(basis ^ x).astype(np.int64), cols] += d
        return mat

    # text format
    def sorted_terms(self) -> list[PauliTerm]:
        def key(t):
            return [(q, t.letter(q)) for q in t.support]
        return sorted(self, key=key)

    def to_text(self) -> str:
        lines = []
        for t in self.sorted_terms():
            c = t.coefficient
            cs = repr(c.real) if abs(c.imag) == 0 else repr(c).replace(" ", "")
            lines.append(f"{cs} {t.word}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, n_qubits: int):
        pairs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            head, _, word = line.partition(" ")
            try:
                c = complex(head)
            except ValueError:
                raise ValueError(f"line {lineno}: bad coefficient {head!r}") from None
            pairs.append((c, word.strip() or "I"))
        if not pairs:
            return cls(n_qubits)
        return cls.from_words(pairs, n_qubits)

    def __repr__(self):
        return f"{type(self).__name__}(n_qubits={self.n_qubits}, terms={len(self)})"


class QubitHamiltonian(PauliSum):
    """Hermitian Pauli sum; coefficients are stored real."""

    def __init__(self, n_qubits, xs=(), zs=(), coeffs=(), tol=DROP_TOL, merged=False):
        super().__init__(n_qubits, xs, zs, coeffs, tol, merged)
        imag = self.max_imag()
        if imag >= HERMITIAN_TOL:
            raise ValueError(f"not Hermitian: imaginary coefficient part {imag:.3e}")
        self.coeffs = self.coeffs.real.astype(complex)

    @classmethod
    def from_pauli_sum(cls, op: PauliSum) -> "QubitHamiltonian":
        return cls(op.n_qubits, op.xs, op.zs, op.coeffs, merged=True)

    @property
    def real_coeffs(self) -> np.ndarray:
        return self.coeffs.real

    def _like(self, xs, zs, cs, **kw):
        return PauliSum(self.n_qubits, xs, zs, cs, **kw)

    def restrict(self, qubits) -> "QubitHamiltonian":
        return QubitHamiltonian.from_pauli_sum(super().restrict(qubits))

    def embed(self, qubits, n_qubits) -> "QubitHamiltonian":
        return QubitHamiltonian.from_pauli_sum(super().embed(qubits, n_qubits))

    def to_text(self) -> str:
        return "\n".join(f"{t.coefficient.real!r} {t.word}" for t in self.sorted_terms()) + "\n"

    @classmethod
    def from_text(cls, text: str, n_qubits: int):
        return cls.from_pauli_sum(PauliSum.from_text(text, n_qubits))


def matrix_representation(h: PauliSum, qubits=None, sparse=False):
    return h.to_matrix(qubits, sparse=sparse)


def single_pauli(letter: str, qubit: int, n_qubits: int, coeff=1.0) -> PauliSum:
    return PauliSum.from_words([(coeff, f"{letter}{qubit}")], n_qubits)
