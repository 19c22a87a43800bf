"""Exact low-lying eigenstates of subsystem Hamiltonians.

This is the stand-in for the first-level VQE: direct diagonalisation, with
degenerate levels grouped and resolved into S_z eigenstates so the starting
vectors are reproducible.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as sla

from .fci import ConvergenceError
from .pauli import PauliSum

DENSE_MAX_QUBITS = 14
SZ_TOL = 1e-8


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError("amplitude vector length must be 2**n_qubits")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def to_bytes(self) -> bytes:
        """Little-endian: uint32 n_qubits, then interleaved float64 (re, im)."""
        data = np.empty(2 * len(self.amplitudes), dtype="<f8")
        data[0::2] = self.amplitudes.real
        data[1::2] = self.amplitudes.imag
        return struct.pack("<I", self.n_qubits) + data.tobytes()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "StateVector":
        (n,) = struct.unpack_from("<I", raw)
        data = np.frombuffer(raw, dtype="<f8", offset=4)
        if len(data) != 2 << n:
            raise ValueError(f"expected {2 << n} floats for {n} qubits, got {len(data)}")
        return cls(n, data[0::2] + 1j * data[1::2])

    def save(self, path):
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "StateVector":
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())


@dataclass
class Level:
    energy: float
    states: np.ndarray  # columns span the eigenspace
    sz: np.ndarray = field(default=None)
    tags: list = field(default=None)

    @property
    def degeneracy(self) -> int:
        return self.states.shape[1]


@dataclass
class EigenSolution:
    n_qubits: int
    levels: list[Level]

    @property
    def energies(self) -> np.ndarray:
        return np.concatenate([[lv.energy] * lv.degeneracy for lv in self.levels])

    @property
    def ground(self) -> Level:
        return self.levels[0]

    def states(self, count=None) -> np.ndarray:
        cols = np.hstack([lv.states for lv in self.levels])
        return cols if count is None else cols[:, :count]


def degeneracy_tol(e: float) -> float:
    return 1e-9 * max(1.0, abs(e))


def _group_levels(w, v):
    levels, start = [], 0
    for k in range(1, len(w) + 1):
        if k == len(w) or abs(w[k] - w[start]) >= degeneracy_tol(w[start]):
            levels.append(Level(float(np.mean(w[start:k])), v[:, start:k]))
            start = k
    return levels


def solve_lowest(h: PauliSum, k: int = 1, sz: PauliSum | None = None, seed: int = 7,
                 dense_max_qubits: int = DENSE_MAX_QUBITS) -> EigenSolution:
    """The ``k`` lowest eigenpairs, plus the rest of any level cut by ``k``.

    Levels whose energies differ by less than ``1e-9 max(1, |E|)`` are grouped.
    If ``sz`` is given each level is rotated onto S_z eigenstates (see
    :func:`label_by_sz`).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n = h.n_qubits
    dim = 1 << n
    if n <= dense_max_qubits:
        w, v = np.linalg.eigh(h.to_matrix())
    else:
        mat = h.to_matrix(sparse=True)
        extra = min(dim - 2, k + 8)
        rng = np.random.default_rng(seed)
        v0 = rng.normal(size=dim) + 0j
        try:
            w, v = sla.eigsh(mat, k=extra, which="SA", v0=v0, tol=1e-12)
        except sla.ArpackNoConvergence as exc:
            res = np.inf
            if len(exc.eigenvalues):
                r = mat @ exc.eigenvectors - exc.eigenvectors * exc.eigenvalues
                res = float(np.linalg.norm(r, axis=0).max())
            raise ConvergenceError(f"iterative eigensolver failed, residual {res:.2e}",
                                   residual=res) from None
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    levels = _group_levels(w, v)
    # keep whole levels until k states are covered
    out, count = [], 0
    for lv in levels:
        if count >= k:
            break
        out.append(lv)
        count += lv.degeneracy
    if n > dense_max_qubits and len(out) == len(levels):
        raise ConvergenceError("iterative solve did not reach past the requested levels")
    if sz is not None:
        sz_mat = sz.to_matrix(sparse=n > dense_max_qubits)
        for lv in out:
            label_level(lv, sz_mat)
    return EigenSolution(n, out)


def label_by_sz(states: np.ndarray, sz_matrix) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Rotate an orthonormal set of states onto S_z eigenstates within their span.

    Returns ``(states, sz_values, tags)`` sorted by S_z descending. Tags are
    ``"up"``/``"down"``/``"zero"`` for S_z eigenstates and ``"mixed"`` when
    the span is not S_z invariant.
    """
    states = np.asarray(states, dtype=complex)
    szv = sz_matrix @ states
    proj = states.conj().T @ szv
    w, u = np.linalg.eigh(0.5 * (proj + proj.conj().T))
    order = np.argsort(-w, kind="stable")
    w, u = w[order], u[:, order]
    new = states @ u
    new = new * _phase_fix(new)
    leak = np.linalg.norm(sz_matrix @ new - new * w, axis=0)
    tags = []
    for val, lk in zip(w, leak):
        if lk > 1e-6:
            tags.append("mixed")
        elif val > SZ_TOL:
            tags.append("up")
        elif val < -SZ_TOL:
            tags.append("down")
        else:
            tags.append("zero")
    return new, w, tags


def _phase_fix(vecs):
    """Phases making the largest-modulus entry of each column real positive."""
    idx = np.argmax(np.abs(vecs), axis=0)
    piv = vecs[idx, np.arange(vecs.shape[1])]
    return np.conj(piv) / np.abs(piv)


def label_level(level: Level, sz_matrix) -> Level:
    level.states, level.sz, level.tags = label_by_sz(level.states, sz_matrix)
    return level


def solve_excited(h: PauliSum, l: int, sz: PauliSum, spin_preference: str = "down"):
    """The ``l`` lowest states, counting degenerate states separately.

    Returns ``(states, labels, solution)`` with states as columns and labels
    ``(level index, S_z, tag)``. When ``l`` cuts a degenerate level, states
    are taken from that level in order of ``spin_preference`` ("down":
    lowest S_z first, "up": highest first).
    """
    if l < 1:
        raise ValueError("l must be at least 1")
    sol = solve_lowest(h, l, sz=sz)
    cols, labels = [], []
    for e_idx, lv in enumerate(sol.levels):
        take = min(lv.degeneracy, l - len(cols))
        order = list(range(lv.degeneracy))
        if take < lv.degeneracy and spin_preference == "down":
            order = order[::-1]
        chosen = sorted(order[:take], key=lambda j: -lv.sz[j])
        for j in chosen:
            cols.append(lv.states[:, j])
            labels.append((e_idx, float(lv.sz[j]), lv.tags[j]))
    return np.column_stack(cols), labels, sol
