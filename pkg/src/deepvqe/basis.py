"""Subsystem bases: excitation operators applied to starting vectors, then
Gram-Schmidt.

Every strategy produces an ordered candidate list (starting vectors first)
and keeps the vectors that survive orthogonalisation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .jordan_wigner import annihilation, creation
from .partition import PartitionedHamiltonian, factor_word
from .pauli import PauliSum, single_pauli

GS_TOL = 1e-8


class BasisKind(str, enum.Enum):
    INTERACTIONS = "Interactions"
    INTERACTIONS_EXCITED = "InteractionsExcited"
    INTERACTIONS_FIX_QUBITS = "InteractionsFixQubits"
    SINGLE_PAULI = "SinglePauli"
    SINGLE_PAULI_EXCITED = "SinglePauliExcited"
    SINGLE_PAULI_EDGE = "SinglePauliEdge"
    PARTICLE_CONSERVING = "ParticleConserving"
    PARTICLE_CONSERVING_EDGE = "ParticleConservingEdge"

    @property
    def interaction_based(self) -> bool:
        return self in (BasisKind.INTERACTIONS, BasisKind.INTERACTIONS_EXCITED,
                        BasisKind.INTERACTIONS_FIX_QUBITS)

    @property
    def edge(self) -> bool:
        return self in (BasisKind.SINGLE_PAULI_EDGE, BasisKind.PARTICLE_CONSERVING_EDGE)


@dataclass(frozen=True)
class BasisStrategy:
    """Basis-creation rule.

    ``epsilon`` is required for the fixed-threshold interaction kinds,
    ``qubit_budget`` (qubits per subsystem) for the fix-qubits kind.
    ``start_counts`` gives the number of starting vectors per subsystem.
    """

    kind: BasisKind
    start_counts: tuple[int, ...] = ()
    epsilon: float | None = None
    qubit_budget: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", BasisKind(self.kind))
        fixed = self.kind is BasisKind.INTERACTIONS_FIX_QUBITS
        thresh = self.kind.interaction_based and not fixed
        if thresh and self.epsilon is None:
            raise ValueError(f"{self.kind.value} needs epsilon")
        if not thresh and self.epsilon is not None:
            raise ValueError(f"{self.kind.value} takes no epsilon")
        if fixed and self.qubit_budget is None:
            raise ValueError("InteractionsFixQubits needs a qubit budget")
        if not fixed and self.qubit_budget is not None:
            raise ValueError(f"{self.kind.value} takes no qubit budget")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if any(c < 1 for c in self.start_counts):
            raise ValueError("every subsystem needs at least one starting vector")

    @property
    def label(self) -> str:
        counts = "".join(map(str, self.start_counts)) if all(c < 10 for c in self.start_counts) \
            else ",".join(map(str, self.start_counts))
        extra = ""
        if self.epsilon is not None:
            extra = f"[eps={self.epsilon:g}]"
        if self.qubit_budget is not None:
            extra = f"[qubits={sum(self.qubit_budget)}]"
        return f"{self.kind.value}({counts}){extra}"


@dataclass
class SubsystemBasis:
    index: int
    vectors: np.ndarray  # 2**n_i x K_i, orthonormal columns
    provenance: list[dict] = field(default_factory=list)
    epsilon_adapt: float | None = None
    n_labels: np.ndarray | None = None  # particle number of each vector, if definite

    @property
    def K(self) -> int:
        return self.vectors.shape[1]

    @property
    def m(self) -> int:
        """Qubits needed to host the basis, ceil(log2 K)."""
        return int(math.ceil(math.log2(self.K))) if self.K > 1 else 0

    def gram_error(self) -> float:
        g = self.vectors.conj().T @ self.vectors
        return float(np.abs(g - np.eye(self.K)).max())

    def provenance_text(self) -> str:
        lines = [f"# subsystem {self.index}: K={self.K} m={self.m}",
                 "operator\tstart\tkept\tresidual"]
        for p in self.provenance:
            lines.append(f"{p['operator']}\t{p['start']}\t{int(p['kept'])}\t{p['residual']:.3e}")
        return "\n".join(lines) + "\n"


def gram_schmidt(candidates, tol: float = GS_TOL, basis=None):
    """Orthonormalise candidates in order, dropping near-dependent ones.

    A candidate is discarded when its norm after projecting out the accepted
    span is below ``tol``. Projection is done twice for stability. Each kept
    vector is rotated so its largest entry is real and positive, which keeps
    the basis real whenever the candidates are real up to a phase. Returns
    ``(vectors, kept, residuals)``.
    """
    cand = np.asarray(candidates, dtype=complex)
    if cand.ndim == 1:
        cand = cand[:, None]
    dim = cand.shape[0]
    acc = [] if basis is None else [basis[:, k] for k in range(basis.shape[1])]
    Q = np.zeros((dim, 0), dtype=complex) if not acc else np.column_stack(acc)
    kept, residuals = [], []
    for j in range(cand.shape[1]):
        v = cand[:, j].copy()
        for _ in range(2):
            if Q.shape[1]:
                v -= Q @ (Q.conj().T @ v)
        r = float(np.linalg.norm(v))
        residuals.append(r)
        if r < tol or Q.shape[1] >= dim:
            kept.append(False)
            continue
        piv = v[np.argmax(np.abs(v))]
        Q = np.column_stack([Q, v * (np.conj(piv) / (abs(piv) * r))])
        kept.append(True)
    return Q, np.array(kept, dtype=bool), np.array(residuals)


def _local_ops_single_pauli(qubits, n):
    ops = []
    for s in qubits:
        for letter in "XYZ":
            ops.append((f"{letter}{s}", single_pauli(letter, s, n)))
    return ops


def swap_operator(s: int, t: int, n: int) -> PauliSum:
    """SWAP = (I + XX + YY + ZZ)/2 on qubits s, t."""
    return PauliSum.from_words([(0.5, "I"), (0.5, f"X{s} X{t}"), (0.5, f"Y{s} Y{t}"),
                                (0.5, f"Z{s} Z{t}")], n)


def _local_ops_particle_conserving(qubits, n):
    qubits = sorted(qubits)
    ops = []
    for a in range(len(qubits)):
        for b in range(a + 1, len(qubits)):
            s, t = qubits[a], qubits[b]
            ops.append((f"SWAP{s},{t}", swap_operator(s, t, n)))
    # JW string restricted to the subsystem's own lower qubits
    ops += [(f"a{s}", annihilation(s, n)) for s in qubits]
    ops += [(f"a+{s}", creation(s, n)) for s in qubits]
    return ops


def _interaction_ops(ph: PartitionedHamiltonian, i: int, eps: float | None):
    """Distinct non-identity factors on subsystem i, strongest interaction first."""
    n = ph.partition.sizes[i]
    act = ph.active(i)
    if eps is not None:
        act &= np.abs(ph.lam) > eps
    seen, ops = set(), []
    for k in np.flatnonzero(act):
        key = (int(ph.xm[k, i]), int(ph.zm[k, i]))
        if key in seen:
            continue
        seen.add(key)
        ops.append((factor_word(*key, n), PauliSum(n, [key[0]], [key[1]], [1.0]),
                    float(abs(ph.lam[k]))))
    return ops


def _apply_ops(ops, starts, start_labels):
    cands, prov = [], []
    for j in range(starts.shape[1]):
        for op in ops:
            cands.append(op[1].apply(starts[:, j]))
            prov.append({"operator": op[0], "start": start_labels[j]})
    return cands, prov


def build_basis(strategy: BasisStrategy, starts: np.ndarray, ph: PartitionedHamiltonian, i: int,
                edges=None, start_labels=None, tol: float = GS_TOL) -> SubsystemBasis:
    """Basis for subsystem ``i`` from starting vectors (columns of ``starts``).

    ``edges`` (the edge sets A_i) is required for the edge kinds.
    """
    kind = strategy.kind
    starts = np.atleast_2d(np.asarray(starts, dtype=complex).T).T
    n = ph.partition.sizes[i]
    if starts.shape[0] != 1 << n:
        raise ValueError("starting vectors do not match the subsystem size")
    if start_labels is None:
        start_labels = [f"G{j}" for j in range(starts.shape[1])]
    if kind is BasisKind.INTERACTIONS_FIX_QUBITS:
        return build_basis_fixed_qubits(starts, ph, i, strategy.qubit_budget[i], start_labels,
                                        tol)
    if kind.interaction_based:
        ops = _interaction_ops(ph, i, strategy.epsilon)
    elif kind in (BasisKind.SINGLE_PAULI, BasisKind.SINGLE_PAULI_EXCITED):
        ops = _local_ops_single_pauli(range(n), n)
    elif kind is BasisKind.SINGLE_PAULI_EDGE:
        ops = _local_ops_single_pauli(_edge(edges, i), n)
    elif kind is BasisKind.PARTICLE_CONSERVING:
        ops = _local_ops_particle_conserving(range(n), n)
    else:
        ops = _local_ops_particle_conserving(_edge(edges, i), n)

    cands, prov = _apply_ops(ops, starts, start_labels)
    allc = np.column_stack([starts] + ([np.column_stack(cands)] if cands else []))
    prov = [{"operator": "start", "start": lab} for lab in start_labels] + prov
    Q, kept, res = gram_schmidt(allc, tol)
    if not kept[:starts.shape[1]].all():
        raise ValueError("starting vectors are not linearly independent")
    for p, k, r in zip(prov, kept, res):
        p["kept"], p["residual"] = bool(k), float(r)
    return SubsystemBasis(i, Q, prov)


def _edge(edges, i):
    if edges is None:
        raise ValueError("edge strategies need the edge sets A_i")
    return list(edges[i])


def build_basis_fixed_qubits(starts, ph: PartitionedHamiltonian, i: int, m: int,
                             start_labels=None, tol: float = GS_TOL) -> SubsystemBasis:
    """Greedy interaction admission under a per-subsystem budget of ``m`` qubits.

    Interactions acting on subsystem ``i`` are admitted strongest first; the
    first one whose vectors would push K_i past ``2**m`` stops the admission,
    and its |lambda| is reported as ``epsilon_adapt``.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=complex).T).T
    cap = 1 << m
    if cap < starts.shape[1]:
        raise ValueError(f"budget of {m} qubits cannot hold {starts.shape[1]} starting vectors")
    if start_labels is None:
        start_labels = [f"G{j}" for j in range(starts.shape[1])]
    Q, kept, res = gram_schmidt(starts, tol)
    prov = [{"operator": "start", "start": lab, "kept": True, "residual": float(r)}
            for lab, r in zip(start_labels, res)]
    eps_adapt = 0.0
    for word, op, lam in _interaction_ops(ph, i, None):
        cands = np.column_stack([op.apply(starts[:, j]) for j in range(starts.shape[1])])
        Qn, kept, res = gram_schmidt(cands, tol, basis=Q)
        if Qn.shape[1] > cap:
            eps_adapt = lam
            break
        Q = Qn
        for lab, k, r in zip(start_labels, kept, res):
            prov.append({"operator": word, "start": lab, "kept": bool(k), "residual": float(r)})
    return SubsystemBasis(i, Q, prov, epsilon_adapt=eps_adapt)


def number_adapted(basis: SubsystemBasis, tol: float = 1e-10) -> SubsystemBasis:
    """Same span, rotated onto particle-number eigenvectors when the span allows it.

    The subsystem's qubits are all spin orbitals, so N is the popcount of the
    basis index. Vectors are rebuilt column by column from their N components,
    which keeps an N-definite first vector (the ground state) in place. If the
    span is not N invariant the basis is returned unchanged with no labels.
    """
    Q = basis.vectors
    pop = popcount_table(Q.shape[0])
    NQ = pop[:, None] * Q
    leak = np.abs(NQ - Q @ (Q.conj().T @ NQ)).max() if Q.size else 0.0
    if leak > tol:
        return basis
    cands, labels = [], []
    for k in range(Q.shape[1]):
        for n in np.unique(pop):
            part = np.where(pop == n, Q[:, k], 0)
            if np.linalg.norm(part) > GS_TOL:
                cands.append(part)
                labels.append(int(n))
    R, kept, _ = gram_schmidt(np.column_stack(cands), GS_TOL)
    if R.shape[1] != Q.shape[1]:
        return basis
    labels = np.array(labels)[kept]
    return SubsystemBasis(basis.index, R, basis.provenance, basis.epsilon_adapt, labels)


def popcount_table(dim: int) -> np.ndarray:
    idx = np.arange(dim, dtype=np.uint64)
    return np.bitwise_count(idx).astype(np.int64)


def qubit_report(bases) -> tuple[list[int], list[int], int]:
    K = [b.K for b in bases]
    m = [b.m for b in bases]
    return K, m, sum(m)


def split_qubit_budget(total: int, sizes) -> list[int]:
    """Spread a total qubit budget: subsystems that fit whole get their full
    size, the remainder is divided evenly among the rest (earlier ones first)."""
    sizes = list(sizes)
    budget = [0] * len(sizes)
    rest = list(range(len(sizes)))
    remaining = total
    changed = True
    while changed and rest:
        changed = False
        share = remaining / len(rest)
        for i in list(rest):
            if sizes[i] <= share:
                budget[i] = sizes[i]
                remaining -= sizes[i]
                rest.remove(i)
                changed = True
    if rest:
        base, extra = divmod(remaining, len(rest))
        for k, i in enumerate(rest):
            budget[i] = base + (1 if k < extra else 0)
    if any(b < 0 for b in budget):
        raise ValueError("qubit budget too small")
    return budget
