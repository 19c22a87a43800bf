"""Split a qubit Hamiltonian into subsystem terms and factorised interactions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pauli import PauliSum, QubitHamiltonian, compress_mask, expand_mask, qubit_mask, _LETTERS


@dataclass(frozen=True)
class SubsystemPartition:
    """Disjoint qubit blocks covering ``0..n_qubits-1``.

    Local qubit ``k`` of block ``i`` is global qubit ``blocks[i][k]``
    (blocks are kept sorted).
    """

    n_qubits: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(tuple(sorted(int(q) for q in b))
                                                 for b in self.blocks))
        flat = [q for b in self.blocks for q in b]
        if sorted(flat) != list(range(self.n_qubits)):
            raise ValueError("blocks must be disjoint and cover every qubit")
        if any(len(b) == 0 for b in self.blocks):
            raise ValueError("empty subsystem")

    @classmethod
    def from_assignment(cls, assignment) -> "SubsystemPartition":
        """``assignment[q]`` = subsystem index (0-based) of qubit q."""
        m = max(assignment) + 1
        blocks = [[q for q, s in enumerate(assignment) if s == i] for i in range(m)]
        return cls(len(assignment), tuple(tuple(b) for b in blocks))

    @classmethod
    def contiguous(cls, sizes) -> "SubsystemPartition":
        blocks, start = [], 0
        for n in sizes:
            blocks.append(tuple(range(start, start + n)))
            start += n
        return cls(start, tuple(blocks))

    @property
    def M(self) -> int:
        return len(self.blocks)

    @property
    def sizes(self) -> list[int]:
        return [len(b) for b in self.blocks]

    @property
    def assignment(self) -> list[int]:
        out = [0] * self.n_qubits
        for i, b in enumerate(self.blocks):
            for q in b:
                out[q] = i
        return out

    def is_contiguous(self) -> bool:
        return all(list(b) == list(range(b[0], b[0] + len(b))) for b in self.blocks)


def factor_word(x: int, z: int, n: int) -> str:
    toks = [f"{_LETTERS[((x >> q) & 1, (z >> q) & 1)]}{q}" for q in range(n)
            if ((x | z) >> q) & 1]
    return " ".join(toks) if toks else "I"


@dataclass
class InteractionTerm:
    """One cross-subsystem Pauli string, ``lam * V_1 (x) ... (x) V_M``.

    Factor ``i`` is the local Pauli string ``(x_masks[i], z_masks[i])`` on
    block ``i``; the full string factorises with no extra phase.
    """

    lam: float
    x_masks: tuple[int, ...]
    z_masks: tuple[int, ...]

    def is_identity_on(self, i: int) -> bool:
        return self.x_masks[i] == 0 and self.z_masks[i] == 0

    def factor(self, i: int, n_local: int) -> PauliSum:
        return PauliSum(n_local, [self.x_masks[i]], [self.z_masks[i]], [1.0])

    def words(self, sizes) -> list[str]:
        return [factor_word(x, z, n) for x, z, n in zip(self.x_masks, self.z_masks, sizes)]


@dataclass
class PartitionedHamiltonian:
    partition: SubsystemPartition
    locals: list[QubitHamiltonian]
    constant: float
    # interaction table: lam[k], xm[k, i], zm[k, i] (local masks)
    lam: np.ndarray = field(default_factory=lambda: np.zeros(0))
    xm: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.uint64))
    zm: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.uint64))

    @property
    def M(self) -> int:
        return self.partition.M

    @property
    def n_interactions(self) -> int:
        return len(self.lam)

    @property
    def interactions(self) -> list[InteractionTerm]:
        return [InteractionTerm(float(l), tuple(int(v) for v in x), tuple(int(v) for v in z))
                for l, x, z in zip(self.lam, self.xm, self.zm)]

    def with_interactions(self, keep) -> "PartitionedHamiltonian":
        keep = np.asarray(keep)
        return PartitionedHamiltonian(self.partition, self.locals, self.constant,
                                      self.lam[keep], self.xm[keep], self.zm[keep])

    def active(self, i: int) -> np.ndarray:
        """Boolean mask of interactions acting non-trivially on subsystem ``i``."""
        return (self.xm[:, i] | self.zm[:, i]) != 0

    def reassemble(self) -> QubitHamiltonian:
        """Re-embed every piece into the full register (inverse of :func:`partition`)."""
        n = self.partition.n_qubits
        xs = [np.array([0], dtype=np.uint64)]
        zs = [np.array([0], dtype=np.uint64)]
        cs = [np.array([self.constant], dtype=complex)]
        for block, h in zip(self.partition.blocks, self.locals):
            xs.append(expand_mask(h.xs, block))
            zs.append(expand_mask(h.zs, block))
            cs.append(h.coeffs)
        if self.n_interactions:
            gx = np.zeros(self.n_interactions, dtype=np.uint64)
            gz = np.zeros(self.n_interactions, dtype=np.uint64)
            for i, block in enumerate(self.partition.blocks):
                gx |= expand_mask(self.xm[:, i], block)
                gz |= expand_mask(self.zm[:, i], block)
            xs.append(gx)
            zs.append(gz)
            cs.append(self.lam.astype(complex))
        return QubitHamiltonian(n, np.concatenate(xs), np.concatenate(zs), np.concatenate(cs))

    def to_text(self) -> str:
        sizes = self.partition.sizes
        out = [f"# partitioned hamiltonian: M={self.M} n_qubits={self.partition.n_qubits}",
               f"constant {self.constant!r}"]
        for i, (block, h) in enumerate(zip(self.partition.blocks, self.locals)):
            out.append(f"[block {i}] qubits " + " ".join(map(str, block)))
            out.append(h.to_text().rstrip("\n") if len(h) else "")
        out.append(f"[interactions] count {self.n_interactions}")
        for term in self.interactions:
            out.append(f"{term.lam!r} | " + " | ".join(term.words(sizes)))
        return "\n".join(line for line in out if line != "") + "\n"


def _interaction_order(lam, xm, zm):
    """Sort by |lambda| descending, then factor masks lexicographically."""
    keys = []
    for i in reversed(range(xm.shape[1])):
        keys += [zm[:, i], xm[:, i]]
    keys.append(-np.abs(lam))
    return np.lexsort(keys)


def partition(h: QubitHamiltonian, p: SubsystemPartition) -> PartitionedHamiltonian:
    if p.n_qubits != h.n_qubits:
        raise ValueError(f"partition has {p.n_qubits} qubits, Hamiltonian {h.n_qubits}")
    supp = h.xs | h.zs
    block_masks = [np.uint64(qubit_mask(b)) for b in p.blocks]
    touches = np.stack([(supp & bm) != 0 for bm in block_masks], axis=1)
    n_touch = touches.sum(axis=1)

    constant = float(h.coeffs[n_touch == 0].real.sum())
    locals_ = []
    for i, block in enumerate(p.blocks):
        sel = (n_touch == 1) & touches[:, i]
        locals_.append(QubitHamiltonian(len(block), compress_mask(h.xs[sel], block),
                                        compress_mask(h.zs[sel], block), h.coeffs[sel],
                                        merged=True))
    sel = n_touch >= 2
    lam = h.coeffs[sel].real.copy()
    xm = np.stack([compress_mask(h.xs[sel], b) for b in p.blocks], axis=1)
    zm = np.stack([compress_mask(h.zs[sel], b) for b in p.blocks], axis=1)
    order = _interaction_order(lam, xm, zm)
    return PartitionedHamiltonian(p, locals_, constant, lam[order], xm[order], zm[order])


def filter_interactions(ph: PartitionedHamiltonian, eps: float) -> PartitionedHamiltonian:
    """Keep interactions with ``|lambda| > eps`` (order preserved)."""
    if eps < 0:
        raise ValueError("threshold must be non-negative")
    return ph.with_interactions(np.abs(ph.lam) > eps)


class DecoupledSubsystemsError(ValueError):
    pass


def strongest_interaction_qubits(ph: PartitionedHamiltonian, per_subsystem: bool = True,
                                 partner_of=None):
    """Edge sets ``A_i``: local qubits touched by the strongest interaction.

    With ``per_subsystem`` (the default) the strongest interaction is chosen
    separately for every subsystem among the interactions acting on it; with
    ``per_subsystem=False`` one global argmax is used for all subsystems.
    Ties go to the earlier interaction in the sorted table.

    ``partner_of[q]`` (global qubit -> global qubit of the other spin of the
    same spatial orbital) closes each set over spin partners, so the set
    holds whole bordering spatial orbitals.
    """
    if ph.n_interactions == 0:
        raise DecoupledSubsystemsError("no interactions: the subsystems are decoupled")
    sizes = ph.partition.sizes
    edges = []
    for i in range(ph.M):
        if per_subsystem:
            act = np.flatnonzero(ph.active(i))
            if len(act) == 0:
                edges.append([])
                continue
            k = act[np.argmax(np.abs(ph.lam[act]))]
        else:
            k = int(np.argmax(np.abs(ph.lam)))
        m = int(ph.xm[k, i] | ph.zm[k, i])
        local = {q for q in range(sizes[i]) if (m >> q) & 1}
        if partner_of is not None:
            block = ph.partition.blocks[i]
            where = {g: j for j, g in enumerate(block)}
            for q in list(local):
                partner = int(partner_of[block[q]])
                if partner in where:
                    local.add(where[partner])
        edges.append(sorted(local))
    return edges
