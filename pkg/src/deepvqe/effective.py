"""Effective Hamiltonian in the product of subsystem bases.

H_eff = sum_i H_i^eff + sum_mu lam_mu V_mu,1^eff (x) ... (x) V_mu,M^eff + c

Projected matrices come from applying Pauli strings to basis vectors. The
ground state is found in the exact prod_i K_i space; the matrix-vector
product walks a prefix tree of interaction factors so that a mode product
shared by many interactions is done once.
"""

from __future__ import annotations

import io
import itertools
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .basis import SubsystemBasis
from .fci import davidson
from .partition import PartitionedHamiltonian, factor_word
from .pauli import PauliSum, _IPOW, popcount

REAL_TOL = 1e-13
# dense only below this: building H_eff costs one matvec per column
DENSE_MAX_DIM = 64
DEFAULT_MAX_DIM = 5_000_000
PAD_PENALTY = 1e3


class BudgetExceededError(RuntimeError):
    pass


def _pauli_images(vectors: np.ndarray, xs, zs) -> np.ndarray:
    """P_f |b_k> for every factor f and column k: shape (F, 2**n, K)."""
    dim = vectors.shape[0]
    idx = np.arange(dim, dtype=np.uint64)
    xs = np.asarray(xs, dtype=np.uint64)[:, None]
    zs = np.asarray(zs, dtype=np.uint64)[:, None]
    # (P b)[c] = phase(c ^ x) b[c ^ x] with phase(b) = i^|x&z| (-1)^popcount(b & z)
    src = idx[None, :] ^ xs
    sign = 1 - 2 * (popcount(src & zs) & 1).astype(np.int64)
    ph = _IPOW[popcount(xs & zs) % 4]
    return (ph * sign)[:, :, None] * vectors[src.astype(np.int64)]


def project_paulis(vectors: np.ndarray, xs, zs, chunk: int = 256) -> np.ndarray:
    """<b_k| P_f |b_l> for a stack of Pauli strings: shape (F, K, K)."""
    out = np.empty((len(xs), vectors.shape[1], vectors.shape[1]), dtype=complex)
    bc = vectors.conj()
    for s in range(0, len(xs), chunk):
        imgs = _pauli_images(vectors, xs[s:s + chunk], zs[s:s + chunk])
        out[s:s + chunk] = np.einsum("bk,fbl->fkl", bc, imgs, optimize=True)
    return out


def project_operator(op: PauliSum, basis) -> np.ndarray:
    """Matrix of ``op`` in the basis (columns of ``basis`` or a SubsystemBasis)."""
    vectors = basis.vectors if isinstance(basis, SubsystemBasis) else np.asarray(basis)
    if op.n_qubits != int(np.log2(vectors.shape[0])) or vectors.shape[0] != 1 << op.n_qubits:
        raise ValueError("operator support does not match the basis vectors")
    image = np.column_stack([op.apply(vectors[:, k]) for k in range(vectors.shape[1])])
    return vectors.conj().T @ image


@dataclass
class DiagonalizedFactor:
    """``V = U^dagger diag(eigenvalues) U`` with eigenvalues descending."""

    eigenvalues: np.ndarray
    unitary: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.unitary.conj().T @ np.diag(self.eigenvalues) @ self.unitary


def diagonalize_factor(v: np.ndarray, tol: float = 1e-10) -> DiagonalizedFactor:
    """Eigendecomposition of a Hermitian projected factor.

    Eigenvalues are sorted descending; each eigenvector (row of U^dagger's
    adjoint, i.e. column of U^dagger) has its largest entry real positive.
    """
    v = np.asarray(v)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ValueError("factor must be a square matrix")
    herm = np.abs(v - v.conj().T).max() if v.size else 0.0
    if herm > tol * max(1.0, np.abs(v).max()):
        raise ValueError(f"factor is not Hermitian (deviation {herm:.2e})")
    w, vecs = np.linalg.eigh(0.5 * (v + v.conj().T))
    order = np.argsort(-w, kind="stable")
    w, vecs = w[order], vecs[:, order]
    piv = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])]
    vecs = vecs * (np.conj(piv) / np.abs(piv))
    return DiagonalizedFactor(w, vecs.conj().T)


@dataclass
class EffectiveHamiltonian:
    """Projected operators for every subsystem.

    ``factors[i][f]`` is the projected local Pauli string ``factor_keys[i][f]``
    (entry 0 is always the identity) and interaction ``mu`` uses factor
    ``index[mu, i]`` on subsystem ``i``.
    """

    dims: tuple[int, ...]
    constant: float
    local: list[np.ndarray]
    factors: list[np.ndarray]
    factor_keys: list[np.ndarray]
    lam: np.ndarray
    index: np.ndarray
    sizes: tuple[int, ...] = ()
    n_labels: list | None = None  # per-subsystem particle numbers of the basis vectors
    _plan: object = field(default=None, repr=False)

    @property
    def M(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def qubits(self) -> list[int]:
        return [int(math.ceil(math.log2(k))) if k > 1 else 0 for k in self.dims]

    @property
    def n_qubits(self) -> int:
        return sum(self.qubits)

    @property
    def n_interactions(self) -> int:
        return len(self.lam)

    def interaction_factors(self, mu: int) -> list[np.ndarray]:
        return [self.factors[i][self.index[mu, i]] for i in range(self.M)]

    def hermiticity_error(self) -> float:
        return max(float(np.abs(h - h.conj().T).max()) for h in self.local)

    # -- products ---------------------------------------------------------

    def matvec(self, c: np.ndarray) -> np.ndarray:
        """H_eff applied to one vector or to the columns of a (dim, nb) array."""
        plan = self._compiled()
        c = np.asarray(c)
        single = c.ndim == 1
        dtype = float if plan.real and not np.iscomplexobj(c) else complex
        T = c.reshape(self.dims + (-1,)).astype(dtype, copy=False)
        out = self.constant * T
        for i, h in enumerate(plan.local):
            out = out + _mode(h, T, i)
        if len(self.lam):
            out = out + plan.apply(T)
        return out.reshape(-1) if single else out.reshape(self.dim, -1)

    def diagonal(self) -> np.ndarray:
        plan = self._compiled()
        d = np.full(self.dims, self.constant, dtype=float if plan.real else complex)
        for i, h in enumerate(plan.local):
            d = d + _outer_axis(np.diag(h), i, self.dims)
        if len(self.lam):
            d = d + plan.apply(np.ones(self.dims + (1,)), diagonal=True)[..., 0]
        return np.real(d).ravel()

    def to_dense(self) -> np.ndarray:
        return self.matvec(np.eye(self.dim))

    def _compiled(self):
        if self._plan is None:
            self._plan = _ProductPlan(self)
        return self._plan

    # -- output -----------------------------------------------------------

    def qubit_report(self) -> dict:
        return {"K": list(self.dims), "m": self.qubits, "N_tot": self.n_qubits}

    def to_bytes(self) -> bytes:
        """Header line, then every matrix as (rows, cols) plus complex float64."""
        buf = io.BytesIO()
        head = (f"M {self.M}\nK {' '.join(map(str, self.dims))}\n"
                f"m {' '.join(map(str, self.qubits))}\nN_tot {self.n_qubits}\n"
                f"constant {self.constant!r}\nn_interactions {self.n_interactions}\n"
                f"factors {' '.join(str(len(f)) for f in self.factors)}\n")
        buf.write(struct.pack("<I", len(head)) + head.encode())
        for mat in list(self.local) + [f for stack in self.factors for f in stack]:
            buf.write(_matrix_bytes(mat))
        buf.write(np.asarray(self.lam, dtype="<f8").tobytes())
        buf.write(np.asarray(self.index, dtype="<i4").tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "EffectiveHamiltonian":
        (n,) = struct.unpack_from("<I", raw)
        head = dict(line.split(" ", 1) for line in raw[4:4 + n].decode().splitlines())
        pos = 4 + n
        M = int(head["M"])
        dims = tuple(int(k) for k in head["K"].split())
        nf = [int(k) for k in head["factors"].split()]
        n_int = int(head["n_interactions"])
        mats = []
        for _ in range(M + sum(nf)):
            mat, pos = _matrix_from(raw, pos)
            mats.append(mat)
        local, rest = mats[:M], mats[M:]
        factors = []
        for count in nf:
            factors.append(np.array(rest[:count]))
            rest = rest[count:]
        lam = np.frombuffer(raw, dtype="<f8", count=n_int, offset=pos).copy()
        pos += 8 * n_int
        index = np.frombuffer(raw, dtype="<i4", count=n_int * M, offset=pos).reshape(n_int, M)
        keys = [np.zeros((len(f), 2), dtype=np.uint64) for f in factors]
        return cls(dims, float(head["constant"]), local, factors, keys, lam,
                   index.astype(np.int64))


def _matrix_bytes(mat) -> bytes:
    mat = np.asarray(mat, dtype=complex)
    data = np.empty(2 * mat.size, dtype="<f8")
    data[0::2] = mat.real.ravel()
    data[1::2] = mat.imag.ravel()
    return struct.pack("<II", *mat.shape) + data.tobytes()


def _matrix_from(raw, pos):
    r, c = struct.unpack_from("<II", raw, pos)
    data = np.frombuffer(raw, dtype="<f8", count=2 * r * c, offset=pos + 8)
    return (data[0::2] + 1j * data[1::2]).reshape(r, c), pos + 8 + 16 * r * c


def _mode(a: np.ndarray, T: np.ndarray, axis: int) -> np.ndarray:
    """Apply matrix ``a`` along ``axis`` of tensor ``T``."""
    shape = T.shape
    pre = int(np.prod(shape[:axis]))
    res = np.matmul(a, T.reshape(pre, shape[axis], -1))
    return res.reshape(shape)


def _outer_axis(v, axis, dims):
    shape = [1] * len(dims)
    shape[axis] = len(v)
    return np.asarray(v).reshape(shape)


class _ProductPlan:
    """Interaction prefix tree for the matrix-vector product.

    Interactions are sorted by their factor indices in a chosen mode order;
    tree level ``j`` applies the factor of mode ``order[j]`` once per distinct
    prefix and the last level sums the remaining factors into one matrix.
    """

    def __init__(self, eff: EffectiveHamiltonian):
        M = eff.M
        self.real = all(np.abs(h.imag).max(initial=0) < REAL_TOL for h in eff.local)
        phases = np.ones(len(eff.lam), dtype=complex)
        factors = []
        for i, stack in enumerate(eff.factors):
            # on real bases a string with an odd number of Y projects to an
            # imaginary matrix; the key decides, so all-zero factors agree too
            keys = np.asarray(eff.factor_keys[i], dtype=np.uint64).reshape(-1, 2)
            if len(keys) == len(stack):
                odd_y = (popcount(keys[:, 0] & keys[:, 1]) & 1).astype(bool)
            else:
                odd_y = np.abs(stack.imag).max(axis=(1, 2), initial=0) > REAL_TOL
            unit = np.where(odd_y, 1j, 1.0)
            scaled = stack / unit[:, None, None]
            if np.abs(scaled.imag).max(initial=0) >= REAL_TOL:
                self.real = False
            factors.append(scaled)
            phases = phases * unit[eff.index[:, i]]
        lam = eff.lam * phases
        if self.real and np.abs(lam.imag).max(initial=0) < REAL_TOL:
            self.factors = [f.real.copy() for f in factors]
            self.lam = lam.real.copy()
            self.local = [h.real.copy() for h in eff.local]
        else:
            self.real = False
            self.factors = [np.asarray(f, dtype=complex) for f in eff.factors]
            self.lam = np.asarray(eff.lam, dtype=complex)
            self.local = [np.asarray(h, dtype=complex) for h in eff.local]
        self.order = _best_order(eff.index, eff.dims)
        keys = [eff.index[:, m] for m in reversed(self.order)]
        srt = np.lexsort(keys) if len(eff.lam) else np.zeros(0, dtype=int)
        self.idx = eff.index[srt]
        self.coef = self.lam[srt]
        self.M = M

        self.diags = [np.einsum("fkk->fk", f) for f in self.factors]

    def apply(self, T, diagonal=False):
        return self._walk(T, 0, 0, len(self.coef), diagonal)

    def _walk(self, T, level, lo, hi, diagonal):
        mode = self.order[level]
        col = self.idx[lo:hi, mode]
        if diagonal:
            def act(mat_or_diag, X):
                return X * _outer_axis(mat_or_diag, mode, X.shape[:-1])[..., None]
            stack = self.diags[mode]
        else:
            def act(mat, X):
                return _mode(mat, X, mode)
            stack = self.factors[mode]
        if level == self.M - 1:
            w = np.zeros(len(stack), dtype=self.coef.dtype)
            np.add.at(w, col, self.coef[lo:hi])
            nz = np.flatnonzero(w)
            return act(np.tensordot(w[nz], stack[nz], axes=1), T)
        cuts = np.flatnonzero(np.diff(col)) + 1
        starts = np.concatenate([[0], cuts]) + lo
        ends = np.concatenate([cuts, [hi - lo]]) + lo
        out = None
        for s, e in zip(starts, ends):
            f = self.idx[s, mode]
            Tf = T if f == 0 else act(stack[f], T)
            part = self._walk(Tf, level + 1, s, e, diagonal)
            out = part if out is None else out + part
        return out


def _best_order(index: np.ndarray, dims) -> list[int]:
    """Mode order minimising the estimated cost of the prefix-tree walk."""
    M = len(dims)
    if len(index) == 0:
        return list(range(M))
    perms = itertools.permutations(range(M)) if M <= 6 else \
        [sorted(range(M), key=lambda m: len(np.unique(index[:, m])))]
    best, best_cost = None, None
    for perm in perms:
        cost = 0
        for level in range(M):
            prefix = index[:, list(perm[:level + 1])]
            nodes = len(np.unique(prefix, axis=0)) if level < M - 1 else \
                len(np.unique(index[:, list(perm[:level])], axis=0)) if level else 1
            cost += nodes * dims[perm[level]]
        if best_cost is None or cost < best_cost:
            best, best_cost = list(perm), cost
    return best


def assemble(ph: PartitionedHamiltonian, bases) -> EffectiveHamiltonian:
    """Project every local Hamiltonian and interaction factor onto the bases."""
    bases = list(bases)
    if len(bases) != ph.M:
        raise ValueError(f"need {ph.M} bases, got {len(bases)}")
    for i, b in enumerate(bases):
        if b is None:
            raise ValueError(f"missing basis for subsystem {i}")
        if b.vectors.shape[0] != 1 << ph.partition.sizes[i]:
            raise ValueError(f"basis {i} does not match subsystem size")
    local, factors, keys = [], [], []
    index = np.zeros((ph.n_interactions, ph.M), dtype=np.int64)
    for i, b in enumerate(bases):
        V = b.vectors
        h = ph.locals[i]
        hv = np.column_stack([h.apply(V[:, k]) for k in range(V.shape[1])])
        hi = V.conj().T @ hv
        local.append(0.5 * (hi + hi.conj().T))
        pairs = np.stack([ph.xm[:, i], ph.zm[:, i]], axis=1) if ph.n_interactions \
            else np.zeros((0, 2), dtype=np.uint64)
        uniq, inv = np.unique(np.vstack([np.zeros((1, 2), dtype=np.uint64), pairs]), axis=0,
                              return_inverse=True)
        inv = inv.ravel()
        # identity (0, 0) sorts first, so it is factor 0
        index[:, i] = inv[1:]
        keys.append(uniq)
        factors.append(project_paulis(V, uniq[:, 0], uniq[:, 1]))
    labels = [b.n_labels for b in bases]
    labels = None if any(lab is None for lab in labels) else labels
    return EffectiveHamiltonian(tuple(b.K for b in bases), float(ph.constant), local, factors,
                                keys, ph.lam.copy(), index, tuple(ph.partition.sizes), labels)


def product_state(dims, which=None) -> np.ndarray:
    """Tensor product of basis vector ``which[i]`` (default 0) in every subsystem."""
    which = [0] * len(dims) if which is None else which
    v = np.zeros(int(np.prod(dims)))
    v[np.ravel_multi_index(tuple(which), dims)] = 1.0
    return v


def sector_mask(eff: EffectiveHamiltonian, n_electrons: int) -> np.ndarray:
    """Product-basis states whose subsystem particle numbers add up to ``n_electrons``."""
    if eff.n_labels is None:
        raise ValueError("bases are not particle-number adapted")
    total = np.zeros(eff.dims, dtype=np.int64)
    for i, lab in enumerate(eff.n_labels):
        total = total + _outer_axis(np.asarray(lab), i, eff.dims)
    return (total == n_electrons).ravel()


def solve_effective(eff: EffectiveHamiltonian, n_electrons: int | None = None,
                    operator=None, max_dim: int = DEFAULT_MAX_DIM, tol: float = 1e-7,
                    dense_max_dim: int = DENSE_MAX_DIM):
    """Ground energy and coefficient tensor (shape ``dims``) of H_eff.

    With ``n_electrons`` and number-adapted bases, H_eff is block diagonal in
    the total particle number and only the block with that electron count is
    solved. ``operator`` may supply a faster matvec for that block (see
    :class:`FockSpaceProduct`). Small problems are diagonalised densely,
    larger ones by Davidson (``tol`` is the residual norm; the energy error
    is of order tol**2).
    """
    D = eff.dim
    if D > max_dim:
        raise BudgetExceededError(f"product dimension {D} exceeds the budget {max_dim}")
    plan = eff._compiled()
    if n_electrons is not None and eff.n_labels is not None:
        keep = np.flatnonzero(sector_mask(eff, n_electrons))
        if len(keep) == 0:
            raise ValueError(f"no product state carries {n_electrons} electrons")
    else:
        keep = np.arange(D)
    matvec = eff.matvec if operator is None else operator.matvec

    def block_mv(v):
        full = np.zeros(D if v.ndim == 1 else (D, v.shape[1]), dtype=v.dtype)
        full[keep] = v
        return matvec(full)[keep]

    n = len(keep)
    if n <= dense_max_dim and operator is None:
        w, v = np.linalg.eigh(_hermitize(block_mv(np.eye(n))))
        e, vec = float(w[0]), v[:, 0]
    else:
        # H_eff conserves S_z, so Davidson never leaves the symmetry sectors
        # of its start block: a seeded random vector reaches all of them, and
        # the product of local grounds keeps every Ritz value <= E_combined
        start = product_state(eff.dims)[keep]
        guess = np.random.default_rng(0).normal(size=n)
        v0 = np.column_stack([start, guess]) if start.any() else guess[:, None]
        diag = eff.diagonal()[keep]
        w, X = davidson(block_mv, diag, v0, tol=tol, max_iter=400)
        e, vec = float(w[0]), X[:, 0]
    out = np.zeros(D, dtype=vec.dtype)
    out[keep] = vec
    return e, out.reshape(eff.dims)


class FockSpaceProduct:
    """H_eff on a fixed electron number, applied as P^dagger H P.

    P maps product-basis coefficients into the full qubit register and H is
    applied with the determinant sigma routine in every (n_alpha, n_beta)
    sector with ``n_alpha + n_beta = n_electrons``. This uses the two-electron
    integral structure instead of the Pauli interaction list, which is much
    cheaper for large bases. Needs number-adapted bases.
    """

    def __init__(self, integrals, ordering, partition, bases, n_electrons: int,
                 max_qubits: int = 22):
        from .fci import FCISolver
        if partition.n_qubits > max_qubits:
            raise BudgetExceededError(f"{partition.n_qubits} qubits exceed {max_qubits}")
        if any(b.n_labels is None for b in bases):
            raise ValueError("bases are not particle-number adapted")
        self.dims = tuple(b.K for b in bases)
        self.vectors = [b.vectors for b in bases]
        total = np.zeros(self.dims, dtype=np.int64)
        for i, b in enumerate(bases):
            total = total + _outer_axis(b.n_labels, i, self.dims)
        self.mask = (total == n_electrons)
        local_dims = tuple(v.shape[0] for v in self.vectors)
        gidx = np.zeros(local_dims, dtype=np.int64)
        for i, block in enumerate(partition.blocks):
            loc = np.arange(1 << len(block))
            g = np.zeros_like(loc)
            for k, q in enumerate(block):
                g |= ((loc >> k) & 1) << q
            gidx = gidx | _outer_axis(g, i, local_dims)
        self.gidx = gidx.ravel()
        self.full_dim = 1 << partition.n_qubits
        n = integrals.n_spatial
        qa = np.array([ordering.qubit(p, 0) for p in range(n)])
        qb = np.array([ordering.qubit(p, 1) for p in range(n)])
        self.sectors = []
        for na in range(max(0, n_electrons - n), min(n, n_electrons) + 1):
            solver = FCISolver(integrals, na, n_electrons - na)
            oa = solver.occupations(solver.astr).astype(np.int64)
            ob = solver.occupations(solver.bstr).astype(np.int64)
            amask = oa @ (1 << qa)
            bmask = ob @ (1 << qb)
            idx = (amask[:, None] | bmask[None, :]).ravel()
            # determinant order (alpha ascending, then beta) vs qubit order
            inv_a = np.einsum("ap,aq,pq->a", oa, oa, np.triu(qa[:, None] > qa[None, :], 1))
            inv_b = np.einsum("ap,aq,pq->a", ob, ob, np.triu(qb[:, None] > qb[None, :], 1))
            cross = oa @ (qa[:, None] > qb[None, :]).astype(np.int64) @ ob.T
            parity = (inv_a[:, None] + inv_b[None, :] + cross).ravel() & 1
            self.sectors.append((solver, idx, 1.0 - 2.0 * parity))

    def to_register(self, c) -> np.ndarray:
        T = np.asarray(c).reshape(self.dims) * self.mask
        for i, v in enumerate(self.vectors):
            T = _mode_plain(v, T, i)
        psi = np.zeros(self.full_dim, dtype=T.dtype)
        psi[self.gidx] = T.ravel()
        return psi

    def from_register(self, psi) -> np.ndarray:
        T = psi[self.gidx].reshape(tuple(v.shape[0] for v in self.vectors))
        for i, v in enumerate(self.vectors):
            T = _mode_plain(v.conj().T, T, i)
        return (T * self.mask).ravel()

    def apply_hamiltonian(self, psi) -> np.ndarray:
        out = np.zeros_like(psi)
        for solver, idx, sign in self.sectors:
            out[idx] = sign * solver.sigma(sign * psi[idx])
        return out

    def matvec(self, c):
        c = np.asarray(c)
        if c.ndim == 2:
            return np.column_stack([self.matvec(c[:, k]) for k in range(c.shape[1])])
        return self.from_register(self.apply_hamiltonian(self.to_register(c)))


def _mode_plain(a, T, axis):
    """Apply ``a`` (rows x cols) along ``axis``; the axis length may change."""
    shape = T.shape
    pre = int(np.prod(shape[:axis]))
    res = np.matmul(a, T.reshape(pre, shape[axis], -1))
    return res.reshape(shape[:axis] + (a.shape[0],) + shape[axis + 1:])


def _hermitize(m):
    return 0.5 * (m + m.conj().T)


def full_space_energy(ph: PartitionedHamiltonian, bases) -> float:
    """Oracle: ground energy of P^dagger H P with P the embedded product basis.

    Only for small registers; it builds the full Hamiltonian matrix.
    """
    H = ph.reassemble().to_matrix()
    P = embed_product_basis(ph.partition, bases)
    w = np.linalg.eigvalsh(_hermitize(P.conj().T @ H @ P))
    return float(w[0])


def embed_product_basis(partition, bases) -> np.ndarray:
    """Columns: product basis vectors written in the full register ordering."""
    n = partition.n_qubits
    dims = [b.K for b in bases]
    # local index -> global bit pattern for each block
    cols = np.zeros((1 << n, int(np.prod(dims))), dtype=complex)
    maps = []
    for block in partition.blocks:
        loc = np.arange(1 << len(block))
        g = np.zeros_like(loc)
        for k, q in enumerate(block):
            g |= ((loc >> k) & 1) << q
        maps.append(g)
    for col, combo in enumerate(itertools.product(*[range(k) for k in dims])):
        vec = np.ones(1, dtype=complex)
        idx = np.zeros(1, dtype=np.int64)
        for i, k in enumerate(combo):
            v = bases[i].vectors[:, k]
            vec = (vec[:, None] * v[None, :]).ravel()
            idx = (idx[:, None] | maps[i][None, :]).ravel()
        cols[idx, col] = vec
    return cols


def combined_subsystem_energy(ph: PartitionedHamiltonian, states) -> float:
    """<G_1 ... G_M| H |G_1 ... G_M> for normalised local states."""
    states = [np.asarray(s, dtype=complex).ravel() for s in states]
    if len(states) != ph.M:
        raise ValueError(f"need {ph.M} states, got {len(states)}")
    e = ph.constant
    for h, g in zip(ph.locals, states):
        e += float(np.vdot(g, h.apply(g)).real)
    if ph.n_interactions:
        prod = ph.lam.astype(complex)
        for i, g in enumerate(states):
            pairs = np.stack([ph.xm[:, i], ph.zm[:, i]], axis=1)
            uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
            ev = project_paulis(g[:, None], uniq[:, 0], uniq[:, 1])[:, 0, 0]
            prod = prod * ev[inv.ravel()]
        e += float(prod.sum().real)
    return float(e)


@dataclass
class MeasurementEntry:
    mu: int
    lam: float
    words: list[str]
    factors: list[DiagonalizedFactor]


def emit_measurement_plan(eff: EffectiveHamiltonian, ph: PartitionedHamiltonian | None = None):
    """Per interaction: local eigenbases U_mu,i and eigenvalue tables.

    Factors shared between interactions are diagonalised once.
    """
    cache = [dict() for _ in range(eff.M)]
    entries = []
    for mu in range(eff.n_interactions):
        facs = []
        for i in range(eff.M):
            f = int(eff.index[mu, i])
            if f not in cache[i]:
                cache[i][f] = diagonalize_factor(eff.factors[i][f])
            facs.append(cache[i][f])
        words = []
        for i in range(eff.M):
            x, z = eff.factor_keys[i][eff.index[mu, i]]
            n = eff.sizes[i] if eff.sizes else 64
            words.append(factor_word(int(x), int(z), n))
        entries.append(MeasurementEntry(mu, float(eff.lam[mu]), words, facs))
    return entries


def measurement_plan_text(entries) -> str:
    lines = ["# measurement plan: one entry per interaction"]
    for e in entries:
        lines.append(f"interaction {e.mu} lambda {e.lam!r} factors " + " | ".join(e.words))
        for i, f in enumerate(e.factors):
            vals = " ".join(f"{v:.12g}" for v in np.real(f.eigenvalues))
            lines.append(f"  subsystem {i} eigenvalues {vals}")
    return "\n".join(lines) + "\n"


def padded_matrix(eff: EffectiveHamiltonian, penalty: float = PAD_PENALTY) -> np.ndarray:
    """Dense H_eff on sum_i m_i qubits, padding states shifted up by ``penalty``.

    For hardware export only; the physical solve uses the unpadded space.
    """
    full = [1 << m for m in eff.qubits]
    D = int(np.prod(full))
    if D > 1 << 14:
        raise BudgetExceededError("padded export limited to 14 qubits")
    inner = eff.to_dense()
    keep = np.zeros(full, dtype=bool)
    keep[tuple(slice(0, k) for k in eff.dims)] = True
    pos = np.flatnonzero(keep.ravel())
    out = np.zeros((D, D), dtype=inner.dtype)
    out[np.ix_(pos, pos)] = inner
    pad = np.flatnonzero(~keep.ravel())
    out[pad, pad] = penalty
    return out
