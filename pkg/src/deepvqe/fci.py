"""Determinant-based full CI used as the exact reference energy.

Works directly on the integrals (alpha/beta occupation strings), so it is
independent of the Jordan-Wigner and Pauli machinery it is used to check.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .integrals import IntegralSet


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=None, energy=None):
        super().__init__(message)
        self.residual = residual
        self.energy = energy


def make_strings(n_orb: int, n_el: int) -> np.ndarray:
    """All occupation bitstrings with ``n_el`` of ``n_orb`` bits set, ascending."""
    strs = [sum(1 << i for i in occ) for occ in combinations(range(n_orb), n_el)]
    return np.array(sorted(strs), dtype=np.int64)


def excitation_operators(n_orb: int, strings: np.ndarray) -> list[sp.csr_matrix]:
    """Sparse matrices of E_pq = a+_p a_q on one spin's string space, index p*n+q."""
    index = {int(s): i for i, s in enumerate(strings)}
    rows = [[] for _ in range(n_orb * n_orb)]
    cols = [[] for _ in range(n_orb * n_orb)]
    vals = [[] for _ in range(n_orb * n_orb)]
    for i, s in enumerate(strings):
        s = int(s)
        occ = [q for q in range(n_orb) if (s >> q) & 1]
        for q in occ:
            t = s ^ (1 << q)
            sign_q = (-1) ** bin(s & ((1 << q) - 1)).count("1")
            for p in range(n_orb):
                if (t >> p) & 1:
                    continue
                sign_p = (-1) ** bin(t & ((1 << p) - 1)).count("1")
                k = p * n_orb + q
                rows[k].append(index[t | (1 << p)])
                cols[k].append(i)
                vals[k].append(sign_p * sign_q)
    n = len(strings)
    return [sp.csr_matrix((vals[k], (rows[k], cols[k])), shape=(n, n), dtype=float)
            for k in range(n_orb * n_orb)]


class FCISolver:
    """Sigma-vector engine for a fixed (n_alpha, n_beta) sector.

    ``chunk_size`` bounds the number of alpha strings processed at once, which
    caps the memory of the intermediate D and T arrays.
    """

    def __init__(self, integrals: IntegralSet, n_alpha: int, n_beta: int,
                 chunk_size: int | None = None):
        n = integrals.n_spatial
        if not (0 <= n_alpha <= n and 0 <= n_beta <= n):
            raise ValueError("electron counts exceed the orbital count")
        self.n = n
        self.n_alpha, self.n_beta = n_alpha, n_beta
        self.e_nuc = integrals.e_nuc
        h = integrals.h1
        g = integrals.eri_chemist
        self.astr = make_strings(n, n_alpha)
        self.bstr = make_strings(n, n_beta)
        self.Ea = excitation_operators(n, self.astr)
        self.Eb = excitation_operators(n, self.bstr)
        self.EbT = [e.T.tocsr() for e in self.Eb]
        self.h_diag = np.diag(h).copy()
        self.k = h - 0.5 * np.einsum("prrq->pq", g)
        self.g = g.reshape(n * n, n * n)
        self.shape = (len(self.astr), len(self.bstr))
        self.chunk = chunk_size or max(1, int(4e6 // (n * n * self.shape[1])) or 1)
        self._diag = None

    @property
    def dim(self) -> int:
        return self.shape[0] * self.shape[1]

    def occupations(self, strings):
        return ((strings[:, None] >> np.arange(self.n)) & 1).astype(float)

    def diagonal(self) -> np.ndarray:
        if self._diag is None:
            oa, ob = self.occupations(self.astr), self.occupations(self.bstr)
            gi = self.g.reshape(self.n, self.n, self.n, self.n)
            J = np.einsum("ppqq->pq", gi)
            K = np.einsum("pqqp->pq", gi)
            hd = self.h_diag
            ea = oa @ hd + 0.5 * np.einsum("ip,pq,iq->i", oa, J - K, oa)
            eb = ob @ hd + 0.5 * np.einsum("ip,pq,iq->i", ob, J - K, ob)
            self._diag = (ea[:, None] + eb[None, :] + oa @ J @ ob.T + self.e_nuc).ravel()
        return self._diag

    def _chunk_operators(self):
        if not hasattr(self, "_chunks"):
            na, _ = self.shape
            ebt_h = sp.hstack(self.EbT).tocsr()
            ebt_v = sp.vstack(self.EbT).tocsr()
            chunks = []
            for start in range(0, na, self.chunk):
                rows = slice(start, min(na, start + self.chunk))
                gather = sp.vstack([e[rows] for e in self.Ea]).tocsr()
                scatter = sp.hstack([e[:, rows] for e in self.Ea]).tocsr()
                chunks.append((rows, gather, scatter))
            self._chunks = (chunks, ebt_h, ebt_v)
        return self._chunks

    def sigma(self, c: np.ndarray) -> np.ndarray:
        na, nb = self.shape
        C = c.reshape(na, nb)
        n2 = self.n * self.n
        chunks, ebt_h, ebt_v = self._chunk_operators()
        out = self.e_nuc * C
        for rows, gather, scatter in chunks:
            r = rows.stop - rows.start
            D = (gather @ C).reshape(n2, r, nb)
            D += (C[rows] @ ebt_h).reshape(r, n2, nb).transpose(1, 0, 2)
            out[rows] += np.tensordot(self.k.ravel(), D, axes=1)
            T = (self.g @ D.reshape(n2, -1)).reshape(n2, r, nb)
            del D
            out += 0.5 * (scatter @ T.reshape(n2 * r, nb))
            out[rows] += 0.5 * (T.transpose(1, 0, 2).reshape(r, n2 * nb) @ ebt_v)
        return out.ravel()

    def hamiltonian_matrix(self) -> np.ndarray:
        """Dense CI matrix; only sensible for small sectors."""
        eye = np.eye(self.dim)
        return np.column_stack([self.sigma(eye[:, i]) for i in range(self.dim)])


def davidson(matvec, diag, v0=None, n_roots=1, tol=1e-9, max_iter=200, max_space=40):
    """Lowest eigenpairs of a Hermitian operator (diagonal preconditioner).

    Converged when every residual norm is below ``tol``.
    """
    dim = len(diag)
    if v0 is None:
        v0 = np.zeros((dim, n_roots))
        for k, i in enumerate(np.argsort(diag)[:n_roots]):
            v0[i, k] = 1.0
    V = np.linalg.qr(np.atleast_2d(v0.T).T.reshape(dim, -1))[0]
    AV = np.column_stack([matvec(V[:, i]) for i in range(V.shape[1])])
    res_norm = np.inf
    for it in range(max_iter):
        Hs = V.conj().T @ AV
        w, s = np.linalg.eigh(0.5 * (Hs + Hs.conj().T))
        w, s = w[:n_roots], s[:, :n_roots]
        X = V @ s
        R = AV @ s - X * w
        res = np.linalg.norm(R, axis=0)
        res_norm = res.max()
        if res_norm < tol:
            return w, X
        if V.shape[1] + n_roots > max_space:
            V, AV = X, AV @ s
        new = []
        for k in range(n_roots):
            if res[k] < tol:
                continue
            denom = w[k] - diag
            denom[np.abs(denom) < 1e-8] = 1e-8
            t = R[:, k] / denom
            for _ in range(2):
                t = t - V @ (V.conj().T @ t)
                for u in new:
                    t = t - u * np.vdot(u, t)
            nt = np.linalg.norm(t)
            if nt > 1e-12:
                new.append(t / nt)
        if not new:
            break
        newv = np.column_stack(new)
        V = np.hstack([V, newv])
        AV = np.hstack([AV, np.column_stack([matvec(v) for v in new])])
    raise ConvergenceError(f"Davidson did not converge, residual {res_norm:.2e}",
                           residual=res_norm, energy=w[0])


def fci_energy(integrals: IntegralSet, n_electrons: int | None = None, ms2: int | None = None,
               n_roots: int = 1, tol: float = 1e-6, return_vector: bool = False):
    """Exact ground energy in the (N, 2*S_z = ms2) sector.

    Sectors up to 2000 determinants are diagonalised densely, larger ones
    with Davidson.
    """
    n_el = integrals.n_electrons if n_electrons is None else n_electrons
    ms2 = (n_el % 2) if ms2 is None else ms2
    if (n_el + ms2) % 2:
        raise ValueError("n_electrons and ms2 must have equal parity")
    na, nb = (n_el + ms2) // 2, (n_el - ms2) // 2
    solver = FCISolver(integrals, na, nb)
    if solver.dim <= 2000:
        w, v = np.linalg.eigh(solver.hamiltonian_matrix())
        w, v = w[:n_roots], v[:, :n_roots]
    else:
        w, v = davidson(solver.sigma, solver.diagonal(), n_roots=n_roots, tol=tol)
    e = w[0] if n_roots == 1 else w
    if return_vector:
        return e, v
    return e
