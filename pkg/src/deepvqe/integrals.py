"""Molecular integrals for hydrogen clusters in the STO-3G basis.

Only s-type shells are supported natively. Anything heavier has to come in
through an FCIDUMP file (see :mod:`deepvqe.fcidump`).

Units: geometries are in angstrom, everything else in atomic units.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erf

ANGSTROM_TO_BOHR = 1.8897259886

# STO-3G hydrogen (zeta = 1.24), standard basis-set library values
STO3G_H_EXPONENTS = np.array([3.42525091, 0.62391373, 0.16885540])
STO3G_H_COEFFS = np.array([0.15432897, 0.53532814, 0.44463454])

NUCLEAR_CHARGE = {"H": 1, "He": 2, "Li": 3, "Be": 4, "B": 5, "C": 6, "N": 7, "O": 8, "F": 9}


class UnsupportedElementError(ValueError):
    pass


class LinearDependenceError(ValueError):
    pass


class SCFConvergenceError(RuntimeError):
    def __init__(self, message, last_energy):
        super().__init__(message)
        self.last_energy = last_energy


@dataclass(frozen=True)
class Atom:
    symbol: str
    charge: int
    position: tuple[float, float, float]


@dataclass(frozen=True)
class MoleculeGeometry:
    """Atoms with Cartesian positions in angstrom.

    ``stretching_factor`` records the cumulative factor applied by
    :func:`apply_stretching`; positions are always stored already scaled.
    """

    atoms: tuple[Atom, ...]
    stretching_factor: float = 1.0

    def __post_init__(self):
        if self.stretching_factor <= 0:
            raise ValueError("stretching_factor must be positive")
        pos = self.positions
        for a in range(len(pos)):
            for b in range(a):
                if np.linalg.norm(pos[a] - pos[b]) <= 0.0:
                    raise ValueError(f"atoms {b} and {a} coincide")

    @classmethod
    def from_arrays(cls, symbols, positions, stretching_factor=1.0):
        atoms = []
        for sym, pos in zip(symbols, positions):
            if sym not in NUCLEAR_CHARGE:
                raise UnsupportedElementError(f"unknown element {sym!r}")
            atoms.append(Atom(sym, NUCLEAR_CHARGE[sym], tuple(float(v) for v in pos)))
        return cls(tuple(atoms), stretching_factor)

    @property
    def positions(self) -> np.ndarray:
        return np.array([a.position for a in self.atoms], dtype=float).reshape(-1, 3)

    @property
    def symbols(self) -> list[str]:
        return [a.symbol for a in self.atoms]

    @property
    def charges(self) -> np.ndarray:
        return np.array([a.charge for a in self.atoms], dtype=float)

    @property
    def n_electrons(self) -> int:
        return int(sum(a.charge for a in self.atoms))

    def __len__(self):
        return len(self.atoms)


def read_xyz(path) -> MoleculeGeometry:
    """Read a standard ``count / comment / element x y z`` file."""
    with open(path) as f:
        lines = f.read().splitlines()
    try:
        count = int(lines[0].split()[0])
    except (IndexError, ValueError):
        raise ValueError(f"{path}: line 1: expected atom count") from None
    symbols, coords = [], []
    for lineno in range(2, 2 + count):
        try:
            parts = lines[lineno].split()
            symbols.append(parts[0].capitalize())
            coords.append([float(v) for v in parts[1:4]])
        except (IndexError, ValueError):
            raise ValueError(f"{path}: line {lineno + 1}: malformed atom record") from None
    return MoleculeGeometry.from_arrays(symbols, coords)


def write_xyz(geometry: MoleculeGeometry, path, comment=""):
    with open(path, "w") as f:
        f.write(f"{len(geometry)}\n{comment}\n")
        for atom in geometry.atoms:
            x, y, z = atom.position
            f.write(f"{atom.symbol:2s} {x:14.8f} {y:14.8f} {z:14.8f}\n")


def apply_stretching(geometry: MoleculeGeometry, x: float) -> MoleculeGeometry:
    """Scale every Cartesian coordinate by ``x``."""
    if not x > 0:
        raise ValueError(f"stretching factor must be positive, got {x}")
    atoms = tuple(
        replace(a, position=tuple(float(v) * x for v in a.position)) for a in geometry.atoms
    )
    return MoleculeGeometry(atoms, geometry.stretching_factor * x)


@dataclass(frozen=True)
class GaussianShell:
    """Contracted s-type Gaussian. ``center`` is in angstrom."""

    center: tuple[float, float, float]
    exponents: np.ndarray
    coefficients: np.ndarray
    angular_momentum: int = 0

    def __post_init__(self):
        if self.angular_momentum != 0:
            raise UnsupportedElementError("only s shells are supported")
        if np.any(self.exponents <= 0) or len(set(self.exponents)) != len(self.exponents):
            raise ValueError("exponents must be positive and distinct")

    @property
    def center_bohr(self) -> np.ndarray:
        return np.asarray(self.center) * ANGSTROM_TO_BOHR

    def normalized_coefficients(self) -> np.ndarray:
        """Contraction coefficients times primitive normalisation, rescaled so
        the contracted function has unit self-overlap."""
        a = self.exponents
        d = self.coefficients * (2 * a / np.pi) ** 0.75
        s = np.sum(np.outer(d, d) * (np.pi / (a[:, None] + a[None, :])) ** 1.5)
        return d / np.sqrt(s)


def sto3g_shells(geometry: MoleculeGeometry) -> list[GaussianShell]:
    shells = []
    for atom in geometry.atoms:
        if atom.symbol != "H":
            raise UnsupportedElementError(
                f"STO-3G integrals are built natively for hydrogen only, got {atom.symbol!r}; "
                "generate an FCIDUMP with an external package and use read_fcidump"
            )
        shells.append(GaussianShell(atom.position, STO3G_H_EXPONENTS, STO3G_H_COEFFS))
    return shells


@dataclass
class IntegralSet:
    """One- and two-electron integrals over spatial orbitals.

    ``h2`` is stored in physicist order, ``h2[p, q, r, s] = <pq|rs> = (pr|qs)``,
    unless ``h2_convention == "chemist"``. The second-quantised Hamiltonian is

        H = e_nuc + sum_{pq,s} h1[p,q] a+_ps a_qs
            + 1/2 sum_{pqrs,st} <pq|rs> a+_ps a+_qt a_st a_rs
    """

    h1: np.ndarray
    h2: np.ndarray
    e_nuc: float
    n_electrons: int
    orbital_basis_label: str = "ao"
    h2_convention: str = "physicist"
    ms2: int = field(default=None)

    def __post_init__(self):
        self.h1 = np.asarray(self.h1, dtype=float)
        self.h2 = np.asarray(self.h2, dtype=float)
        n = self.h1.shape[0]
        if self.h1.shape != (n, n) or self.h2.shape != (n, n, n, n):
            raise ValueError("inconsistent integral shapes")
        if self.h2_convention not in ("physicist", "chemist"):
            raise ValueError(f"unknown convention {self.h2_convention!r}")
        if self.n_electrons > 2 * n or self.n_electrons < 0:
            raise ValueError("n_electrons must lie in [0, n_spin]")
        if self.ms2 is None:
            self.ms2 = self.n_electrons % 2

    @property
    def n_spatial(self) -> int:
        return self.h1.shape[0]

    @property
    def n_spin(self) -> int:
        return 2 * self.n_spatial

    @property
    def eri_chemist(self) -> np.ndarray:
        if self.h2_convention == "chemist":
            return self.h2
        return self.h2.transpose(0, 2, 1, 3)

    @property
    def eri_physicist(self) -> np.ndarray:
        if self.h2_convention == "physicist":
            return self.h2
        return self.h2.transpose(0, 2, 1, 3)

    def symmetry_error(self) -> float:
        """Largest violation of h1 symmetry and the 8-fold ERI symmetry."""
        g = self.eri_chemist
        errs = [
            np.abs(self.h1 - self.h1.T).max(initial=0.0),
            np.abs(g - g.transpose(1, 0, 2, 3)).max(initial=0.0),
            np.abs(g - g.transpose(0, 1, 3, 2)).max(initial=0.0),
            np.abs(g - g.transpose(2, 3, 0, 1)).max(initial=0.0),
        ]
        return float(max(errs))

    def transform(self, c: np.ndarray, label: str) -> "IntegralSet":
        """Rotate to orbitals given by the columns of ``c``."""
        h1 = c.T @ self.h1 @ c
        g = np.einsum("pqrs,pi,qj,rk,sl->ijkl", self.eri_chemist, c, c, c, c, optimize=True)
        h1 = 0.5 * (h1 + h1.T)
        g = symmetrize_eri(g)
        return IntegralSet(h1, g.transpose(0, 2, 1, 3), self.e_nuc, self.n_electrons, label,
                           "physicist", self.ms2)


def symmetrize_eri(g: np.ndarray) -> np.ndarray:
    """Average a chemist-order ERI tensor over its 8-fold permutation group."""
    g = 0.5 * (g + g.transpose(1, 0, 2, 3))
    g = 0.5 * (g + g.transpose(0, 1, 3, 2))
    return 0.5 * (g + g.transpose(2, 3, 0, 1))


def _boys0(t):
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    small = t < 1e-12
    out[small] = 1.0 - t[small] / 3.0
    ts = t[~small]
    out[~small] = 0.5 * np.sqrt(np.pi / ts) * erf(np.sqrt(ts))
    return out


def nuclear_repulsion(geometry: MoleculeGeometry) -> float:
    r = geometry.positions * ANGSTROM_TO_BOHR
    z = geometry.charges
    e = 0.0
    for a in range(len(z)):
        for b in range(a):
            e += z[a] * z[b] / np.linalg.norm(r[a] - r[b])
    return float(e)


def _primitive_arrays(shells):
    alpha = np.concatenate([s.exponents for s in shells])
    coef = np.concatenate([s.normalized_coefficients() for s in shells])
    centers = np.concatenate([np.tile(s.center_bohr, (len(s.exponents), 1)) for s in shells])
    owner = np.concatenate([[i] * len(s.exponents) for i, s in enumerate(shells)])
    return alpha, coef, centers, owner


def _contract(prim, coef, owner, nbf, ndim):
    """Sum primitive integrals into contracted ones along every axis."""
    out = prim
    for axis in range(ndim):
        out = np.moveaxis(out, axis, -1) * coef
        summed = np.zeros(out.shape[:-1] + (nbf,))
        for i in range(nbf):
            summed[..., i] = out[..., owner == i].sum(axis=-1)
        out = np.moveaxis(summed, -1, axis)
    return out


def compute_sto3g_integrals(geometry: MoleculeGeometry):
    """AO-basis integrals for an all-hydrogen molecule.

    Returns ``(IntegralSet, S)`` where ``S`` is the AO overlap matrix.
    """
    shells = sto3g_shells(geometry)
    nbf = len(shells)
    a, c, R, owner = _primitive_arrays(shells)
    Z = geometry.charges
    Rn = geometry.positions * ANGSTROM_TO_BOHR

    p = a[:, None] + a[None, :]
    mu = a[:, None] * a[None, :] / p
    rab2 = np.sum((R[:, None, :] - R[None, :, :]) ** 2, axis=-1)
    kab = np.exp(-mu * rab2)
    P = (a[:, None, None] * R[:, None, :] + a[None, :, None] * R[None, :, :]) / p[..., None]

    s_prim = (np.pi / p) ** 1.5 * kab
    t_prim = mu * (3.0 - 2.0 * mu * rab2) * s_prim
    v_prim = np.zeros_like(s_prim)
    for zc, rc in zip(Z, Rn):
        pc2 = np.sum((P - rc) ** 2, axis=-1)
        v_prim -= zc * 2.0 * np.pi / p * kab * _boys0(p * pc2)

    # (ab|cd) over primitives
    pp = p[:, :, None, None]
    qq = p[None, None, :, :]
    pq2 = np.sum((P[:, :, None, None, :] - P[None, None, :, :, :]) ** 2, axis=-1)
    eri_prim = (
        2.0 * np.pi ** 2.5 / (pp * qq * np.sqrt(pp + qq))
        * kab[:, :, None, None] * kab[None, None, :, :]
        * _boys0(pp * qq / (pp + qq) * pq2)
    )

    S = _contract(s_prim, c, owner, nbf, 2)
    T = _contract(t_prim, c, owner, nbf, 2)
    V = _contract(v_prim, c, owner, nbf, 2)
    eri = symmetrize_eri(_contract(eri_prim, c, owner, nbf, 4))
    S = 0.5 * (S + S.T)
    h1 = 0.5 * ((T + V) + (T + V).T)

    ints = IntegralSet(h1, eri.transpose(0, 2, 1, 3), nuclear_repulsion(geometry),
                       geometry.n_electrons, "ao", "physicist")
    return ints, S


def lowdin_matrix(S: np.ndarray, floor: float = 1e-10) -> np.ndarray:
    """S^{-1/2} by symmetric eigendecomposition."""
    S = np.asarray(S, dtype=float)
    if np.abs(S - S.T).max(initial=0.0) > 1e-10:
        raise ValueError("overlap matrix is not symmetric")
    w, v = np.linalg.eigh(S)
    if w.min() <= floor:
        raise LinearDependenceError(f"overlap eigenvalue {w.min():.3e} <= {floor:g}")
    return (v / np.sqrt(w)) @ v.T


def lowdin_orthogonalize(integrals: IntegralSet, S: np.ndarray) -> IntegralSet:
    return integrals.transform(lowdin_matrix(S), "lowdin")


def _scf(h, g, S, X, e_nuc, nocc, D, damping, max_iter, tol, diis_size):
    def density(fock):
        _, cp = np.linalg.eigh(X.T @ fock @ X)
        cocc = (X @ cp)[:, :nocc]
        return 2.0 * cocc @ cocc.T

    focks, errors = [], []
    e_old = None
    for it in range(max_iter):
        J = np.einsum("pqrs,rs->pq", g, D)
        K = np.einsum("prqs,rs->pq", g, D)
        F = h + J - 0.5 * K
        e = 0.5 * np.sum(D * (h + F)) + e_nuc
        err = X.T @ (F @ D @ S - S @ D @ F) @ X
        if e_old is not None and abs(e - e_old) < tol and np.abs(err).max() < np.sqrt(tol):
            return e, it, D
        e_old = e
        if it < 1:
            D = (1.0 - damping) * density(F) + damping * D
            continue
        focks.append(F)
        errors.append(err)
        del focks[:-diis_size], errors[:-diis_size]
        m = len(focks)
        B = -np.ones((m + 1, m + 1))
        B[m, m] = 0.0
        for i in range(m):
            for j in range(m):
                B[i, j] = np.sum(errors[i] * errors[j])
        rhs = np.zeros(m + 1)
        rhs[m] = -1.0
        coef = np.linalg.lstsq(B, rhs, rcond=None)[0][:m]
        D = density(sum(ci * fi for ci, fi in zip(coef, focks)))
    raise SCFConvergenceError(f"SCF not converged after {max_iter} iterations", e_old)


def rhf_energy(integrals: IntegralSet, S: np.ndarray, n_electrons: int | None = None,
               damping: float = 0.5, max_iter: int = 500, tol: float = 1e-9,
               diis_size: int = 8, n_random_starts: int = 4, seed: int = 0,
               return_details: bool = False):
    """Closed-shell Hartree-Fock total energy.

    The first iteration mixes densities with ``damping``; after that Pulay
    DIIS extrapolates the Fock matrix. Stretched hydrogen clusters have several
    SCF solutions, so the SCF is started from the atomic-density guess, the
    core guess and ``n_random_starts`` seeded perturbations of the atomic
    guess, and the lowest converged energy is returned.
    """
    n_el = integrals.n_electrons if n_electrons is None else n_electrons
    if n_el % 2:
        raise ValueError("restricted Hartree-Fock needs an even electron count")
    nocc = n_el // 2
    h = integrals.h1
    g = integrals.eri_chemist
    X = lowdin_matrix(S)
    n = h.shape[0]

    _, cp = np.linalg.eigh(X.T @ h @ X)
    cocc = (X @ cp)[:, :nocc]
    guesses = [np.diag(np.full(n, n_el / n)), 2.0 * cocc @ cocc.T]
    rng = np.random.default_rng(seed)
    for _ in range(n_random_starts):
        a = rng.normal(scale=0.3, size=(n, n))
        _, cp = np.linalg.eigh(X.T @ (h + a + a.T) @ X)
        cocc = (X @ cp)[:, :nocc]
        guesses.append(2.0 * cocc @ cocc.T)

    best, last_error = None, None
    for D0 in guesses:
        try:
            e, it, D = _scf(h, g, S, X, integrals.e_nuc, nocc, D0, damping, max_iter, tol,
                            diis_size)
        except SCFConvergenceError as exc:
            last_error = exc
            continue
        if best is None or e < best[0] - 1e-12:
            best = (e, it, D)
    if best is None:
        raise last_error
    if return_details:
        return best[0], {"iterations": best[1], "density": best[2]}
    return best[0]
