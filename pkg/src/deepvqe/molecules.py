"""Reference geometries (angstrom) and their subsystem layouts.

Both hydrogen trees have a central atom with three identical branches; the
atom order below keeps every branch contiguous, so the default spin-orbital
ordering maps each subsystem onto a contiguous block of qubits.
"""

from __future__ import annotations

import numpy as np

from .integrals import MoleculeGeometry

TREE10_XYZ = np.array([
    [0.000000, 0.000000, 0.000000],
    [-1.732051, -0.000000, -1.000000],
    [-1.848076, -0.866025, -2.799038],
    [-3.348076, 0.866025, -0.200962],
    [0.000000, 0.000000, 2.000000],
    [-1.500000, -0.866025, 3.000000],
    [1.500000, 0.866025, 3.000000],
    [1.732051, 0.000000, -1.000000],
    [3.348076, -0.866025, -0.200962],
    [1.848076, 0.866025, -2.799038],
])

TREE13_XYZ = np.array([
    [0.000000, 0.000000, 0.000000],
    [-1.732050, -0.000000, -1.000000],
    [-1.848080, -0.866030, -2.799040],
    [-3.348080, 0.866030, -0.200960],
    [-3.464100, -0.000000, -2.000000],
    [0.000000, 0.000000, 2.000000],
    [-1.500000, -0.866030, 3.000000],
    [1.500000, 0.866030, 3.000000],
    [0.000000, 0.000000, 4.000000],
    [1.732050, 0.000000, -1.000000],
    [3.348080, -0.866030, -0.200960],
    [1.848080, 0.866030, -2.799040],
    [3.464100, 0.000000, -2.000000],
])

# atom indices per subsystem: central atom first, then the branches
TREE10_FRAGMENTS = [[0], [1, 2, 3], [4, 5, 6], [7, 8, 9]]
TREE13_FRAGMENTS = [[0], [1, 2, 3, 4], [5, 6, 7, 8], [9, 10, 11, 12]]

STRETCH_FACTORS = (0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 2.0)


def tree10() -> MoleculeGeometry:
    return MoleculeGeometry.from_arrays(["H"] * 10, TREE10_XYZ)


def tree13() -> MoleculeGeometry:
    return MoleculeGeometry.from_arrays(["H"] * 13, TREE13_XYZ)


def hydrogen_chain(n: int, spacing: float = 0.74) -> MoleculeGeometry:
    return MoleculeGeometry.from_arrays(["H"] * n, [[0.0, 0.0, i * spacing] for i in range(n)])


def h2(bond_length: float = 0.7414) -> MoleculeGeometry:
    return hydrogen_chain(2, bond_length)


def fragment_qubit_blocks(fragments) -> list[list[int]]:
    """Qubit blocks for orbital fragments under the interleaved alpha/beta ordering.

    Assumes the fragments list spatial orbitals in ascending contiguous order.
    """
    return [[2 * p + s for p in frag for s in (0, 1)] for frag in fragments]
