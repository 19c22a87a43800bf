"""FCIDUMP text files: header ``&FCI NORB=.., NELEC=.., MS2=.. &END`` then
``value i j k l`` records with 1-based chemist-order indices.

Record kinds: ``i j k l`` all nonzero is ``(ij|kl)``; ``i j 0 0`` is
``h1[i, j]``; ``0 0 0 0`` is the core energy. Orbital energies (``i 0 0 0``)
are accepted and ignored.
"""

from __future__ import annotations

import re

import numpy as np

from .integrals import IntegralSet

_PERMS = ((0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
          (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0))


class FCIDumpError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def _header_value(header: str, key: str, line: int, default=None):
    m = re.search(rf"\b{key}\s*=\s*([-+]?\d+)", header, re.IGNORECASE)
    if m is None:
        if default is None:
            raise FCIDumpError(f"header lacks {key}", line)
        return default
    return int(m.group(1))


def read_fcidump(path, label: str = "fcidump") -> IntegralSet:
    with open(path) as f:
        lines = f.read().splitlines()
    header, body_start = [], None
    for k, text in enumerate(lines):
        header.append(text)
        if re.search(r"&END|^\s*/\s*$", text, re.IGNORECASE):
            body_start = k + 1
            break
    if body_start is None or "&FCI" not in header[0].upper():
        raise FCIDumpError("malformed header: expected '&FCI ... &END'", 1)
    head = " ".join(header)
    n = _header_value(head, "NORB", body_start)
    nelec = _header_value(head, "NELEC", body_start)
    ms2 = _header_value(head, "MS2", body_start, default=nelec % 2)
    if n <= 0 or not 0 <= nelec <= 2 * n:
        raise FCIDumpError(f"inconsistent NORB={n}, NELEC={nelec}", body_start)

    h1 = np.zeros((n, n))
    g = np.zeros((n, n, n, n))
    e_core = 0.0
    for lineno, text in enumerate(lines[body_start:], start=body_start + 1):
        parts = text.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FCIDumpError(f"expected 'value i j k l', got {text.strip()!r}", lineno)
        try:
            val = float(parts[0].replace("D", "E").replace("d", "e"))
            idx = [int(p) for p in parts[1:]]
        except ValueError:
            raise FCIDumpError(f"non-numeric field in {text.strip()!r}", lineno) from None
        if any(q < 0 or q > n for q in idx):
            raise FCIDumpError(f"index out of range 0..{n}: {idx}", lineno)
        i, j, k, l = idx
        if i and j and k and l:
            quad = (i - 1, j - 1, k - 1, l - 1)
            for p in _PERMS:
                g[tuple(quad[t] for t in p)] = val
        elif i and j and not k and not l:
            h1[i - 1, j - 1] = h1[j - 1, i - 1] = val
        elif not (i or j or k or l):
            e_core = val
        elif i and not (j or k or l):
            continue
        else:
            raise FCIDumpError(f"unrecognised index pattern {idx}", lineno)
    return IntegralSet(h1, g, e_core, nelec, label, "chemist", ms2)


def write_fcidump(integrals: IntegralSet, path, tol: float = 0.0):
    """Write the unique (8-fold) ERIs, the upper triangle of h1 and the core energy.

    Values are printed with ``repr`` precision so a round trip is exact.
    """
    n = integrals.n_spatial
    g = integrals.eri_chemist
    h1 = integrals.h1
    out = [f"&FCI NORB={n},NELEC={integrals.n_electrons},MS2={integrals.ms2},",
           "ORBSYM=" + "1," * n, "ISYM=1,", "&END"]
    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(n):
                for l in range(k + 1):
                    if k * (k + 1) // 2 + l > ij:
                        continue
                    v = g[i, j, k, l]
                    if abs(v) > tol:
                        out.append(f"{float(v)!r} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(n):
        for j in range(i + 1):
            if abs(h1[i, j]) > tol:
                out.append(f"{float(h1[i, j])!r} {i + 1} {j + 1} 0 0")
    out.append(f"{float(integrals.e_nuc)!r} 0 0 0 0")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")
