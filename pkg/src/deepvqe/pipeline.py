"""End-to-end runs: integrals -> qubits -> subsystems -> bases -> H_eff -> energy.

A run is described by a :class:`RunConfig`; :func:`run_pipeline` returns one
:class:`RunResult` per (stretching factor, strategy) pair.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .basis import BasisKind, BasisStrategy, build_basis, number_adapted, qubit_report, \
    split_qubit_budget
from .effective import FockSpaceProduct, assemble, combined_subsystem_energy, \
    diagonalize_factor, sector_mask, solve_effective
from .fci import fci_energy
from .fcidump import read_fcidump
from .integrals import IntegralSet, apply_stretching, compute_sto3g_integrals, \
    lowdin_orthogonalize, read_xyz, rhf_energy
from .jordan_wigner import SpinOrbitalOrdering, jordan_wigner, sz_operator
from .molecules import STRETCH_FACTORS, TREE10_FRAGMENTS, TREE13_FRAGMENTS, h2, tree10, tree13
from .partition import DecoupledSubsystemsError, SubsystemPartition, partition, \
    strongest_interaction_qubits
from .subsystem import solve_excited

CACHE_ENV = "DEEPVQE_CACHE_DIR"
SANDWICH_TOL = 1e-9
FOCK_MAX_QUBITS = 22
# sector size above which the determinant-space product beats the Pauli tree
FOCK_MIN_SECTOR = 1500

BUILTIN_GEOMETRIES = {
    "tree10": (tree10, TREE10_FRAGMENTS),
    "tree13": (tree13, TREE13_FRAGMENTS),
    "h2": (h2, [[0], [1]]),
}


class PipelineError(RuntimeError):
    """A stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage: str, x: float | None, cause: Exception):
        where = f" at x={x:g}" if x is not None else ""
        super().__init__(f"{stage}{where}: {cause}")
        self.stage = stage
        self.x = x
        self.cause = cause


def parse_start_label(label: str, n_subsystems: int | None = None) -> tuple[int, ...]:
    """``"2444"`` -> (2, 4, 4, 4); ``"(10,10)"`` -> (10, 10)."""
    text = label.strip()
    if text.startswith("("):
        if not text.endswith(")"):
            raise ValueError(f"unbalanced start label {label!r}")
        parts = [p.strip() for p in text[1:-1].split(",")]
        if not all(p.isdigit() for p in parts):
            raise ValueError(f"start label {label!r} must hold positive integers")
        counts = tuple(int(p) for p in parts)
    elif text.isdigit():
        counts = tuple(int(c) for c in text)
    else:
        raise ValueError(f"cannot parse start label {label!r}")
    if any(c < 1 for c in counts):
        raise ValueError(f"start label {label!r} has a zero count")
    if n_subsystems is not None and len(counts) != n_subsystems:
        raise ValueError(f"start label {label!r} has {len(counts)} entries for "
                         f"{n_subsystems} subsystems")
    return counts


_STRATEGY_RE = re.compile(r"^\s*(\w+)\s*(\([^)]*\)|\d+)\s*(?:\[(\w+)\s*=\s*([^\]]+)\])?\s*$")


def parse_strategy(text: str) -> BasisStrategy:
    """Inverse of :attr:`BasisStrategy.label`, e.g. ``Interactions(1111)[eps=0.01]``.

    For the fix-qubits kind ``[qubits=12]`` is a total budget; it is split
    over the subsystems by :func:`split_qubit_budget` once sizes are known,
    so the returned strategy carries it as a one-element tuple.
    """
    m = _STRATEGY_RE.match(text)
    if m is None:
        raise ValueError(f"cannot parse strategy {text!r}")
    kind, counts, key, value = m.groups()
    try:
        kind = BasisKind(kind)
    except ValueError:
        raise ValueError(f"unknown basis kind {kind!r}") from None
    # "(1111)" is a digit string, "(10,10)" a tuple
    if counts.startswith("("):
        counts = counts[1:-1]
        if "," in counts:
            counts = f"({counts})"
    counts = parse_start_label(counts)
    if key is None:
        return BasisStrategy(kind, counts)
    if key == "eps":
        return BasisStrategy(kind, counts, epsilon=float(value))
    if key == "qubits":
        return BasisStrategy(kind, counts, qubit_budget=(int(value),))
    raise ValueError(f"unknown strategy option {key!r}")


@dataclass
class RunConfig:
    """Everything a run needs.

    ``geometry`` is an XYZ path or a built-in name (``tree10``, ``tree13``,
    ``h2``); ``fcidump`` replaces it with ingested integrals (no stretching,
    ``stretch`` must then be ``(1.0,)``). The partition is either
    ``fragments`` (lists of spatial orbitals; both spins of an orbital go to
    its fragment and the qubit order follows the fragment order) or an
    explicit ``assignment`` qubit -> subsystem.
    """

    geometry: str | None = None
    fcidump: str | None = None
    fragments: list[list[int]] | None = None
    assignment: list[int] | None = None
    strategies: list[BasisStrategy] = field(default_factory=list)
    stretch: tuple[float, ...] = STRETCH_FACTORS
    references: tuple[str, ...] = ("fci", "combined")
    solve: bool = True
    davidson_tol: float = 1e-7
    fci_tol: float = 1e-7
    spin_preference: str = "down"
    workers: int = 1
    output_dir: str | None = None

    def validate(self):
        if (self.geometry is None) == (self.fcidump is None):
            raise ValueError("give exactly one of geometry and fcidump")
        if not self.stretch:
            raise ValueError("the stretch set is empty")
        if any(x <= 0 for x in self.stretch):
            raise ValueError("stretching factors must be positive")
        if self.fcidump is not None and tuple(self.stretch) != (1.0,):
            raise ValueError("FCIDUMP input cannot be stretched; use stretch = 1.0")
        if self.fragments is not None and self.assignment is not None:
            raise ValueError("give fragments or assignment, not both")
        if not self.strategies:
            raise ValueError("no basis strategy given")
        bad = set(self.references) - {"fci", "rhf", "combined"}
        if bad:
            raise ValueError(f"unknown references {sorted(bad)}")
        if self.spin_preference not in ("down", "up"):
            raise ValueError("spin_preference must be 'down' or 'up'")
        M = self.n_subsystems()
        if M is not None:
            for s in self.strategies:
                if len(s.start_counts) != M:
                    raise ValueError(f"{s.label} has {len(s.start_counts)} start counts for "
                                     f"{M} subsystems")
        return self

    def n_subsystems(self) -> int | None:
        if self.assignment is not None:
            return max(self.assignment) + 1
        frags = self.fragments
        if frags is None and self.geometry in BUILTIN_GEOMETRIES:
            frags = BUILTIN_GEOMETRIES[self.geometry][1]
        return None if frags is None else len(frags)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        """Read an INI file with sections [input], [basis], [references], [solver], [output]."""
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise ValueError(f"cannot read config {path}")
        return cls.from_mapping({s: dict(cp[s]) for s in cp.sections()})

    @classmethod
    def from_mapping(cls, sections: dict) -> "RunConfig":
        known = {"input", "basis", "references", "solver", "output"}
        unknown = set(sections) - known
        if unknown:
            raise ValueError(f"unknown config sections {sorted(unknown)}")
        inp = sections.get("input", {})
        kw = {}
        if "geometry" in inp:
            kw["geometry"] = inp["geometry"]
        if "fcidump" in inp:
            kw["fcidump"] = inp["fcidump"]
        if "fragments" in inp:
            kw["fragments"] = parse_fragments(inp["fragments"])
        if "assignment" in inp:
            kw["assignment"] = [int(v) for v in inp["assignment"].replace(",", " ").split()]
        if "stretch" in inp:
            kw["stretch"] = parse_floats(inp["stretch"])
        basis = sections.get("basis", {})
        if "strategies" in basis:
            kw["strategies"] = [parse_strategy(s) for s in basis["strategies"].split(";")
                                if s.strip()]
        if "spin_preference" in basis:
            kw["spin_preference"] = basis["spin_preference"]
        refs = sections.get("references", {})
        if refs:
            kw["references"] = tuple(k for k in ("fci", "rhf", "combined")
                                     if _truthy(refs.get(k, "no")))
        solver = sections.get("solver", {})
        for key in ("davidson_tol", "fci_tol"):
            if key in solver:
                kw[key] = float(solver[key])
        if "workers" in solver:
            kw["workers"] = int(solver["workers"])
        if "solve" in solver:
            kw["solve"] = _truthy(solver["solve"])
        out = sections.get("output", {})
        if "dir" in out:
            kw["output_dir"] = out["dir"]
        return cls(**kw).validate()


def _truthy(text) -> bool:
    v = str(text).strip().lower()
    if v in ("1", "yes", "true", "on"):
        return True
    if v in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"expected yes/no, got {text!r}")


def parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def parse_fragments(text: str) -> list[list[int]]:
    """``"0 | 1 2 3 | 4 5 6"`` -> [[0], [1, 2, 3], [4, 5, 6]]."""
    frags = [[int(v) for v in part.replace(",", " ").split()] for part in text.split("|")]
    if any(not f for f in frags):
        raise ValueError(f"empty fragment in {text!r}")
    return frags


@dataclass
class RunResult:
    x: float
    strategy: str
    start_label: str
    energy: float | None
    e_fci: float | None
    e_subsystems: float | None
    e_hf: float | None
    n_tot: int
    K: list[int]
    m: list[int]
    eps_used: list[float] | None
    sector_dim: int | None = None
    wall_time: float = 0.0
    reconstruction_error: float | None = None  # worst factor U^dagger diag(v) U mismatch

    def sandwich_violation(self, tol: float = SANDWICH_TOL) -> str | None:
        if self.energy is None:
            return None
        if self.e_fci is not None and self.energy < self.e_fci - tol:
            return f"E={self.energy!r} below E_FCI={self.e_fci!r}"
        if self.e_subsystems is not None and self.energy > self.e_subsystems + tol:
            return f"E={self.energy!r} above E_subsystems={self.e_subsystems!r}"
        return None


# ---------------------------------------------------------------- stages

@dataclass
class PreparedSystem:
    """Everything up to the partitioned Hamiltonian at one stretching factor."""

    x: float
    integrals: IntegralSet
    overlap: np.ndarray
    ordering: SpinOrbitalOrdering
    ph: object
    edges: list[list[int]] | None
    sz_local: list

    @property
    def n_electrons(self) -> int:
        return self.integrals.n_electrons


def _stage(name, x, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, x, exc) from exc


def load_integrals(config: RunConfig, x: float):
    """(orthonormal-orbital integrals, AO overlap, AO integrals).

    FCIDUMP orbitals are already orthonormal: the overlap is the identity and
    there are no AO integrals.
    """
    if config.fcidump is not None:
        ints = read_fcidump(config.fcidump)
        return ints, np.eye(ints.n_spatial), None
    geom = _geometry(config)
    ints, S = compute_sto3g_integrals(apply_stretching(geom, x))
    return lowdin_orthogonalize(ints, S), S, ints


def _geometry(config):
    if config.geometry in BUILTIN_GEOMETRIES:
        return BUILTIN_GEOMETRIES[config.geometry][0]()
    return read_xyz(config.geometry)


def _layout(config: RunConfig, n_spatial: int):
    frags = config.fragments
    if frags is None and config.assignment is None:
        if config.geometry in BUILTIN_GEOMETRIES:
            frags = BUILTIN_GEOMETRIES[config.geometry][1]
        else:
            frags = [list(range(n_spatial))]
    if frags is not None:
        order = [p for f in frags for p in f]
        if sorted(order) != list(range(n_spatial)):
            raise ValueError("fragments must cover every spatial orbital exactly once")
        ordering = SpinOrbitalOrdering.interleaved(n_spatial, order)
        return ordering, SubsystemPartition.contiguous([2 * len(f) for f in frags])
    if len(config.assignment) != 2 * n_spatial:
        raise ValueError(f"assignment has {len(config.assignment)} entries for "
                         f"{2 * n_spatial} qubits")
    return (SpinOrbitalOrdering.interleaved(n_spatial),
            SubsystemPartition.from_assignment(config.assignment))


def prepare(config: RunConfig, x: float) -> tuple[PreparedSystem, IntegralSet | None]:
    lo, S, ao = _stage("integrals", x, load_integrals, config, x)
    ordering, part = _stage("partition", x, _layout, config, lo.n_spatial)
    H = _stage("jordan-wigner", x, jordan_wigner, lo, ordering)
    ph = _stage("partition", x, partition, H, part)
    try:
        edges = strongest_interaction_qubits(ph, partner_of=ordering.partner_of())
    except DecoupledSubsystemsError:
        # no interactions: only edge strategies need A_i, and they report it
        edges = None
    sz_local = [sz_operator(ordering, b).restrict(b) for b in part.blocks]
    return PreparedSystem(x, lo, S, ordering, ph, edges, sz_local), ao


def _resolve_strategy(strategy: BasisStrategy, sizes) -> BasisStrategy:
    if strategy.kind is BasisKind.INTERACTIONS_FIX_QUBITS and len(strategy.qubit_budget) == 1 \
            and len(sizes) > 1:
        return BasisStrategy(strategy.kind, strategy.start_counts,
                             qubit_budget=tuple(split_qubit_budget(strategy.qubit_budget[0],
                                                                   sizes)))
    return strategy


def build_bases(system: PreparedSystem, strategy: BasisStrategy, spin_preference="down",
                start_cache=None):
    """Number-adapted bases for every subsystem, plus the ground states used."""
    ph = system.ph
    if len(strategy.start_counts) != ph.M:
        raise ValueError(f"{strategy.label} has {len(strategy.start_counts)} start counts for "
                         f"{ph.M} subsystems")
    strategy = _resolve_strategy(strategy, ph.partition.sizes)
    start_cache = {} if start_cache is None else start_cache
    bases, grounds = [], []
    for i, l in enumerate(strategy.start_counts):
        key = (i, l)
        if key not in start_cache:
            start_cache[key] = solve_excited(ph.locals[i], l, system.sz_local[i],
                                             spin_preference)
        states, labels, _ = start_cache[key]
        names = [f"G{e}[{tag}]" for e, _, tag in labels]
        b = build_basis(strategy, states, ph, i, edges=system.edges, start_labels=names)
        bases.append(number_adapted(b))
        grounds.append(states[:, 0])
    return bases, grounds, strategy


def _cache_dir() -> Path | None:
    d = os.environ.get(CACHE_ENV)
    if not d:
        return None
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def integrals_digest(ints: IntegralSet) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(ints.h1).tobytes())
    h.update(np.ascontiguousarray(ints.eri_physicist).tobytes())
    h.update(repr((float(ints.e_nuc), ints.n_electrons, ints.ms2)).encode())
    return h.hexdigest()[:24]


def cached_reference(kind: str, ints: IntegralSet, compute, tag: str = ""):
    """Look up a reference energy in the cache directory, computing it on a miss."""
    d = _cache_dir()
    if d is None:
        return compute()
    path = d / f"{kind}{tag}-{integrals_digest(ints)}.json"
    if path.exists():
        return json.loads(path.read_text())["energy"]
    e = float(compute())
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps({"energy": e}))
    tmp.replace(path)
    return e


def solve_system(system: PreparedSystem, bases, davidson_tol: float = 1e-7):
    """Ground energy of H_eff in the electron-number sector of the molecule."""
    eff = assemble(system.ph, bases)
    n_el = system.n_electrons
    numbered = eff.n_labels is not None
    sector = int(sector_mask(eff, n_el).sum()) if numbered else eff.dim
    op = None
    if numbered and sector > FOCK_MIN_SECTOR and system.ph.partition.n_qubits <= FOCK_MAX_QUBITS:
        op = FockSpaceProduct(system.integrals, system.ordering, system.ph.partition, bases, n_el,
                              max_qubits=FOCK_MAX_QUBITS)
    e, _ = solve_effective(eff, n_electrons=n_el if numbered else None, operator=op,
                           tol=davidson_tol)
    return e, sector, eff


def reconstruction_error(eff) -> float:
    """Worst ``|U^dagger diag(v) U - V|`` over every distinct projected factor."""
    worst = 0.0
    for stack in eff.factors:
        for f in stack:
            worst = max(worst, float(np.abs(diagonalize_factor(f).reconstruct() - f).max()))
    return worst


def _run_point(config: RunConfig, x: float) -> list[RunResult]:
    system, ao = prepare(config, x)
    ints = system.integrals
    e_fci = e_hf = None
    if config.solve and "fci" in config.references:
        e_fci = _stage("fci", x, cached_reference, "fci", ints,
                       lambda: float(fci_energy(ints, tol=config.fci_tol)))
    if "rhf" in config.references:
        src = ao if ao is not None else ints
        e_hf = _stage("rhf", x, cached_reference, "rhf", src,
                      lambda: float(rhf_energy(src, system.overlap)))
    cache = {}
    out = []
    for strategy in config.strategies:
        t0 = time.perf_counter()
        bases, grounds, resolved = _stage("basis", x, build_bases, system, strategy,
                                          config.spin_preference, cache)
        K, m, n_tot = qubit_report(bases)
        if resolved.kind is BasisKind.INTERACTIONS_FIX_QUBITS:
            eps = [float(b.epsilon_adapt) for b in bases]
        elif resolved.epsilon is not None:
            eps = [float(resolved.epsilon)]
        else:
            eps = None
        energy = e_comb = sector = recon = None
        if config.solve:
            energy, sector, eff = _stage("effective", x, solve_system, system, bases,
                                         config.davidson_tol)
            recon = _stage("measurement", x, reconstruction_error, eff)
            if "combined" in config.references:
                e_comb = _stage("combined", x, combined_subsystem_energy, system.ph, grounds)
        label = "".join(map(str, resolved.start_counts)) \
            if all(c < 10 for c in resolved.start_counts) \
            else "(" + ",".join(map(str, resolved.start_counts)) + ")"
        out.append(RunResult(float(x), strategy.label, label, energy, e_fci, e_comb, e_hf,
                             n_tot, K, m, eps, sector, time.perf_counter() - t0, recon))
    return out


def run_pipeline(config: RunConfig) -> list[RunResult]:
    """Run every (x, strategy) pair; results are sorted by x, then strategy label."""
    config.validate()
    xs = sorted(set(float(x) for x in config.stretch))
    if config.workers > 1 and len(xs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_run_point, [config] * len(xs), xs))
    else:
        parts = [_run_point(config, x) for x in xs]
    results = [r for part in parts for r in part]
    return sorted(results, key=lambda r: (r.x, r.strategy))


# ---------------------------------------------------------------- metrics & output

def weighted_mean_error(results) -> float:
    """Mean over x of (E - E_FCI) / (E_subsystems - E_FCI)."""
    results = list(results)
    if not results:
        raise ValueError("no results")
    fracs = []
    for r in results:
        if r.energy is None or r.e_fci is None or r.e_subsystems is None:
            raise ValueError(f"record at x={r.x:g} lacks an energy or a reference")
        denom = r.e_subsystems - r.e_fci
        if abs(denom) < 1e-12:
            raise ValueError(f"E_subsystems equals E_FCI at x={r.x:g}; the error is undefined")
        fracs.append((r.energy - r.e_fci) / denom)
    return float(np.mean(fracs))


CSV_COLUMNS = ("x", "strategy", "start_label", "E_deepVQE", "E_FCI", "E_subsystems", "E_HF",
               "N_tot", "eps_used")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ";".join(_fmt(u) for u in v)
    return str(v)


def results_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in sorted(results, key=lambda r: (r.x, r.strategy)):
        w.writerow([_fmt(v) for v in (r.x, r.strategy, r.start_label, r.energy, r.e_fci,
                                      r.e_subsystems, r.e_hf, r.n_tot, r.eps_used)])
    return buf.getvalue()


def results_json(results) -> str:
    rows = [asdict(r) for r in sorted(results, key=lambda r: (r.x, r.strategy))]
    return json.dumps(rows, indent=1, sort_keys=True) + "\n"


def emit_results(results, out_dir, stem: str = "results") -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.json``; refuses records violating
    E_FCI <= E <= E_subsystems."""
    results = list(results)
    if not results:
        raise ValueError("nothing to emit")
    for r in results:
        bad = r.sandwich_violation()
        if bad:
            raise ValueError(f"refusing to emit {r.strategy} at x={r.x:g}: {bad}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / f"{stem}.csv", out / f"{stem}.json"
    csv_path.write_text(results_csv(results))
    json_path.write_text(results_json(results))
    return csv_path, json_path
