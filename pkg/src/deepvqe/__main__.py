"""Command line: ``python -m deepvqe {integrals,partition-info,fci,run,sweep}``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .basis import BasisKind
from .effective import BudgetExceededError
from .fci import ConvergenceError, fci_energy
from .fcidump import FCIDumpError, write_fcidump
from .integrals import SCFConvergenceError, rhf_energy
from .pipeline import CACHE_ENV, PipelineError, RunConfig, emit_results, load_integrals, \
    parse_floats, parse_fragments, parse_strategy, prepare, results_csv, run_pipeline, \
    weighted_mean_error

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2
NUMERICAL = (ConvergenceError, SCFConvergenceError, BudgetExceededError, np.linalg.LinAlgError,
             FloatingPointError, MemoryError)


def _input_args(p, stretch_default=None):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--geometry", help="XYZ file or built-in name (tree10, tree13, h2)")
    src.add_argument("--fcidump", help="FCIDUMP file with active-space integrals")
    p.add_argument("--fragments", help="spatial orbitals per subsystem, e.g. '0|1 2 3|4 5 6'")
    p.add_argument("--assignment", help="qubit -> subsystem map, e.g. '0 0 1 1 1 1'")
    if stretch_default is not None:
        p.add_argument("--stretch", default=stretch_default,
                       help="stretching factor(s), comma separated")


def _layout_kwargs(args) -> dict:
    return dict(
        geometry=args.geometry, fcidump=args.fcidump,
        fragments=parse_fragments(args.fragments) if args.fragments else None,
        assignment=[int(v) for v in args.assignment.replace(",", " ").split()]
        if args.assignment else None)


def _config(args, strategies, stretch) -> RunConfig:
    refs = tuple(r.strip() for r in args.references.split(",") if r.strip())
    return RunConfig(**_layout_kwargs(args), strategies=strategies, stretch=stretch,
                     references=refs, solve=not args.counts_only,
                     workers=getattr(args, "workers", 1)).validate()


def _base_config(args, stretch) -> RunConfig:
    """Config for the stages before basis construction (no strategy needed)."""
    return RunConfig(**_layout_kwargs(args), stretch=stretch)


def cmd_integrals(args):
    cfg = _base_config(args, (float(args.stretch),))
    if cfg.fcidump is not None:
        raise ValueError("integrals needs --geometry")
    lo, S, ao = load_integrals(cfg, float(args.stretch))
    write_fcidump(lo, args.output)
    print(f"wrote {args.output}: {lo.n_spatial} orbitals, {lo.n_electrons} electrons, "
          f"e_nuc={lo.e_nuc:.10f}")


def cmd_partition_info(args):
    cfg = _base_config(args, (float(args.stretch),))
    system, _ = prepare(cfg, float(args.stretch))
    ph = system.ph
    info = {
        "n_qubits": ph.partition.n_qubits,
        "blocks": [list(b) for b in ph.partition.blocks],
        "local_terms": [len(h) for h in ph.locals],
        "interactions": ph.n_interactions,
        "max_abs_lambda": float(np.abs(ph.lam).max()) if ph.n_interactions else 0.0,
        "edge_sets": system.edges,
        "ordering": system.ordering.describe(),
    }
    print(json.dumps(info, indent=1))
    if args.dump:
        with open(args.dump, "w") as f:
            f.write(ph.to_text())


def cmd_fci(args):
    cfg = _base_config(args, (float(args.stretch),))
    lo, S, ao = load_integrals(cfg, float(args.stretch))
    e = fci_energy(lo, tol=1e-8)
    out = {"e_fci": float(e)}
    if args.rhf:
        out["e_hf"] = float(rhf_energy(ao if ao is not None else lo, S))
    print(json.dumps(out))


def _emit(results, args):
    if args.output:
        csv_path, json_path = emit_results(results, args.output)
        print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
    sys.stdout.write(results_csv(results))


def cmd_run(args):
    cfg = _config(args, [parse_strategy(args.strategy)], parse_floats(args.stretch))
    _emit(run_pipeline(cfg), args)


def cmd_sweep(args):
    if args.config:
        cfg = RunConfig.from_file(args.config)
    else:
        if not args.strategies:
            raise ValueError("sweep needs --config or --strategies")
        cfg = _config(args, [parse_strategy(s) for s in args.strategies.split(";") if s.strip()],
                      parse_floats(args.stretch))
    results = run_pipeline(cfg)
    if args.output is None and cfg.output_dir:
        args.output = cfg.output_dir
    _emit(results, args)
    if cfg.solve and {"fci", "combined"} <= set(cfg.references):
        for label in sorted({r.strategy for r in results}):
            rows = [r for r in results if r.strategy == label]
            try:
                wme = weighted_mean_error(rows)
            except ValueError as exc:
                print(f"# {label}: weighted mean error undefined ({exc})", file=sys.stderr)
                continue
            print(f"# {label}: weighted mean error {wme:.6f}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    kinds = ", ".join(k.value for k in BasisKind)
    p = argparse.ArgumentParser(prog="python -m deepvqe",
                                description="Divide-and-conquer ground states of molecular "
                                            "Hamiltonians.",
                                epilog=f"Reference energies are cached in ${CACHE_ENV} if set. "
                                       f"Basis kinds: {kinds}.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("integrals", help="write Loewdin-orbital integrals as FCIDUMP")
    _input_args(s, "1.0")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_integrals)

    s = sub.add_parser("partition-info", help="summarise the partitioned qubit Hamiltonian")
    _input_args(s, "1.0")
    s.add_argument("--dump", help="write the partitioned Hamiltonian as text")
    s.set_defaults(func=cmd_partition_info)

    s = sub.add_parser("fci", help="full CI (and optionally RHF) energy")
    _input_args(s, "1.0")
    s.add_argument("--rhf", action="store_true")
    s.set_defaults(func=cmd_fci)

    s = sub.add_parser("run", help="one strategy over the given stretching factors")
    _input_args(s, "1.0")
    s.add_argument("--strategy", required=True,
                   help="e.g. 'ParticleConserving(1111)', 'Interactions(1111)[eps=0.01]', "
                        "'InteractionsFixQubits(1,1)[qubits=12]'")
    s.add_argument("--references", default="fci,combined")
    s.add_argument("--counts-only", action="store_true", help="skip all energies")
    s.add_argument("-o", "--output", help="directory for results.csv / results.json")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="several strategies over several stretching factors")
    s.add_argument("--config", help="INI file; overrides the other options")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--geometry")
    src.add_argument("--fcidump")
    s.add_argument("--fragments")
    s.add_argument("--assignment")
    s.add_argument("--stretch", default="0.9,1.0,1.1,1.2,1.3,1.4,2.0")
    s.add_argument("--strategies", help="';'-separated strategy labels")
    s.add_argument("--references", default="fci,combined")
    s.add_argument("--counts-only", action="store_true")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sweep)
    return p


def _classify(exc) -> int:
    root = exc.cause if isinstance(exc, PipelineError) else exc
    return EXIT_NUMERICAL if isinstance(root, NUMERICAL) else EXIT_INVALID


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        args.func(args)
    except (PipelineError, FCIDumpError, ValueError, OSError, KeyError) + NUMERICAL as exc:
        code = _classify(exc)
        kind = "numerical failure" if code == EXIT_NUMERICAL else "error"
        print(f"{kind}: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
