"""Energies along the stretching scan for one strategy, plus the error metric.

Takes a few minutes per stretching factor on one core. Set
DEEPVQE_CACHE_DIR to keep the FCI references between runs.
"""

import sys

from deepvqe import RunConfig, STRETCH_FACTORS, parse_strategy, run_pipeline, weighted_mean_error

label = sys.argv[1] if len(sys.argv) > 1 else "ParticleConservingEdge(1111)"
cfg = RunConfig(geometry="tree10", stretch=STRETCH_FACTORS,
                references=("fci", "combined", "rhf"), strategies=[parse_strategy(label)])
rows = run_pipeline(cfg)

print(f"{'x':>4} {'E_deepVQE':>12} {'E_FCI':>12} {'E_subsys':>12} {'E_HF':>12}  N_tot")
for r in rows:
    print(f"{r.x:4.1f} {r.energy:12.6f} {r.e_fci:12.6f} {r.e_subsystems:12.6f} {r.e_hf:12.6f}"
          f"  {r.n_tot}")
print(f"weighted mean error: {weighted_mean_error(rows):.4f}")
