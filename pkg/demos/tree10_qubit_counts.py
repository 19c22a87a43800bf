"""Qubit budgets N_tot of the effective Hamiltonian for the 10-H tree.

Counts need no energies, so this runs in seconds.
"""

from deepvqe import RunConfig, STRETCH_FACTORS, parse_strategy, run_pipeline

labels = ["ParticleConserving(1111)", "ParticleConservingEdge(1111)", "SinglePauliEdge(1111)",
          "ParticleConservingEdge(2222)", "SinglePauliEdge(2222)", "Interactions(1111)[eps=0.01]",
          "InteractionsFixQubits(1111)[qubits=12]"]
cfg = RunConfig(geometry="tree10", stretch=STRETCH_FACTORS, solve=False,
                strategies=[parse_strategy(s) for s in labels])
rows = run_pipeline(cfg)

print(f"{'strategy':42s}" + "".join(f"{x:>6.1f}" for x in STRETCH_FACTORS))
for label in labels:
    counts = [r.n_tot for r in rows if r.strategy == label]
    print(f"{label:42s}" + "".join(f"{n:>6d}" for n in counts))
