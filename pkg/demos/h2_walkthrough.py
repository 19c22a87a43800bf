"""Every stage of the method on H2, small enough to print.

Two subsystems of one hydrogen orbital each (two qubits apiece).
"""

import numpy as np

from deepvqe import (BasisStrategy, SpinOrbitalOrdering, SubsystemPartition, assemble,
                     build_basis, combined_subsystem_energy, compute_sto3g_integrals,
                     emit_measurement_plan, fci_energy, h2, jordan_wigner, lowdin_orthogonalize,
                     measurement_plan_text, number_adapted, partition, rhf_energy,
                     solve_effective, solve_excited, strongest_interaction_qubits, sz_operator)

ao, S = compute_sto3g_integrals(h2(0.7414))
lo = lowdin_orthogonalize(ao, S)
print(f"RHF {rhf_energy(ao, S):.6f}  FCI {fci_energy(lo):.6f}")

ordering = SpinOrbitalOrdering.interleaved(2)
H = jordan_wigner(lo, ordering)
ph = partition(H, SubsystemPartition.contiguous([2, 2]))
print(f"{len(H)} Pauli terms, {ph.n_interactions} of them cross the two subsystems")

edges = strongest_interaction_qubits(ph, partner_of=ordering.partner_of())
strategy = BasisStrategy("ParticleConservingEdge", (1, 1))
bases, grounds = [], []
for i, block in enumerate(ph.partition.blocks):
    sz = sz_operator(ordering, block).restrict(block)
    states, labels, sol = solve_excited(ph.locals[i], 1, sz)
    bases.append(number_adapted(build_basis(strategy, states, ph, i, edges=edges)))
    grounds.append(states[:, 0])
    print(f"subsystem {i}: ground {sol.ground.energy:.6f} "
          f"({sol.ground.degeneracy}-fold, kept spin {labels[0][2]}), K={bases[-1].K}")

eff = assemble(ph, bases)
e, coeffs = solve_effective(eff, n_electrons=2)
print(f"effective Hamiltonian on {eff.n_qubits} qubits: E = {e:.6f}")
print(f"combined subsystems: {combined_subsystem_energy(ph, grounds):.6f}")
print(measurement_plan_text(emit_measurement_plan(eff)[:2]))
print("largest coefficients:", np.round(np.sort(np.abs(coeffs.ravel()))[::-1][:3], 4))
