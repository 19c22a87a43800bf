"""Divide-and-conquer (deep VQE) ground states of molecular Hamiltonians, solved exactly.

Subsystem problems and the effective Hamiltonian are diagonalised directly
instead of variationally, so every number is reproducible.
"""

from .basis import BasisKind, BasisStrategy, SubsystemBasis, build_basis, gram_schmidt, \
    number_adapted, qubit_report, split_qubit_budget
from .effective import EffectiveHamiltonian, FockSpaceProduct, assemble, \
    combined_subsystem_energy, diagonalize_factor, emit_measurement_plan, full_space_energy, \
    measurement_plan_text, solve_effective
from .fci import ConvergenceError, fci_energy
from .fcidump import FCIDumpError, read_fcidump, write_fcidump
from .integrals import IntegralSet, MoleculeGeometry, apply_stretching, compute_sto3g_integrals, \
    lowdin_orthogonalize, read_xyz, rhf_energy, write_xyz
from .jordan_wigner import SpinOrbitalOrdering, jordan_wigner, number_operator, sz_operator
from .molecules import STRETCH_FACTORS, h2, hydrogen_chain, tree10, tree13
from .partition import PartitionedHamiltonian, SubsystemPartition, filter_interactions, \
    partition, strongest_interaction_qubits
from .pauli import PauliSum, PauliTerm, QubitHamiltonian
from .pipeline import RunConfig, RunResult, emit_results, parse_start_label, parse_strategy, \
    run_pipeline, weighted_mean_error
from .subsystem import EigenSolution, StateVector, label_by_sz, solve_excited, solve_lowest

__version__ = "0.1.0"
