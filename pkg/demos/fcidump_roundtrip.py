"""Write integrals as FCIDUMP, read them back and run on the file.

The same path takes externally generated active-space integrals.
"""

import tempfile
from pathlib import Path

from deepvqe import (RunConfig, apply_stretching, compute_sto3g_integrals, fci_energy,
                     lowdin_orthogonalize, parse_strategy, read_fcidump, run_pipeline,
                     tree10, write_fcidump)

ao, S = compute_sto3g_integrals(apply_stretching(tree10(), 1.4))
lo = lowdin_orthogonalize(ao, S)
path = Path(tempfile.mkdtemp()) / "tree10_x1.4.fcidump"
write_fcidump(lo, path)
back = read_fcidump(path)
print(f"{path.name}: {back.n_spatial} orbitals, {back.n_electrons} electrons")

cfg = RunConfig(fcidump=str(path), fragments=[[0], [1, 2, 3], [4, 5, 6], [7, 8, 9]],
                stretch=(1.0,), strategies=[parse_strategy("SinglePauliEdge(1111)")])
(r,) = run_pipeline(cfg)
print(f"E_deepVQE {r.energy:.6f}  E_FCI {r.e_fci:.6f}  N_tot {r.n_tot}")
