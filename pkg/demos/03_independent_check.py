"""
Cross-checking the amplitude equations
======================================

The variable reflection amplitude solver integrates first-order equations for
the reflection and transmission matrices.  An unrelated method solves the
same coupled equations: replace the coupling by a constant on many thin
slabs, solve each slab exactly, and chain the slabs with scattering-matrix
products.  Both must agree, and both must conserve flux.
"""

import time

import numpy as np

from cctunnel import ModelParams, solve_amplitudes, transfer_matrix_solve
from cctunnel.model import channel_energies

cases = {
    "two open channels": (ModelParams(a=1, b=1, d=7, l=5, u=0.15), 0.8),
    "wide field, derived convention": (
        ModelParams(a=1, b=8, d=5, l=3, u=0.05, convention="derived"), 0.4),
    "point-like pair": (ModelParams(a=1, b=3, d=0.05, l=0.05, u=0.05), 0.6),
}

for name, (params, offset) in cases.items():
    E = channel_energies(params, 1) + offset
    t0 = time.perf_counter()
    vra = solve_amplitudes(E, params)
    t1 = time.perf_counter()
    tm = transfer_matrix_solve(E, params)
    t2 = time.perf_counter()
    print(f"{name}: {vra.channels.n_open} open channel(s)")
    print(f"  max |P_vra - P_tm| = {np.abs(vra.P_t - tm.P_t).max():.1e}")
    print(f"  unitarity defect   = {vra.unitarity_defect:.1e} (vra), "
          f"{tm.unitarity_defect:.1e} (slabs)")
    print(f"  time               = {t1 - t0:.3f} s (vra), {t2 - t1:.3f} s (slabs)")
