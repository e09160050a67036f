"""
Convergence against exact solutions
===================================

Two ladders: the radial extinction profile 2 sqrt(T - t)/r on a spherical
shell, and a manufactured solution on the disk with a dynamic boundary.
"""

from __future__ import annotations

import numpy as np

from vfdlab import oracle

###############################################################################
# The explicit profile is first checked independently of the solver: a
# fourth-order finite-difference residual should drop by about 16 per halving.
sol = oracle.singular_solution(T=1.0)
for h, res in oracle.probe_order(sol, 0.5, np.array([[1.5, 0.0, 0.0]])):
    print(f"probe h = {h:.3f}  residual = {res:.3e}")

###############################################################################
# Shell [1, 3] with pinned boundary values, dt proportional to h^2.
for row in oracle.annulus_ladder((16, 32, 64)):
    print(f"annulus n = {row.n:3d}  error = {row.error:.3e}  ratio = {row.ratio:.3f}")

###############################################################################
# Manufactured solution: space and time separately.
for row in oracle.mms_space_ladder((8, 16, 32)):
    print(f"disk n_r = {row.n:3d}  error = {row.error:.3e}  ratio = {row.ratio:.3f}")
for row in oracle.mms_time_ladder((0.04, 0.02, 0.01)):
    print(f"disk dt = {row.dt:.3f}  error = {row.error:.3e}  ratio = {row.ratio:.3f}")
