"""
Exponent bookkeeping for the Moser iteration
============================================

The exponents grow geometrically with factor H(eps) = (9 + 4 eps)/(9 + 3 eps).
The partial products of eta_k = 1 + 2 H^-k converge, but slowly when eps is
small: the number of steps before they settle to 1e-10 is printed below.
"""

from __future__ import annotations

from vfdlab import moser

for eps in (0.1, 0.5, 1.0, 4.0):
    sched = moser.MoserSchedule(eps)
    bound = moser.bound_products(sched, i_max=200)
    print(f"eps = {eps:3.1f}  H = {sched.H:.5f}  product(200) = {bound.products[-1]:.4e}  "
          f"step(200) = {bound.cauchy_steps[-1]:.2e}  settles at i = {moser.cauchy_index(eps)}")

###############################################################################
# First few rows of the table emitted by ``python -m vfdlab moser-table``.
for row in moser.schedule_table(moser.MoserSchedule(0.5), 5):
    print({k: round(v, 6) if isinstance(v, float) else v for k, v in row.items()})
