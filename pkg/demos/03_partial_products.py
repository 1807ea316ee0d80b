"""
Partial products and their tail bound
=====================================

With W_n = I + P_n and summable ||P_n||, the partial products
J_n W_n ... J_1 W_1 settle down once the activation supports stop shrinking.
Here the products are grown one layer at a time and compared with the
analytic tail bound.
"""

# %%
import math

import numpy as np

from convlim import (
    DecayDeclaration,
    detect_convergence,
    family_network,
    padded_distance,
    product_states,
    series_inequality_lhs,
    series_inequality_rhs,
    tail_bound,
)

net = family_network({"name": "unit_center_power", "c": 1, "alpha": 2}, d=1)
states = product_states(net, 400)
norms = [1 / n**2 for n in range(1, 401)]

# %%
for n in (25, 50, 100, 200):
    dist = padded_distance(states[n].current, states[400].current, math.inf)
    print(f"n={n:3d}  distance to depth 400: {dist:.3e}  bound: {tail_bound(norms, n).bound:.3e}")

# %%
# The finite inequality behind the bound.
a = np.array(norms[:12])
for q in (0, 3, 8):
    print(q, series_inequality_lhs(a, q), "<=", series_inequality_rhs(a, q))

# %%
# A windowed Cauchy test. With a declared decay law the report carries the bound too.
decay = DecayDeclaration.power(1, 2)
report = detect_convergence(states[::50], tol=1e-2, decay=decay)
print(report.converged, report.basis, f"{report.tail_bound:.3e}")
