"""
A ReLU network is affine on each activation pattern
===================================================

Fix an input, record which units fire at every layer, and the whole network
collapses to one matrix and one offset that agree with the forward pass on
every input sharing that pattern.
"""

# %%
import numpy as np

from convlim import activation_trace, affine_representation, domain_membership, forward
from convlim.verify import random_network

rng = np.random.default_rng(0)
net = random_network(rng, d=2, depth=4, max_width=6)
print("widths:", net.widths(net.horizon))

# %%
x = rng.uniform(-1, 1, 2)
trace = activation_trace(net, x, net.horizon)
form = affine_representation(net, trace, net.horizon)
print("forward :", forward(net, x, net.horizon))
print("affine  :", form(x))
print("supports:", [J.support for J in trace])

# %%
# Nearby points usually share the pattern; far away ones often do not.
for y in (x + 1e-6, x + 0.5, -x):
    inside = domain_membership(net, trace, y, net.horizon)
    gap = np.abs(form(y) - forward(net, y, net.horizon)).max()
    print(f"same pattern: {inside!s:5}  |affine - forward| = {gap:.2e}")
