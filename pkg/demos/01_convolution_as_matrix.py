"""
Convolution layers as tall Toeplitz matrices
============================================

A mask of length s+1 turns a length-m signal into a length m+s signal, so
every layer of a deep convolutional stack is a little wider than the one
before it.
"""

# %%
import math

import numpy as np

from convlim import cnn_widths, convolve, induced_norm, mask_ratio_sum_term, shift_decompose, toeplitz

w = np.array([1.0, 0.5, -0.25])
x = np.array([2.0, -1.0, 0.0, 3.0])
print("convolve:", convolve(x, w))
print("toeplitz:", toeplitz(w, x.size) @ x)

# %%
# Widths grow by s_n at every layer.
print(cnn_widths(3, [2, 2, 1, 4]))

# %%
# Writing W = w_0 (I + P), the norm of P is controlled by the off-center taps.
W = toeplitz(w, 6)
P = shift_decompose(W, normalize_by=w[0]).perturbation
for p in (1, 2, math.inf):
    print(f"||P||_{p} = {induced_norm(P, p):.4f}")
print("sum_j |w_j| / |w_0| =", mask_ratio_sum_term(w))
