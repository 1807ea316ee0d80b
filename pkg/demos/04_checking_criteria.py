"""
Checking sufficient conditions on mask sequences
================================================

Summability cannot be read off a finite prefix, so every checker takes a
declared tail law and tests the prefix against it.
"""

# %%
import math

import numpy as np

from convlim import (
    DecayDeclaration,
    check_cnn_general,
    check_cnn_unit_center,
    family_decays,
    fixed_length_guideline,
    generate_family,
)

masks, biases = generate_family({"name": "unit_center_power", "c": 1, "alpha": 2}, 1, 100)
laws = [DecayDeclaration.power(1, 2, "perturbation_norms"), DecayDeclaration.power(1, 2, "bias_norms")]
print(check_cnn_unit_center(masks, biases, math.inf, laws).to_json(indent=2))

# %%
# No declaration: the best possible answer is "up to the horizon".
print(check_cnn_unit_center(masks, biases).verdict)

# %%
# Centers away from 1 need the general checker.
spec = {"name": "scaled_center", "lam_c": 0.5, "lam_alpha": 2, "tail_c": 1, "tail_alpha": 2}
masks, biases = generate_family(spec, 1, 100)
report = check_cnn_general(masks, biases, math.inf, family_decays(spec))
print(report.verdict, report.tail_estimates["uniform_product_bound"])

# %%
# Ratios 1/n vanish, which the guideline accepts, but they are not summable.
harmonic = [np.array([1.0, 1.0 / n]) for n in range(1, 200)]
print([e.consistent for e in fixed_length_guideline(harmonic)])
print(check_cnn_general(harmonic, None, math.inf, [DecayDeclaration.power(1, 1)]).verdict)
