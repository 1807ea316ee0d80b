"""Named families of mask/bias sequences.

A family spec is a dict with a ``name`` and parameters:

``{"name": "unit_center_power", "c": 1, "alpha": 2}``
    ``w^(n) = (1, c/n^alpha)``, ``b_n = (c/n^alpha) e_1``.
``{"name": "scaled_center", "lam_c": .5, "lam_alpha": 2, "tail_c": 1, "tail_alpha": 2,
  "bias_c": 0, "bias_alpha": 2}``
    ``w^(n) = (1 + lam_c (-1)^n / n^lam_alpha, tail_c / n^tail_alpha)``,
    ``b_n = (bias_c / n^bias_alpha) e_1``; needs ``lam_c < 1``.
``{"name": "constant", "mask": [1, 1]}``
    the same mask at every layer, zero biases.
``{"name": "custom_file", "path": "masks.json"}``
    masks read from a mask-sequence JSON file, zero biases.
"""

import numpy as np

from .conv import as_mask, load_masks
from .decay import DecayDeclaration
from .network import ConvLayer, Network

__all__ = ["FAMILIES", "family_decays", "family_network", "generate_family"]

FAMILIES = ("unit_center_power", "scaled_center", "constant", "custom_file")


def _positive(spec, key, default=None):
    value = float(spec.get(key, default))
    if value <= 0:
        raise ValueError(f"{spec['name']}: {key} must be > 0, got {value}")
    return value


def _e1(m, scale):
    b = np.zeros(m)
    b[0] = scale
    return b


def _rule(spec):
    """Return ``rule(n, m_prev) -> ConvLayer`` and the horizon (None if unbounded)."""
    name = spec.get("name")
    if name == "unit_center_power":
        c = float(spec.get("c", 1.0))
        alpha = _positive(spec, "alpha", 2.0)

        def rule(n, m_prev):
            t = c / n**alpha
            return ConvLayer([1.0, t], _e1(m_prev + 1, t))
        return rule, None

    if name == "scaled_center":
        lam_c = float(spec.get("lam_c", 0.5))
        if not 0 <= lam_c < 1:
            raise ValueError(f"scaled_center: lam_c must lie in [0, 1), got {lam_c}")
        lam_alpha = _positive(spec, "lam_alpha", 2.0)
        tail_c = float(spec.get("tail_c", 1.0))
        tail_alpha = _positive(spec, "tail_alpha", 2.0)
        bias_c = float(spec.get("bias_c", 0.0))
        bias_alpha = _positive(spec, "bias_alpha", 2.0)

        def rule(n, m_prev):
            w0 = 1.0 + lam_c * (-1) ** n / n**lam_alpha
            return ConvLayer([w0, tail_c / n**tail_alpha], _e1(m_prev + 1, bias_c / n**bias_alpha))
        return rule, None

    if name == "constant":
        mask = as_mask(spec["mask"])
        return (lambda n, m_prev: ConvLayer(mask, np.zeros(m_prev + mask.size - 1))), None

    if name == "custom_file":
        masks = load_masks(spec["path"])
        return (lambda n, m_prev: ConvLayer(masks[n - 1], np.zeros(m_prev + masks[n - 1].size - 1))), len(masks)

    raise ValueError(f"unknown family {name!r}; expected one of {FAMILIES}")


def family_network(spec, d):
    """Lazily built network for a family (layers created on demand)."""
    rule, horizon = _rule(spec)
    return Network(d, rule=rule, horizon=horizon)


def generate_family(spec, d, horizon):
    """First ``horizon`` masks and biases of a family, for input dimension ``d``."""
    net = family_network(spec, d)
    net.expand(horizon)
    layers = [net.layer(n) for n in range(1, horizon + 1)]
    return [layer.mask for layer in layers], [layer.bias for layer in layers]


def family_decays(spec):
    """Tail laws a family satisfies by construction (empty if none are known)."""
    name = spec.get("name")
    if name == "unit_center_power":
        c, alpha = float(spec.get("c", 1.0)), float(spec.get("alpha", 2.0))
        return [
            DecayDeclaration.power(abs(c), alpha, "perturbation_norms"),
            DecayDeclaration.power(abs(c), alpha, "bias_norms"),
            DecayDeclaration.power(0.0, 2.0, "lambda"),
        ]
    if name == "scaled_center":
        lam_c = float(spec.get("lam_c", 0.5))
        return [
            # |w_1| / |w_0| <= tail_c / ((1 - lam_c) n^tail_alpha)
            DecayDeclaration.power(abs(float(spec.get("tail_c", 1.0))) / (1.0 - lam_c),
                                   float(spec.get("tail_alpha", 2.0)), "perturbation_norms"),
            DecayDeclaration.power(abs(float(spec.get("bias_c", 0.0))),
                                   float(spec.get("bias_alpha", 2.0)), "bias_norms"),
            DecayDeclaration.power(lam_c, float(spec.get("lam_alpha", 2.0)), "lambda"),
        ]
    return []
