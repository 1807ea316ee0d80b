"""Checkers for the sufficient conditions of depth convergence.

Every checker looks at a finite prefix of layers. Whether a series is
summable is taken from a caller-declared tail law
(:class:`~convlim.decay.DecayDeclaration`) that is checked against the
prefix; with nothing declared the best possible verdict is
``satisfied_up_to_horizon``.

Verdicts:

``satisfied``
    every condition holds on the prefix and the declared tails are summable.
``satisfied_up_to_horizon``
    nothing contradicts the conditions, but summability is not established
    (no declaration, or a declaration the prefix does not obey).
``violated``
    the sufficient condition fails: a witnessed prefix violation, or a
    declared non-summable tail. This says nothing about divergence.
``inapplicable``
    the checker does not apply to the input (e.g. no layers).
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .conv import as_mask, mask_ratio_sum_term
from .decay import DecayDeclaration
from .lp_linalg import as_p, induced_norm, vector_pnorm

__all__ = [
    "CriterionReport",
    "GuidelineEntry",
    "check_cnn_general",
    "check_cnn_unit_center",
    "check_dnn_sufficient",
    "fixed_length_guideline",
]

VERDICTS = ("satisfied", "satisfied_up_to_horizon", "violated", "inapplicable")
_NO_DIVERGENCE = "a failed sufficient condition does not imply that the network diverges"
# slack when comparing a computed norm with a declared majorant
_RTOL = 1e-12


def _fmt(x):
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return float(f"{x:.15g}")


@dataclass
class CriterionReport:
    criterion: str
    verdict: str
    horizon: int
    partial_sums: dict = field(default_factory=dict)
    tail_estimates: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def satisfied(self):
        return self.verdict == "satisfied"

    def to_dict(self):
        return {
            "criterion": self.criterion,
            "verdict": self.verdict,
            "horizon": self.horizon,
            "partial_sums": {k: _fmt(v) for k, v in self.partial_sums.items()},
            "tail_estimates": {k: _fmt(v) for k, v in self.tail_estimates.items()},
            "notes": list(self.notes),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def _lookup(decays, target):
    if decays is None:
        return None
    if isinstance(decays, DecayDeclaration):
        decays = [decays]
    for dec in decays:
        if dec.applies_to == target:
            return dec
    return None


def _assess(name, terms, decay, notes, atol=0.0):
    """Status of one summability condition: 'ok', 'horizon' or 'violated'."""
    if decay is None or not decay.declared:
        notes.append(f"{name}: no tail law declared; summability unverified beyond the horizon")
        return "horizon"
    if not decay.summable:
        notes.append(f"{name}: declared tail law {decay.kind}(c={decay.c}, rate={decay.rate}) is not summable")
        return "violated"
    for n, a in enumerate(terms, start=1):
        if a > decay.majorant(n) * (1.0 + _RTOL) + atol:
            notes.append(
                f"{name}: term {n} = {a:.6g} exceeds declared majorant {decay.majorant(n):.6g};"
                " declaration inconsistent with the data"
            )
            return "horizon"
    return "ok"


def _combine(statuses):
    if "violated" in statuses:
        return "violated"
    if all(s == "ok" for s in statuses):
        return "satisfied"
    return "satisfied_up_to_horizon"


def _bias_norms(biases, n, p):
    if biases is None:
        return np.zeros(n)
    biases = list(biases)
    if len(biases) != n:
        raise ValueError(f"got {len(biases)} bias vectors for {n} layers")
    return np.array([vector_pnorm(b, p) for b in biases])


def _record(report, name, terms, decay):
    report.partial_sums[name] = float(np.sum(terms))
    report.tail_estimates[f"{name}_tail"] = decay.tail(len(terms)) if decay is not None else math.inf


def check_dnn_sufficient(layers, p=math.inf, decays=None):
    """Weights ``W_n = I + P_n`` with summable ``||P_n||_p`` and summable ``||b_n||_p``.

    ``layers`` is a sequence of ``(W_n, b_n)`` pairs. ``||P_n||_p`` is exact
    for ``p`` in ``{1, 2, inf}`` and the Riesz-Thorin upper bound otherwise.
    """
    p = as_p(p)
    layers = list(layers)
    report = CriterionReport("dnn_sufficient", "inapplicable", len(layers))
    if not layers:
        report.notes.append("no layers given")
        return report

    p_norms, b_norms = [], []
    m_prev = None
    for n, (W, b) in enumerate(layers, start=1):
        W = np.asarray(W, dtype=float)
        rows, cols = W.shape
        if rows < cols:
            raise ValueError(f"layer {n}: width shrinks ({cols} -> {rows})")
        if m_prev is not None and cols != m_prev:
            raise ValueError(f"layer {n}: expects width {cols}, previous layer gives {m_prev}")
        m_prev = rows
        P = W - np.eye(rows, cols)
        p_norms.append(induced_norm(P, p))
        b_norms.append(vector_pnorm(b, p))
    p_norms, b_norms = np.array(p_norms), np.array(b_norms)

    dec_p = _lookup(decays, "perturbation_norms")
    dec_b = _lookup(decays, "bias_norms")
    statuses = [
        _assess("perturbation_norms", p_norms, dec_p, report.notes),
        _assess("bias_norms", b_norms, dec_b, report.notes),
    ]
    _record(report, "perturbation_norms", p_norms, dec_p)
    _record(report, "bias_norms", b_norms, dec_b)
    report.tail_estimates["uniform_product_bound"] = math.exp(
        p_norms.sum() + report.tail_estimates["perturbation_norms_tail"]
    )
    report.verdict = _combine(statuses)
    if report.verdict == "violated":
        report.notes.append(_NO_DIVERGENCE)
    return report


def check_cnn_unit_center(masks, biases=None, p=math.inf, decays=None):
    """Masks with center ``w_0 = 1`` and summable ``sum_{j>=1} |w_j|``.

    ``sum_{j>=1} |w_j^{(n)}|`` bounds ``||P_n||_p`` for every ``p``, so it is
    checked in place of the norm.
    """
    p = as_p(p)
    masks = [as_mask(w) for w in masks]
    report = CriterionReport("cnn_unit_center", "inapplicable", len(masks))
    if not masks:
        report.notes.append("no masks given")
        return report

    off = [n for n, w in enumerate(masks, start=1) if w[0] != 1.0]
    tails = np.array([np.abs(w[1:]).sum() for w in masks])
    b_norms = _bias_norms(biases, len(masks), p)
    dec_p = _lookup(decays, "perturbation_norms")
    dec_b = _lookup(decays, "bias_norms")

    statuses = [
        _assess("perturbation_norms", tails, dec_p, report.notes),
        _assess("bias_norms", b_norms, dec_b, report.notes),
    ]
    if off:
        statuses.append("violated")
        report.notes.append(f"mask center differs from 1 at layer {off[0]} (w_0 = {masks[off[0] - 1][0]!r})")
    _record(report, "perturbation_norms", tails, dec_p)
    _record(report, "bias_norms", b_norms, dec_b)
    report.tail_estimates["uniform_product_bound"] = math.exp(
        tails.sum() + report.tail_estimates["perturbation_norms_tail"]
    )
    report.verdict = _combine(statuses)
    if report.verdict == "violated":
        report.notes.append(_NO_DIVERGENCE)
    return report


def _max_window_product(centers):
    """``max_{i <= n} prod_{j=i}^n |w_0^{(j)}|`` over the horizon."""
    logs = np.log(np.abs(centers))
    best, run = -math.inf, 0.0
    for v in logs:
        # best window ending here: extend the previous window or restart
        run = v + max(run, 0.0)
        best = max(best, run)
    return math.exp(best)


def check_cnn_general(masks, biases=None, p=math.inf, decays=None):
    """Masks whose centers have a nonzero infinite product and with summable
    ratios ``sum_{j>=1} |w_j| / |w_0|``.

    The center product is checked with the scalar test: ``w_0 = 1 + lambda_n``
    with ``|lambda_n| <= delta < 1`` and summable ``|lambda_n|``; ``delta`` is
    the largest ``|lambda_n|`` seen. If no law is declared for ``lambda`` and
    every center on the prefix is exactly 1, the center condition is treated
    as the unit-center checker treats it.
    """
    p = as_p(p)
    masks = [as_mask(w) for w in masks]
    report = CriterionReport("cnn_general", "inapplicable", len(masks))
    if not masks:
        report.notes.append("no masks given")
        return report

    centers = np.array([w[0] for w in masks])
    lam = np.abs(centers - 1.0)
    b_norms = _bias_norms(biases, len(masks), p)
    dec_p = _lookup(decays, "perturbation_norms")
    dec_b = _lookup(decays, "bias_norms")
    dec_l = _lookup(decays, "lambda")

    statuses = []
    zero = np.flatnonzero(centers == 0.0)
    if zero.size:
        statuses.append("violated")
        report.notes.append(f"mask center is zero at layer {zero[0] + 1}; the center product cannot be nonzero")
        ratios = np.full(len(masks), math.inf)
    else:
        ratios = np.array([mask_ratio_sum_term(w) for w in masks])

    delta = float(lam.max())
    report.partial_sums["lambda_max"] = delta
    if delta >= 1.0:
        statuses.append("violated")
        n = int(np.argmax(lam >= 1.0)) + 1
        report.notes.append(f"|lambda_{n}| = {lam[n - 1]:.6g} >= 1; scalar product test needs delta < 1")

    if (dec_l is None or not dec_l.declared) and not lam.any():
        statuses.append("ok")
    else:
        # lambda_n = w_0 - 1 is only known to within rounding of w_0
        slack = 4.0 * np.finfo(float).eps * max(1.0, float(np.abs(centers).max()))
        statuses.append(_assess("lambda", lam, dec_l, report.notes, slack))
    statuses.append(_assess("ratio_terms", ratios, dec_p, report.notes))
    statuses.append(_assess("bias_norms", b_norms, dec_b, report.notes))

    _record(report, "lambda", lam, dec_l)
    _record(report, "ratio_terms", ratios, dec_p)
    _record(report, "bias_norms", b_norms, dec_b)
    report.partial_sums["center_product"] = float(np.prod(centers))
    if not zero.size:
        report.tail_estimates["uniform_product_bound"] = math.exp(
            ratios.sum() + report.tail_estimates["ratio_terms_tail"]
        ) * _max_window_product(centers)

    report.verdict = _combine(statuses)
    if report.verdict == "violated":
        report.notes.append(_NO_DIVERGENCE)
    return report


@dataclass
class GuidelineEntry:
    j: int
    ratios: np.ndarray
    below_tol: bool
    decreasing: bool

    @property
    def consistent(self):
        return self.below_tol or self.decreasing


def fixed_length_guideline(masks, tol=1e-6, window=10):
    """Per tap ``j``, the ratios ``|w_j^{(n)}| / |w_0^{(n)}|`` and whether the
    trailing ``window`` is below ``tol`` or strictly decreasing.

    Tending to zero is necessary for the fixed-length condition, not
    sufficient. An empty list means ``s = 0`` (nothing to check).
    """
    masks = [as_mask(w) for w in masks]
    lengths = {w.size for w in masks}
    if len(lengths) != 1:
        raise ValueError(f"masks must share one length, got {sorted(lengths)}")
    M = np.array(masks)
    if np.any(M[:, 0] == 0.0):
        raise ValueError("mask center w_0 is zero")
    R = np.abs(M[:, 1:]) / np.abs(M[:, :1])
    entries = []
    for j in range(1, M.shape[1]):
        r = R[:, j - 1]
        tail = r[-window:]
        entries.append(GuidelineEntry(
            j, r, bool(np.all(tail <= tol)), bool(tail.size > 1 and np.all(np.diff(tail) < 0))
        ))
    return entries
