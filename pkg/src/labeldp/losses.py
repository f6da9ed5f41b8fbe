"""Surrogate losses, their gradients, and the pairwise / class-balanced risks.

All losses are margin losses ``l(z)`` with ``z = y * f(x)`` (or the score
difference ``f(x_P) - f(x_N)`` for pairwise ranking risk).  The barrier hinge
``max(-b*(r+z)+r, max(b*(z-r), r-z))`` is symmetric on ``[-r, r]``: there
``l(z) + l(-z) = 2r``, which is what makes learning under symmetric label
noise behave like attenuated clean learning.  Sigmoid and unhinged are
globally symmetric; the remaining baselines are not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .validation import check_labels, check_scores

__all__ = [
    "LOSS_KINDS",
    "TRAINABLE_KINDS",
    "SYMMETRIC_CONSTANTS",
    "NonTrainableLossError",
    "LossSpec",
    "loss_value",
    "loss_grad",
    "symmetry_defect",
    "auc_risk",
    "ber_risk",
    "auc_percent",
    "balanced_accuracy_percent",
]

LOSS_KINDS = ("barrier", "sigmoid", "unhinged", "savage", "logistic", "squared", "hinge", "zero_one")
TRAINABLE_KINDS = tuple(k for k in LOSS_KINDS if k != "zero_one")


class NonTrainableLossError(ValueError):
    """Raised when a gradient is requested for the 0-1 loss."""


@dataclass(frozen=True)
class LossSpec:
    """A surrogate loss choice; barrier carries its (b, r) parameters."""

    kind: str
    b: float = 2.0
    r: float = 1.0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        if self.kind == "barrier" and not (self.b > 1.0 and self.r > 0.0):
            raise ValueError(f"barrier needs b > 1 and r > 0, got b={self.b}, r={self.r}")

    @classmethod
    def parse(cls, text: str) -> "LossSpec":
        """Parse the short CLI form, e.g. ``hinge`` or ``barrier:b=200,r=50``."""
        head, _, tail = text.strip().partition(":")
        kwargs = {}
        if tail:
            for item in tail.split(","):
                key, _, value = item.partition("=")
                if key.strip() not in ("b", "r") or not value:
                    raise ValueError(f"bad loss parameter {item!r} in {text!r}")
                kwargs[key.strip()] = float(value)
        return cls(head.strip().lower(), **kwargs)

    def short_name(self) -> str:
        if self.kind == "barrier":
            return f"barrier:b={self.b:g},r={self.r:g}"
        return self.kind


def _barrier_pieces(z: np.ndarray, b: float, r: float):
    return (-b * (r + z) + r, b * (z - r), r - z)


def loss_value(spec: LossSpec, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    kind = spec.kind
    if kind == "barrier":
        p1, p2, p3 = _barrier_pieces(z, spec.b, spec.r)
        return np.maximum(p1, np.maximum(p2, p3))
    if kind == "sigmoid":
        return expit(-z)
    if kind == "unhinged":
        return 1.0 - z
    if kind == "savage":
        return expit(-z) ** 2
    if kind == "logistic":
        # ln(1 + exp(-z)) in the overflow-safe form
        return np.maximum(0.0, -z) + np.log1p(np.exp(-np.abs(z)))
    if kind == "squared":
        return (1.0 - z) ** 2
    if kind == "hinge":
        return np.maximum(0.0, 1.0 - z)
    if kind == "zero_one":
        return np.where(z <= 0.0, 1.0, 0.0)
    raise AssertionError(kind)


def loss_grad(spec: LossSpec, z) -> np.ndarray:
    """Derivative of ``loss_value`` in z; kinks give the one-sided average."""
    z = np.asarray(z, dtype=float)
    kind = spec.kind
    if kind == "zero_one":
        raise NonTrainableLossError("0-1 loss has no usable gradient (non-trainable loss)")
    if kind == "barrier":
        pieces = _barrier_pieces(z, spec.b, spec.r)
        slopes = (-spec.b, spec.b, -1.0)
        value = np.maximum(pieces[0], np.maximum(pieces[1], pieces[2]))
        total = np.zeros_like(z)
        count = np.zeros_like(z)
        for piece, slope in zip(pieces, slopes):
            active = piece == value
            total += np.where(active, slope, 0.0)
            count += active
        return total / count
    if kind == "sigmoid":
        return -expit(z) * expit(-z)
    if kind == "unhinged":
        return np.full_like(z, -1.0)
    if kind == "savage":
        return -2.0 * expit(-z) ** 2 * expit(z)
    if kind == "logistic":
        return -expit(-z)
    if kind == "squared":
        return -2.0 * (1.0 - z)
    if kind == "hinge":
        return np.where(z < 1.0, -1.0, np.where(z > 1.0, 0.0, -0.5))
    raise AssertionError(kind)


# l(z) + l(-z) on the symmetric window for the losses that have one.
SYMMETRIC_CONSTANTS = {"barrier": None, "sigmoid": 1.0, "unhinged": 2.0}


def symmetry_defect(spec: LossSpec, window: float, samples: int = 1001) -> float:
    """Max over the window of |l(x) + l(-x) - C|.

    C is the known constant for the symmetric losses (2r for barrier on
    [-r, r], 1 for sigmoid, 2 for unhinged); for any other loss the best
    constant (midrange) is used, so a positive defect reports genuine
    asymmetry rather than a bad constant choice.
    """
    xs = np.linspace(-window, window, samples)
    g = loss_value(spec, xs) + loss_value(spec, -xs)
    if spec.kind == "barrier":
        constant = 2.0 * spec.r
    else:
        constant = SYMMETRIC_CONSTANTS.get(spec.kind)
    if constant is None:
        constant = 0.5 * (g.max() + g.min())
    return float(np.max(np.abs(g - constant)))


def auc_risk(scores_pos, scores_neg, spec: LossSpec) -> float:
    """Mean loss over all positive/negative score-difference pairs."""
    sp = check_scores(scores_pos)
    sn = check_scores(scores_neg)
    if sp.size == 0 or sn.size == 0:
        raise ValueError("degenerate class: both score sets must be non-empty")
    margins = sp[:, None] - sn[None, :]
    return float(np.mean(loss_value(spec, margins)))


def ber_risk(scores, labels, spec: LossSpec) -> float:
    """Class-balanced risk: mean of the two per-class mean losses of y*f."""
    f = check_scores(scores)
    y = check_labels(labels)
    if f.size != y.size:
        raise ValueError(f"scores ({f.size}) and labels ({y.size}) differ in length")
    pos = y > 0
    if not pos.any() or pos.all():
        raise ValueError("degenerate class: need both labels present")
    z = y * f
    return 0.5 * (float(np.mean(loss_value(spec, z[pos]))) + float(np.mean(loss_value(spec, z[~pos]))))


_ZERO_ONE = LossSpec("zero_one")


def auc_percent(scores_pos, scores_neg) -> float:
    """AUC score in percent, 100 * (1 - pairwise 0-1 risk); ties count as errors."""
    return 100.0 * (1.0 - auc_risk(scores_pos, scores_neg, _ZERO_ONE))


def balanced_accuracy_percent(scores, labels) -> float:
    """Balanced accuracy in percent, 100 * (1 - balanced 0-1 risk)."""
    return 100.0 * (1.0 - ber_risk(scores, labels, _ZERO_ONE))
