"""Quality-of-information model and per-state running costs.

The expected QoI of a susceptible node is affine in its acceptance
probability, ``E_alpha[Q] = a1 * alpha + a2``. Branches:

* true item (probability L): accepted now -> V_T; doubted -> latent,
  later accepted with beta_L at a delay penalty kappa * delta;
* corrupted item (probability 1 - L): accepted now -> V_M; doubted ->
  exposed, later accepted with beta_E at the same delay penalty;
* rejected items score zero.

With scaling every accepting branch is shifted by S_k = k + 2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import clean_probability
from .model import E, I, L, S


@dataclass(frozen=True)
class QoiCoefficients:
    a1: float | np.ndarray
    a2: float | np.ndarray
    scaled: bool

    def value(self, alpha):
        return self.a1 * alpha + self.a2


def true_info_qoi(cls, eta):
    return cls.degree * eta + 1.0


def misinformation_qoi(cls, theta, eta):
    """Joint expectation of the QoI and the event that a corrupted item arrives."""
    k, lam = cls.degree, cls.lam
    return k * eta - k * theta - lam - (1.0 - lam) * k * eta


def _shift(cls, scaled):
    if scaled is None:
        return cls.scale_shift
    if not scaled:
        return 0.0 * cls.degree
    return cls.degree + 2.0


def expected_qoi_coefficients(cls, theta, eta, scaled: bool | None = None) -> QoiCoefficients:
    """Slope and intercept of the expected QoI in the acceptance probability.

    ``scaled=None`` follows the class setting; True/False force it.
    """
    s = _shift(cls, scaled)
    Lc = clean_probability(cls, theta)
    vt = true_info_qoi(cls, eta)
    fm = misinformation_qoi(cls, theta, eta)
    pen = cls.kappa * cls.delta
    accept_now = Lc * (vt + s) + fm + s * (1.0 - Lc)
    a2 = Lc * cls.beta_L * (vt + s - pen) + cls.beta_E * (fm + s * (1.0 - Lc) - pen * (1.0 - Lc))
    is_scaled = bool(np.all(np.asarray(s) != 0)) if scaled is None else bool(scaled)
    return QoiCoefficients(accept_now - a2, a2, is_scaled)


def target(cls, scaled: bool | None = None):
    """Effective QoI target; moved by S_k only when the class asks for it."""
    s = _shift(cls, scaled)
    return cls.target_qoi + np.where(cls.scale_target, s, 0.0)


def reported_qoi(cls, alpha, theta, eta):
    """Unscaled expected QoI, the quantity tabulated for comparison."""
    return expected_qoi_coefficients(cls, theta, eta, scaled=False).value(alpha)


def susceptible_cost(alpha, cls, theta, eta):
    co = expected_qoi_coefficients(cls, theta, eta)
    return (co.value(alpha) - target(cls)) ** 2


def running_cost(state_label, alpha, cls, theta, eta):
    """Instantaneous cost of a node in ``state_label`` ('S', 'E', 'L', 'I' or index)."""
    label = _label(state_label)
    if label == S:
        return susceptible_cost(alpha, cls, theta, eta)
    if label == I:
        return cls.infection_cost + 0.0 * theta
    return 0.0 * theta


def _label(state_label) -> int:
    if isinstance(state_label, str):
        return "SELI".index(state_label.upper())
    if state_label in (S, E, L, I):
        return int(state_label)
    raise ValueError(f"unknown state {state_label!r}")


def convexity_margin(cls, theta, eta):
    """Slope a1 of the scaled expected QoI; the cost is strongly convex iff a1 != 0."""
    return expected_qoi_coefficients(cls, theta, eta, scaled=True).a1


def claimed_convexity_bound(cls):
    """Lower bound on the scaled slope asserted for beta_L >= beta_E."""
    return (1.0 - cls.beta_L) * (2.0 * cls.degree - 1.0) + cls.beta_E * cls.delta
