"""Slow reference computations used to cross-check the closed forms.

Nothing here imports the closed-form QoI or best-response code: link
statistics come from explicit multinomial enumeration and minimisers from a
dense grid.
"""
from __future__ import annotations

from math import factorial

import numpy as np


def link_distribution(k: int, theta: float, eta: float):
    """Yield ``(n1, n2, prob)`` for n1 infected and n2 susceptible neighbours out of k."""
    rest = 1.0 - theta - eta
    for n1 in range(k + 1):
        for n2 in range(k - n1 + 1):
            n3 = k - n1 - n2
            coef = factorial(k) // (factorial(n1) * factorial(n2) * factorial(n3))
            yield n1, n2, coef * theta ** n1 * eta ** n2 * rest ** n3


def enumerated_link_stats(cls, theta, eta):
    """Infection pressure, clean probability, true-info QoI and misinformation QoI by enumeration."""
    k, lam = int(cls.degree), float(cls.lam)
    no_infected = mean_n1 = vt = fm = 0.0
    for n1, n2, p in link_distribution(k, theta, eta):
        mean_n1 += p * n1
        vt += p * (n2 + 1)
        if n1 == 0:
            no_infected += p
        # attacker injects (y=1) with prob lam; otherwise only infected links corrupt
        fm += p * (lam * (n2 - n1 - 1) + (1 - lam) * (n2 - n1) - (1 - lam) * n2)
    return lam + mean_n1, (1.0 - lam) * no_infected, vt, fm


def enumerated_qoi_branches(cls, theta, eta, scaled: bool):
    """Expected QoI when accepting at once and when doubting first."""
    _, clean, vt, fm = enumerated_link_stats(cls, theta, eta)
    s = cls.degree + 2.0 if scaled else 0.0
    corrupt = 1.0 - clean
    pen = cls.kappa * cls.delta
    accept = clean * (vt + s) + (fm + s * corrupt)
    # doubting a true item: latent, accepted later with beta_L at a delay penalty
    doubt = clean * cls.beta_L * (vt + s - pen)
    # doubting a corrupted item: exposed, accepted later with beta_E
    doubt += cls.beta_E * (fm + s * corrupt - pen * corrupt)
    return accept, doubt


def brute_force_expected_qoi(cls, theta, eta, alpha, scaled: bool = False):
    accept, doubt = enumerated_qoi_branches(cls, theta, eta, scaled)
    return alpha * accept + (1.0 - alpha) * doubt


def grid_best_response(du, cls, theta, eta, n_points: int = 100_001, scaled: bool | None = None):
    """Minimise the S-state Hamiltonian over ``n_points`` equally spaced actions.

    Returns ``(alpha, value)``. ``du`` holds ``u_j - u_S`` for (S, E, L, I).
    """
    if scaled is None:
        scaled = bool(cls.scaling_enabled)
    pressure, clean, _, _ = enumerated_link_stats(cls, theta, eta)
    accept, doubt = enumerated_qoi_branches(cls, theta, eta, scaled)
    q_t = cls.target_qoi + ((cls.degree + 2.0) if (scaled and cls.scale_target) else 0.0)
    a = np.linspace(0.0, 1.0, n_points)
    qoi = a * accept + (1.0 - a) * doubt
    h = (qoi - q_t) ** 2
    h = h + (1.0 - a) * pressure * du[1] + (1.0 - a) * clean * du[2] + a * pressure * du[3]
    j = int(np.argmin(h))
    return float(a[j]), float(h[j])
