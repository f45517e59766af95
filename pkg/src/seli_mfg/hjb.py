"""Backward value equations of a reference node and its best response."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import AggregatePath, clean_probability, infection_pressure
from .errors import DegenerateQuadratic, GridMismatch, IntegrationDiverged
from .model import E, I, L, S, NetworkModel, TimeGrid
from .qoi import _label, expected_qoi_coefficients, target

DEGENERATE_SLOPE = 1e-8


@dataclass(frozen=True)
class ControlPolicy:
    """Acceptance probability ``alpha[j, c]`` at grid point j for class c."""

    grid: TimeGrid
    alpha: np.ndarray

    @classmethod
    def constant(cls, grid: TimeGrid, n_classes: int, value: float) -> "ControlPolicy":
        return cls(grid, np.full((grid.n_steps + 1, n_classes), float(value)))

    def distance(self, other: "ControlPolicy") -> float:
        return float(np.max(np.abs(self.alpha - other.alpha)))


@dataclass(frozen=True)
class ValueTrajectory:
    """Cost-to-go ``u[j, c, l]``; ``u[-1]`` is the terminal value 0."""

    grid: TimeGrid
    u: np.ndarray


def _transition_slope(du, R, Lc):
    # derivative of the transition part of the S-Hamiltonian in alpha
    return R * du[..., I] - R * du[..., E] - Lc * du[..., L]


def linear_best_response(du, cls, theta):
    """Bang-bang minimiser used when the QoI slope vanishes; ties go to 0."""
    R = infection_pressure(cls, theta)
    Lc = clean_probability(cls, theta)
    return np.where(_transition_slope(np.asarray(du, float), R, Lc) >= 0.0, 0.0, 1.0)


def best_response(du, cls, theta, eta, eps: float = DEGENERATE_SLOPE):
    """Minimiser over [0, 1] of the S-state Hamiltonian.

    ``du`` holds ``u_j - u_S`` for j in (S, E, L, I). Raises DegenerateQuadratic
    if the QoI slope is below ``eps`` in magnitude.
    """
    du = np.asarray(du, float)
    co = expected_qoi_coefficients(cls, theta, eta)
    if np.any(np.abs(co.a1) < eps):
        raise DegenerateQuadratic(f"QoI slope {co.a1} below {eps}")
    return _closed_form(du, cls, theta, co.a1, co.a2, target(cls))


def _closed_form(du, cls, theta, a1, a2, q):
    R = infection_pressure(cls, theta)
    Lc = clean_probability(cls, theta)
    g = (-_transition_slope(du, R, Lc) + 2.0 * a1 * (q - a2)) / (2.0 * a1 * a1)
    return np.clip(g, 0.0, 1.0)


def _best_response_all(du, cls, theta, eta, a1, a2, q, eps=DEGENERATE_SLOPE):
    degenerate = np.abs(a1) < eps
    safe_a1 = np.where(degenerate, 1.0, a1)
    alpha = _closed_form(du, cls, theta, safe_a1, a2, q)
    if np.any(degenerate):
        alpha = np.where(degenerate, linear_best_response(du, cls, theta), alpha)
    return alpha


def s_hamiltonian_at(alpha, du, cls, theta, eta, include_qoi: bool = True):
    """S-state Hamiltonian evaluated at an arbitrary acceptance probability."""
    du = np.asarray(du, float)
    R = infection_pressure(cls, theta)
    Lc = clean_probability(cls, theta)
    trans = (1.0 - alpha) * R * du[..., E] + (1.0 - alpha) * Lc * du[..., L] + alpha * R * du[..., I]
    if not include_qoi:
        return trans
    co = expected_qoi_coefficients(cls, theta, eta)
    return (co.a1 * alpha + co.a2 - target(cls)) ** 2 + trans


def hamiltonian(state_label, du, cls, theta, eta):
    """Minimised Hamiltonian of one state and the minimising action.

    ``du`` is ``u_j - u_l`` for j in (S, E, L, I) with l = ``state_label``.
    Only S carries an action; the other states return ``None`` for it.
    """
    label = _label(state_label)
    du = np.asarray(du, float)
    q = 1.0 - cls.delta
    if label == S:
        co = expected_qoi_coefficients(cls, theta, eta)
        alpha = _best_response_all(du, cls, theta, eta, co.a1, co.a2, target(cls))
        return s_hamiltonian_at(alpha, du, cls, theta, eta), alpha
    if label == E:
        return q * cls.beta_E * du[..., I] + q * cls.gamma_E * du[..., S], None
    if label == L:
        return q * du[..., S], None
    return cls.infection_cost + cls.nu * du[..., S], None


def _drift(u, cls, theta, eta, include_qoi=True):
    """All four Hamiltonians for every class, plus the S-state best response."""
    uS = u[:, S:S + 1]
    du = u - uS
    R = infection_pressure(cls, theta)
    Lc = clean_probability(cls, theta)
    if include_qoi:
        co = expected_qoi_coefficients(cls, theta, eta)
        qt = target(cls)
        alpha = _best_response_all(du, cls, theta, eta, co.a1, co.a2, qt)
        run = (co.a1 * alpha + co.a2 - qt) ** 2
    else:
        alpha = linear_best_response(du, cls, theta)
        run = 0.0
    q = 1.0 - cls.delta
    h = np.empty_like(u)
    h[:, S] = run + (1.0 - alpha) * (R * du[:, E] + Lc * du[:, L]) + alpha * R * du[:, I]
    h[:, E] = q * (cls.beta_E * (u[:, I] - u[:, E]) + cls.gamma_E * (u[:, S] - u[:, E]))
    h[:, L] = q * (u[:, S] - u[:, L])
    h[:, I] = cls.infection_cost + cls.nu * (u[:, S] - u[:, I])
    return h, alpha


def integrate_backward(aggregates: AggregatePath, net: NetworkModel, grid: TimeGrid,
                       include_qoi: bool = True) -> tuple[ValueTrajectory, ControlPolicy]:
    """RK4 from u(T) = 0 back to t = 0 with linearly interpolated aggregates.

    The recorded policy is the best response at each grid point.
    """
    n, C = grid.n_steps, len(net)
    theta, eta = np.asarray(aggregates.theta), np.asarray(aggregates.eta)
    if theta.shape != (n + 1,) or eta.shape != (n + 1,):
        raise GridMismatch(f"aggregates of length {theta.shape} on a grid of {n + 1} points")
    cls = net.arrays
    dt = grid.dt
    u = np.zeros((C, 4))
    us = np.empty((n + 1, C, 4))
    alphas = np.empty((n + 1, C))
    us[n] = u
    _, alphas[n] = _drift(u, cls, theta[n], eta[n], include_qoi)
    for j in range(n, 0, -1):
        th1, et1 = theta[j], eta[j]
        th0, et0 = theta[j - 1], eta[j - 1]
        thm, etm = 0.5 * (th0 + th1), 0.5 * (et0 + et1)
        k1, _ = _drift(u, cls, th1, et1, include_qoi)
        k2, _ = _drift(u + 0.5 * dt * k1, cls, thm, etm, include_qoi)
        k3, _ = _drift(u + 0.5 * dt * k2, cls, thm, etm, include_qoi)
        k4, _ = _drift(u + dt * k3, cls, th0, et0, include_qoi)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(u)):
            raise IntegrationDiverged(f"non-finite value function at t={(j - 1) * dt:.6g}")
        us[j - 1] = u
        _, alphas[j - 1] = _drift(u, cls, th0, et0, include_qoi)
    return ValueTrajectory(grid, us), ControlPolicy(grid, alphas)
