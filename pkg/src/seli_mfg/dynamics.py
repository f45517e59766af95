"""Forward Kolmogorov equations of the SELI population and their coupling fields."""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import IntegrationDiverged, GridMismatch
from .model import E, I, L, S, ClassArrays, NetworkModel, TimeGrid

# occupancies farther than this outside [0, 1] are treated as instability
CLAMP_SLACK = 1e-6


@dataclass(frozen=True)
class MeanFieldTrajectory:
    """Occupancies ``m[j, c, l]`` at grid point j for class c and state l."""

    grid: TimeGrid
    m: np.ndarray

    def state(self, j: int) -> np.ndarray:
        return self.m[j]

    @property
    def infected(self) -> np.ndarray:
        return self.m[:, :, I]

    @property
    def final(self) -> np.ndarray:
        return self.m[-1]


@dataclass(frozen=True)
class AggregatePath:
    theta: np.ndarray
    eta: np.ndarray


def initial_state(n_classes: int) -> np.ndarray:
    m0 = np.zeros((n_classes, 4))
    m0[:, S] = 1.0
    return m0


def link_infection_probability(state: np.ndarray, net: NetworkModel) -> float:
    """Probability that a uniformly chosen link endpoint is infected."""
    return float(np.dot(net.link_weights, state[:, I]))


def link_susceptible_probability(state: np.ndarray, net: NetworkModel) -> float:
    return float(np.dot(net.link_weights, state[:, S]))


def infection_pressure(cls, theta):
    """Rate at which a susceptible node is handed misinformation."""
    return cls.lam + cls.degree * theta


def clean_probability(cls, theta):
    """Probability that nothing received in the current instant is corrupted."""
    return (1.0 - cls.lam) * (1.0 - theta) ** cls.degree


def kolmogorov_rhs(state: np.ndarray, alpha, theta: float, cls) -> np.ndarray:
    """Time derivative of the (S, E, L, I) occupancies of every class.

    ``state`` has shape (C, 4) (or (4,) for a single class); ``alpha`` is the
    acceptance probability per class and ``cls`` anything exposing the class
    constants as attributes (a NodeClassParams or a ClassArrays).
    """
    R = infection_pressure(cls, theta)
    Lc = clean_probability(cls, theta)
    q = 1.0 - cls.delta
    ms, me, ml, mi = state[..., S], state[..., E], state[..., L], state[..., I]
    doubt = 1.0 - alpha
    s_to_e = doubt * R * ms
    s_to_l = doubt * Lc * ms
    s_to_i = alpha * R * ms
    e_to_i = q * cls.beta_E * me
    e_to_s = q * cls.gamma_E * me
    # beta_L + gamma_L == 1: every item leaving L returns the node to S
    l_to_s = q * ml
    i_to_s = cls.nu * mi
    out = np.empty_like(state, dtype=float)
    out[..., S] = e_to_s + l_to_s + i_to_s - s_to_e - s_to_l - s_to_i
    out[..., E] = s_to_e - e_to_s - e_to_i
    out[..., L] = s_to_l - l_to_s
    out[..., I] = s_to_i + e_to_i - i_to_s
    return out


def _check_and_clamp(m: np.ndarray, t: float) -> np.ndarray:
    lo, hi = m.min(), m.max()
    if not np.isfinite(lo) or not np.isfinite(hi) or lo < -CLAMP_SLACK or hi > 1.0 + CLAMP_SLACK:
        raise IntegrationDiverged(
            f"occupancy left [0, 1] at t={t:.6g} (min={lo:.3g}, max={hi:.3g}); refine the time grid"
        )
    if lo < 0.0 or hi > 1.0:
        m = np.clip(m, 0.0, 1.0)
    return m


def _rk4_path(m, alpha, cls, w, grid: TimeGrid) -> np.ndarray:
    """Integrate rows of ``m``; the first ``len(w)`` rows form the population that sets Theta."""
    n_pop = len(w)
    dt = grid.dt
    out = np.empty((grid.n_steps + 1,) + m.shape)
    out[0] = m

    def f(x, a):
        return kolmogorov_rhs(x, a, float(w @ x[:n_pop, I]), cls)

    for j in range(grid.n_steps):
        a = alpha[j]
        k1 = f(m, a)
        k2 = f(m + 0.5 * dt * k1, a)
        k3 = f(m + 0.5 * dt * k2, a)
        k4 = f(m + dt * k3, a)
        m = m + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        m = _check_and_clamp(m, (j + 1) * dt)
        out[j + 1] = m
    return out


def _policy_array(policy, net, grid):
    alpha = np.asarray(getattr(policy, "alpha", policy), dtype=float)
    if grid is None:
        grid = policy.grid
    shape = (grid.n_steps + 1, len(net))
    if alpha.shape != shape:
        raise GridMismatch(f"policy shape {alpha.shape} does not match grid/classes {shape}")
    return alpha, grid


def integrate_forward(policy, net: NetworkModel, grid: TimeGrid | None = None,
                      m0: np.ndarray | None = None) -> tuple[MeanFieldTrajectory, AggregatePath]:
    """RK4 integration of the occupancies under a piecewise-constant policy.

    ``policy`` is a ControlPolicy or an array ``alpha[j, c]`` of shape
    (n_steps + 1, C); ``alpha[j]`` is applied on [t_j, t_{j+1}). The link
    probabilities are recomputed from every intermediate stage.
    """
    alpha, grid = _policy_array(policy, net, grid)
    m = initial_state(len(net)) if m0 is None else np.array(m0, dtype=float)
    traj = MeanFieldTrajectory(grid, _rk4_path(m, alpha, net.arrays, net.link_weights, grid))
    return traj, aggregates_of(traj, net)


def integrate_reference_player(player_alpha, policy, net: NetworkModel, class_index: int,
                               grid: TimeGrid | None = None) -> np.ndarray:
    """State probabilities ``x[j, l]`` of one node deviating to ``player_alpha``.

    The node belongs to class ``class_index`` and faces the population driven
    by ``policy``; it does not move the aggregates.
    """
    alpha, grid = _policy_array(policy, net, grid)
    own = np.asarray(player_alpha, dtype=float).reshape(grid.n_steps + 1)
    cls = net.arrays
    rows = np.r_[np.arange(len(net)), class_index]
    ext = ClassArrays(**{f.name: getattr(cls, f.name)[rows] for f in fields(ClassArrays)})
    ext_alpha = np.column_stack([alpha, own])
    path = _rk4_path(initial_state(len(net) + 1), ext_alpha, ext, net.link_weights, grid)
    return path[:, -1]


def aggregates_of(traj: MeanFieldTrajectory, net: NetworkModel) -> AggregatePath:
    w = net.link_weights
    # fixed summation order over classes keeps the reduction deterministic
    theta = traj.m[:, :, I] @ w
    eta = traj.m[:, :, S] @ w
    return AggregatePath(theta, eta)
