"""Monte Carlo simulation of a finite population playing a fixed policy.

Every node draws one uniform per step and moves along the first branch
whose cumulative probability exceeds it. Branch order is I, E, L, S; the
remaining mass means "stay".
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import MeanFieldTrajectory, clean_probability, infection_pressure, integrate_forward
from .errors import GridMismatch, InvalidPopulation, StepTooLarge
from .model import E, I, L, S, NetworkModel, ScenarioConfig, TimeGrid

MAX_STEP_MASS = 0.1
_BRANCHES = np.array([I, E, L, S])


def allocate_population(net: NetworkModel, N: int) -> np.ndarray:
    """Largest-remainder split of N nodes across classes; ties go to earlier classes."""
    if N < len(net):
        raise InvalidPopulation(f"N={N} is smaller than the number of classes ({len(net)})")
    quota = N * net.weight_array
    sizes = np.floor(quota).astype(np.int64)
    short = N - int(sizes.sum())
    order = sorted(range(len(net)), key=lambda c: (-(quota[c] - sizes[c]), c))
    for c in order[:short]:
        sizes[c] += 1
    if np.any(sizes == 0):
        raise InvalidPopulation(f"allocation {sizes.tolist()} leaves a class empty; increase N")
    return sizes


def empirical_aggregates(counts: np.ndarray, net: NetworkModel) -> tuple[float, float]:
    """Degree-weighted infected and susceptible shares of link endpoints.

    ``counts`` has shape (C, 4).
    """
    k = net.degrees
    endpoints = float(k @ counts.sum(axis=1))
    return float(k @ counts[:, I]) / endpoints, float(k @ counts[:, S]) / endpoints


def check_step(config: ScenarioConfig) -> None:
    cls = config.network.arrays
    bound = config.grid.dt * float(np.max(cls.lam + cls.degree + 1.0))
    if bound >= MAX_STEP_MASS:
        raise StepTooLarge(f"dt * max exit rate = {bound:.3g} >= {MAX_STEP_MASS}; refine the time grid")


@dataclass(frozen=True)
class FiniteSimResult:
    grid: TimeGrid
    sizes: np.ndarray     # N_ik
    counts: np.ndarray    # [replica, j, c, l]
    theta: np.ndarray     # replica mean of Theta_N at grid points
    eta: np.ndarray
    theta_replicas: np.ndarray
    seed: int | None
    replicas: int

    @classmethod
    def from_counts(cls, grid: TimeGrid, counts: np.ndarray, net: NetworkModel, seed=None) -> "FiniteSimResult":
        counts = np.asarray(counts)
        if counts.ndim == 3:
            counts = counts[None]
        k = net.degrees
        sizes = counts[0, 0].sum(axis=1)
        endpoints = float(k @ sizes)
        th = counts[..., I] @ k / endpoints
        et = counts[..., S] @ k / endpoints
        return cls(grid, sizes, counts, th.mean(axis=0), et.mean(axis=0), th, seed, counts.shape[0])

    @property
    def fractions(self) -> np.ndarray:
        return self.counts / self.sizes[None, None, :, None]


def _branch_table(alpha, theta, cls, dt) -> np.ndarray:
    """Per-step move probabilities ``P[c, from_state, branch]`` with branches ordered I, E, L, S."""
    R = infection_pressure(cls, theta)
    Lc = clean_probability(cls, theta)
    q = 1.0 - cls.delta
    C = len(cls.degree)
    P = np.zeros((C, 4, 4))
    P[:, S, 0] = alpha * R * dt
    P[:, S, 1] = (1.0 - alpha) * R * dt
    P[:, S, 2] = (1.0 - alpha) * Lc * dt
    P[:, E, 0] = q * cls.beta_E * dt
    P[:, E, 3] = q * cls.gamma_E * dt
    P[:, L, 3] = q * dt
    P[:, I, 3] = cls.nu * dt
    return np.cumsum(P, axis=2)


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replica)]))


def _run_replica(config: ScenarioConfig, alpha: np.ndarray, sizes: np.ndarray, rng) -> np.ndarray:
    net, grid = config.network, config.grid
    cls, k = net.arrays, net.degrees
    C = len(net)
    node_class = np.repeat(np.arange(C), sizes)
    state = np.full(node_class.size, S, dtype=np.int64)
    endpoints = float(k @ sizes)
    out = np.empty((grid.n_steps + 1, C, 4), dtype=np.int64)

    def tally():
        return np.bincount(node_class * 4 + state, minlength=4 * C).reshape(C, 4)

    counts = tally()
    out[0] = counts
    for j in range(grid.n_steps):
        theta = float(k @ counts[:, I]) / endpoints
        cum = _branch_table(alpha[j], theta, cls, grid.dt)[node_class, state]
        u = rng.random(node_class.size)
        pick = (u[:, None] >= cum).sum(axis=1)
        moving = pick < 4
        state[moving] = _BRANCHES[pick[moving]]
        counts = tally()
        if not np.array_equal(counts.sum(axis=1), sizes):
            raise AssertionError("population count not conserved")
        out[j + 1] = counts
    return out


def simulate(config: ScenarioConfig, policy, N: int, replicas: int, seed: int = 0) -> FiniteSimResult:
    """Run ``replicas`` independent populations of N nodes under ``policy``.

    Replica r uses the stream seeded by (seed, r), so results do not depend
    on how replicas are scheduled.
    """
    alpha = np.asarray(getattr(policy, "alpha", policy), float)
    grid, net = config.grid, config.network
    if alpha.shape != (grid.n_steps + 1, len(net)):
        raise GridMismatch(f"policy shape {alpha.shape} does not match {(grid.n_steps + 1, len(net))}")
    check_step(config)
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    sizes = allocate_population(net, N)
    runs = np.stack([_run_replica(config, alpha, sizes, replica_rng(seed, r)) for r in range(replicas)])
    res = FiniteSimResult.from_counts(grid, runs, net, seed)
    return res


def mean_field_deviation(result: FiniteSimResult, mf: MeanFieldTrajectory) -> np.ndarray:
    """Replica mean of the squared sup-norm gap per class, summed over classes."""
    if result.counts.shape[1:] != mf.m.shape:
        raise GridMismatch(f"simulation shape {result.counts.shape[1:]} vs mean field {mf.m.shape}")
    gap = np.abs(result.fractions - mf.m[None]).max(axis=3)
    return (gap ** 2).sum(axis=2).mean(axis=0)


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    sup_deviation: float
    sup_theta_gap: float
    relative_theta_gap: float


def convergence_study(config: ScenarioConfig, policy, N_list, replicas: int, seed: int = 0) -> list[ConvergenceRow]:
    """Deviation from the mean field for each population size, ordered by N."""
    mf, agg = integrate_forward(policy, config.network, config.grid)
    scale = max(float(agg.theta[-1]), 1e-6)
    rows = []
    for N in sorted(N_list):
        res = simulate(config, policy, N, replicas, seed)
        dev = mean_field_deviation(res, mf)
        gap = float(np.max(np.abs(res.theta - agg.theta)))
        rows.append(ConvergenceRow(int(N), float(dev.max()), gap, gap / scale))
    return rows


def loglog_slope(rows: list[ConvergenceRow]) -> float:
    """Least-squares slope of log(sup deviation) against log(N)."""
    x = np.log([r.N for r in rows])
    y = np.log([max(r.sup_deviation, math.ulp(0.0)) for r in rows])
    return float(np.polyfit(x, y, 1)[0])
