"""Forward-backward sweep for the mean-field equilibrium, plus the always-accept baseline."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import trapezoid

from .dynamics import AggregatePath, MeanFieldTrajectory, integrate_forward
from .errors import NotConverged
from .hjb import ControlPolicy, ValueTrajectory, integrate_backward
from .model import I, S, ScenarioConfig, validate
from .qoi import expected_qoi_coefficients, reported_qoi, target

log = logging.getLogger(__name__)

RESTART_DAMPING = 0.5
DIVISION_GUARD = 1e-12


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    residual: float       # sup |alpha - BR(alpha)| of the iterate
    policy_change: float  # sup |alpha_next - alpha| after damping
    damping: float


@dataclass(frozen=True)
class EquilibriumSolution:
    policy: ControlPolicy
    trajectory: MeanFieldTrajectory
    aggregates: AggregatePath
    values: ValueTrajectory
    iterations_used: int
    final_residual: float
    converged: bool
    damping: float = 1.0
    history: tuple[IterationRecord, ...] = field(default=(), repr=False)

    @property
    def policy_change(self) -> float:
        return self.history[-1].policy_change if self.history else float("nan")


@dataclass(frozen=True)
class BaselineResult:
    trajectory: MeanFieldTrajectory
    aggregates: AggregatePath
    qoi: np.ndarray             # [j, c], unscaled E_1[Q]
    cumulative_cost: np.ndarray  # [c]


def _sweep(alpha: np.ndarray, config: ScenarioConfig, m0=None):
    net, grid = config.network, config.grid
    traj, agg = integrate_forward(alpha, net, grid, m0)
    values, br = integrate_backward(agg, net, grid)
    return traj, agg, values, br


def equilibrium_residual(candidate: ControlPolicy, config: ScenarioConfig, initial_state=None) -> float:
    """Sup-norm distance between a policy and the best response to the population it induces."""
    *_, br = _sweep(np.asarray(candidate.alpha, float), config, initial_state)
    return float(np.max(np.abs(br.alpha - candidate.alpha)))


def _iterate(config: ScenarioConfig, alpha: np.ndarray, damping: float, m0) -> EquilibriumSolution:
    best = None
    history: list[IterationRecord] = []
    grid = config.grid
    for it in range(1, config.max_iterations + 1):
        traj, agg, values, br = _sweep(alpha, config, m0)
        residual = float(np.max(np.abs(br.alpha - alpha)))
        nxt = damping * br.alpha + (1.0 - damping) * alpha
        change = float(np.max(np.abs(nxt - alpha)))
        history.append(IterationRecord(it, residual, change, damping))
        log.debug("iteration %d: residual %.3e, change %.3e", it, residual, change)
        if best is None or residual < best[1]:
            best = (alpha, residual, traj, agg, values, it)
        if residual <= config.tolerance:
            break
        alpha = nxt
    a, r, traj, agg, values, it = best
    return EquilibriumSolution(
        policy=ControlPolicy(grid, a), trajectory=traj, aggregates=agg, values=values,
        iterations_used=len(history), final_residual=r, converged=r <= config.tolerance,
        damping=damping, history=tuple(history),
    )


def solve_mfe(config: ScenarioConfig, alpha0=None, initial_state=None,
              restart: bool = True) -> EquilibriumSolution:
    """Picard iteration on the policy until it reproduces its own best response.

    ``alpha0`` may be a scalar or an array on the grid (defaults to
    ``config.initial_alpha``). ``initial_state`` replaces the all-susceptible
    start, e.g. with the final occupancies of a previous interval. If plain
    iteration fails and ``restart`` is set, the solve is retried once with
    damping 0.5. Raises NotConverged carrying the best iterate and history.
    """
    validate(config)
    grid, C = config.grid, len(config.network)
    if alpha0 is None:
        alpha0 = config.initial_alpha
    alpha = np.broadcast_to(np.asarray(alpha0, float), (grid.n_steps + 1, C)).copy()
    sol = _iterate(config, alpha, config.damping, initial_state)
    if sol.converged:
        return sol
    if restart and config.damping > RESTART_DAMPING:
        log.info("no convergence at damping %.2f (residual %.2e); retrying at %.2f",
                 config.damping, sol.final_residual, RESTART_DAMPING)
        retry = _iterate(config, alpha, RESTART_DAMPING, initial_state)
        history = sol.history + retry.history
        if retry.converged:
            return _with_history(retry, history)
        if retry.final_residual < sol.final_residual:
            sol = retry
        sol = _with_history(sol, history)
    raise NotConverged(
        f"no fixed point within {config.max_iterations} iterations (best residual {sol.final_residual:.3e})",
        solution=sol, history=tuple(h.residual for h in sol.history),
    )


def _with_history(sol: EquilibriumSolution, history) -> EquilibriumSolution:
    return replace(sol, history=tuple(history), iterations_used=len(history))


def qoi_path(policy_alpha: np.ndarray, aggregates: AggregatePath, config: ScenarioConfig) -> np.ndarray:
    """Unscaled expected QoI ``[j, c]`` of a susceptible node along a path."""
    cls = config.network.arrays
    th = np.asarray(aggregates.theta)[:, None]
    et = np.asarray(aggregates.eta)[:, None]
    return reported_qoi(cls, policy_alpha, th, et)


def cumulative_cost(policy_alpha: np.ndarray, traj: MeanFieldTrajectory, aggregates: AggregatePath,
                    config: ScenarioConfig) -> np.ndarray:
    """Population-averaged running cost of each class integrated over the horizon."""
    cls = config.network.arrays
    th = np.asarray(aggregates.theta)[:, None]
    et = np.asarray(aggregates.eta)[:, None]
    co = expected_qoi_coefficients(cls, th, et)
    rate = traj.m[:, :, S] * (co.value(policy_alpha) - target(cls)) ** 2 + traj.m[:, :, I] * cls.infection_cost
    return trapezoid(rate, dx=config.grid.dt, axis=0)


def baseline_evaluation(config: ScenarioConfig, initial_state=None) -> BaselineResult:
    """Population in which every node accepts everything it receives."""
    validate(config)
    grid, C = config.grid, len(config.network)
    ones = np.ones((grid.n_steps + 1, C))
    traj, agg = integrate_forward(ones, config.network, grid, initial_state)
    return BaselineResult(traj, agg, qoi_path(ones, agg, config), cumulative_cost(ones, traj, agg, config))


@dataclass(frozen=True)
class SummaryMetrics:
    infected_mfe: np.ndarray
    infected_baseline: np.ndarray
    infection_reduction_pct: list   # None where the baseline is ~0
    qoi_mfe: np.ndarray
    qoi_baseline: np.ndarray
    qoi_ratio: list
    theta_mfe: float
    theta_baseline: float
    theta_reduction_pct: float | None


def _reduction(new, old):
    return None if abs(old) < DIVISION_GUARD else 100.0 * (1.0 - new / old)


def _ratio(new, old):
    return None if abs(old) < DIVISION_GUARD else new / old


def summary_metrics(mfe: EquilibriumSolution, baseline: BaselineResult, config: ScenarioConfig) -> SummaryMetrics:
    """Terminal-time comparison of the equilibrium against the baseline."""
    mi = mfe.trajectory.final[:, I]
    bi = baseline.trajectory.final[:, I]
    qm = qoi_path(mfe.policy.alpha, mfe.aggregates, config)[-1]
    qb = baseline.qoi[-1]
    tm = float(mfe.aggregates.theta[-1])
    tb = float(baseline.aggregates.theta[-1])
    return SummaryMetrics(
        infected_mfe=mi, infected_baseline=bi,
        infection_reduction_pct=[_reduction(a, b) for a, b in zip(mi, bi)],
        qoi_mfe=qm, qoi_baseline=qb,
        qoi_ratio=[_ratio(a, b) for a, b in zip(qm, qb)],
        theta_mfe=tm, theta_baseline=tb, theta_reduction_pct=_reduction(tm, tb),
    )
