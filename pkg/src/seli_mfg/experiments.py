"""Parameter calibration and sweeps over a single class parameter."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import CalibrationFailed, InvalidConfig, NotConverged
from .model import I, ScenarioConfig, validate
from .outputs import write_csv
from .solver import baseline_evaluation, qoi_path, solve_mfe

log = logging.getLogger(__name__)

NU_BOUNDS = (1e-6, 5.0)
NU_MAX_ERROR = 0.1
SWEEPABLE = ("beta_E", "delta")


@dataclass(frozen=True)
class CalibrationResult:
    value: float
    errors: np.ndarray   # achieved minus target, per class
    sse: float
    evaluations: int


def calibrate_nu(config: ScenarioConfig, targets, bounds=NU_BOUNDS, xatol: float = 1e-6,
                 max_error: float = NU_MAX_ERROR) -> CalibrationResult:
    """Shared recovery rate that best matches the baseline infected fractions at T.

    Bounded Brent search (golden section with parabolic steps). Raises
    CalibrationFailed, carrying the best value, when some class still misses
    its target by more than ``max_error``.
    """
    targets = np.asarray(targets, float)
    if targets.shape != (len(config.network),) or np.any((targets <= 0) | (targets >= 1)):
        raise InvalidConfig(f"need one target in (0, 1) per class, got {targets.tolist()}")

    def final_infected(nu):
        cfg = config.with_network(config.network.with_all(nu=float(nu)))
        return baseline_evaluation(cfg).trajectory.final[:, I]

    def sse(nu):
        return float(np.sum((final_infected(nu) - targets) ** 2))

    res = minimize_scalar(sse, bounds=bounds, method="bounded", options={"xatol": xatol})
    nu = float(res.x)
    errors = final_infected(nu) - targets
    out = CalibrationResult(nu, errors, float(np.sum(errors ** 2)), int(res.nfev))
    if np.max(np.abs(errors)) > max_error:
        raise CalibrationFailed(f"nu={nu:.4g} leaves errors {np.round(errors, 4).tolist()}", nu, errors)
    return out


def _set_param(config: ScenarioConfig, param: str, index: int, value: float) -> ScenarioConfig:
    if param not in SWEEPABLE:
        raise InvalidConfig(f"cannot sweep {param!r}; choose one of {', '.join(SWEEPABLE)}")
    changes = {param: float(value)}
    if param == "beta_E":
        changes["gamma_E"] = 1.0 - float(value)
    return validate(config.with_network(config.network.with_class(index, **changes)))


@dataclass(frozen=True)
class SweepPoint:
    value: float
    converged: bool
    iterations: int
    residual: float
    theta_at_T: float
    qoi_at_T: np.ndarray
    alpha_at_T: np.ndarray
    alpha: np.ndarray = field(repr=False)
    error: str = ""


def _solve_point(config, value, alpha0=None) -> SweepPoint:
    try:
        sol = solve_mfe(config, alpha0=alpha0)
        err = ""
    except NotConverged as exc:
        sol, err = exc.solution, str(exc)
        log.warning("sweep value %g: %s", value, err)
    q = qoi_path(sol.policy.alpha, sol.aggregates, config)[-1]
    return SweepPoint(float(value), sol.converged, sol.iterations_used, sol.final_residual,
                      float(sol.aggregates.theta[-1]), q, sol.policy.alpha[-1].copy(), sol.policy.alpha)


def run_sweep(config: ScenarioConfig, param: str, class_index: int, values, out_dir=None) -> list[SweepPoint]:
    """One equilibrium per value of ``param`` in class ``class_index``.

    A point that does not converge is kept with ``converged=False`` and its
    best iterate; the sweep carries on. With ``out_dir`` the table is also
    written to ``sweep_<param>.csv``.
    """
    points = [_solve_point(_set_param(config, param, class_index, v), v) for v in values]
    if out_dir is not None:
        write_sweep(Path(out_dir) / f"sweep_{param}.csv", points, config)
    return points


def write_sweep(path, points: list[SweepPoint], config: ScenarioConfig):
    labels = [f"k{c.degree}_i{c.type_id}" for c in config.network.classes]
    header = ["value", "converged", "iterations", "theta_at_T"]
    header += [f"qoi_at_T_{x}" for x in labels] + [f"alpha_at_T_{x}" for x in labels]
    rows = ([p.value, p.converged, p.iterations, p.theta_at_T, *p.qoi_at_T, *p.alpha_at_T] for p in points)
    return write_csv(path, header, rows)


def calibrate_kappa(config: ScenarioConfig, class_index: int, deltas, alpha_targets,
                    bounds=(0.25, 8.0), xatol: float = 0.01) -> CalibrationResult:
    """Delay price matching the terminal acceptance of one class across a delay sweep.

    Each evaluation solves one equilibrium per delay; the search is bounded Brent.
    """
    targets = np.asarray(alpha_targets, float)
    deltas = [float(d) for d in deltas]
    if len(deltas) != len(targets):
        raise InvalidConfig("deltas and alpha_targets differ in length")
    cache = {}

    def terminal_alpha(kappa):
        key = round(float(kappa), 12)
        if key not in cache:
            base = config.with_network(config.network.with_all(kappa=float(kappa)))
            pts = [_solve_point(_set_param(base, "delta", class_index, d), d) for d in deltas]
            cache[key] = np.array([p.alpha_at_T[class_index] for p in pts])
            log.info("kappa %.4f -> terminal alpha %s", kappa, np.round(cache[key], 4))
        return cache[key]

    def sse(kappa):
        return float(np.sum((terminal_alpha(kappa) - targets) ** 2))

    res = minimize_scalar(sse, bounds=bounds, method="bounded", options={"xatol": xatol})
    kappa = float(res.x)
    errors = terminal_alpha(kappa) - targets
    return CalibrationResult(kappa, errors, float(np.sum(errors ** 2)), len(cache))
