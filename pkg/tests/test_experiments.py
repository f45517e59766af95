import numpy as np
import pytest

from seli_mfg.errors import CalibrationFailed, InvalidConfig
from seli_mfg.experiments import calibrate_nu, run_sweep
from seli_mfg.model import reference_scenario
from seli_mfg.solver import baseline_evaluation, qoi_path, solve_mfe


def test_nu_self_consistency():
    cfg = reference_scenario(nu=0.5, n_steps=300)
    targets = baseline_evaluation(cfg).trajectory.final[:, 3]
    res = calibrate_nu(cfg, targets)
    assert res.value == pytest.approx(0.5, abs=1e-3)
    assert np.max(np.abs(res.errors)) < 1e-5


def test_unreachable_targets_push_nu_down_and_fail():
    cfg = reference_scenario(n_steps=300)
    with pytest.raises(CalibrationFailed) as exc:
        calibrate_nu(cfg, [0.99, 0.999, 0.999, 0.999])
    assert exc.value.value < 0.01


def test_reference_targets_calibrate_well(ctx):
    res = ctx.nu_calibration
    assert 0.3 < res.value < 0.7
    assert np.max(np.abs(res.errors)) <= 0.05


def test_bad_targets_rejected(reference):
    with pytest.raises(InvalidConfig):
        calibrate_nu(reference, [0.5, 0.5])
    with pytest.raises(InvalidConfig):
        calibrate_nu(reference, [0.5, 1.0, 0.5, 0.5])


def test_single_value_sweep_equals_plain_solve(tmp_path):
    cfg = reference_scenario(n_steps=200)
    (pt,) = run_sweep(cfg, "delta", 3, [0.3], out_dir=tmp_path)
    sol = solve_mfe(cfg)
    assert pt.theta_at_T == sol.aggregates.theta[-1]
    np.testing.assert_array_equal(pt.alpha, sol.policy.alpha)
    np.testing.assert_array_equal(pt.qoi_at_T, qoi_path(sol.policy.alpha, sol.aggregates, cfg)[-1])
    header = (tmp_path / "sweep_delta.csv").read_text().splitlines()[0]
    assert header.startswith("value,converged,iterations,theta_at_T,qoi_at_T_k1_i0")


def test_beta_sweep_rederives_gamma():
    cfg = reference_scenario(n_steps=100, max_iterations=1)
    (pt,) = run_sweep(cfg, "beta_E", 3, [0.5])
    assert not pt.converged  # one iteration is never enough; the point is still reported
    with pytest.raises(InvalidConfig):
        run_sweep(cfg, "nu", 3, [0.5])


def test_sweeps_are_monotone(ctx):
    th = [p.theta_at_T for p in ctx.delta_sweep]
    assert th == sorted(th)
    th = [p.theta_at_T for p in ctx.beta_sweep]
    assert th == sorted(th)
