from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from seli_mfg.dynamics import AggregatePath
from seli_mfg.errors import DegenerateQuadratic, GridMismatch, IntegrationDiverged
from seli_mfg.hjb import (
    best_response, hamiltonian, integrate_backward, linear_best_response, s_hamiltonian_at,
)
from seli_mfg.model import NodeClassParams, TimeGrid, single_class_scenario
from seli_mfg.oracles import grid_best_response
from seli_mfg.qoi import expected_qoi_coefficients, running_cost

from strategies import aggregates, node_classes

BASE = NodeClassParams(degree=10, delta=0.4, beta_E=0.3, gamma_E=0.7, beta_L=0.6, gamma_L=0.4,
                       scaling_enabled=False)


def _aimed(cls, theta, eta, offset):
    """Class whose target sits ``offset`` slopes above the doubting QoI."""
    co = expected_qoi_coefficients(cls, theta, eta)
    return replace(cls, target_qoi=float(co.a2 + offset * co.a1))


def test_boundary_stationary_point():
    cls = _aimed(BASE, 0.1, 0.5, 0.0)
    assert best_response(np.zeros(4), cls, 0.1, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_interior_stationary_point():
    cls = _aimed(BASE, 0.1, 0.5, 0.3)
    assert best_response(np.zeros(4), cls, 0.1, 0.5) == pytest.approx(0.3, abs=1e-12)


@given(node_classes(), aggregates(), st.lists(st.floats(0, 10), min_size=4, max_size=4))
def test_closed_form_matches_grid_search(cls, agg, u):
    theta, eta = agg
    u = np.array(u)
    du = u - u[0]
    try:
        a = best_response(du, cls, theta, eta)
    except DegenerateQuadratic:
        a = linear_best_response(du, cls, theta)
    ref, _ = grid_best_response(du, cls, theta, eta, n_points=20_001)
    assert abs(a - ref) <= 1e-3 or (
        s_hamiltonian_at(a, du, cls, theta, eta) <= s_hamiltonian_at(ref, du, cls, theta, eta) + 1e-9)


def test_degenerate_slope_raises_and_falls_back():
    flat = NodeClassParams(degree=4, beta_E=1, gamma_E=0, beta_L=1, gamma_L=0, delta=0, scaling_enabled=False)
    with pytest.raises(DegenerateQuadratic):
        best_response(np.zeros(4), flat, 0.1, 0.5)
    value, alpha = hamiltonian("S", np.zeros(4), flat, 0.1, 0.5)
    assert alpha == 0.0


def test_linear_best_response_rules():
    c = NodeClassParams(degree=3, lam=0.2)
    assert linear_best_response(np.array([0, 0, 0, 50.0]), c, 0.1) == 0
    assert linear_best_response(np.array([0, 50.0, 50.0, 0]), c, 0.1) == 1
    assert linear_best_response(np.zeros(4), c, 0.1) == 0


def test_hamiltonian_fixed_rate_states():
    c = NodeClassParams(degree=3, delta=0.3, beta_E=0.2, gamma_E=0.8, nu=0.7, infection_cost=4.0)
    u = np.array([1.0, 2.0, 3.0, 5.0])
    h_l, a = hamiltonian("L", u - u[2], c, 0.1, 0.5)
    assert a is None and h_l == pytest.approx(0.7 * (1 - 3))
    h_i, _ = hamiltonian("I", u - u[3], c, 0.1, 0.5)
    assert h_i == pytest.approx(4 + 0.7 * (1 - 5))
    h_e, _ = hamiltonian("E", u - u[1], c, 0.1, 0.5)
    assert h_e == pytest.approx(0.7 * (0.2 * (5 - 2) + 0.8 * (1 - 2)))


def test_hamiltonian_with_flat_values_is_the_running_cost():
    c = NodeClassParams(degree=6, delta=0.2)
    value, alpha = hamiltonian("S", np.zeros(4), c, 0.05, 0.7)
    assert value == pytest.approx(running_cost("S", alpha, c, 0.05, 0.7))


def _frozen(grid, theta, eta):
    n = grid.n_steps + 1
    return AggregatePath(np.full(n, theta), np.full(n, eta))


def test_zero_cost_game_has_zero_value():
    cfg = single_class_scenario(5, infection_cost=0.0)
    values, _ = integrate_backward(_frozen(cfg.grid, 0.2, 0.5), cfg.network, cfg.grid, include_qoi=False)
    assert np.all(values.u == 0)


def test_infected_value_without_recovery():
    cfg = single_class_scenario(5, infection_cost=3.0, nu=0.0)
    values, _ = integrate_backward(_frozen(cfg.grid, 0.2, 0.5), cfg.network, cfg.grid)
    np.testing.assert_allclose(values.u[:, 0, 3], 3.0 * (0.9 - cfg.grid.times), atol=1e-12)
    assert np.all(values.u[-1] == 0)


def test_values_nonnegative_and_terminal(ctx):
    u = ctx.mfe.values.u
    assert np.all(u[-1] == 0)
    assert u.min() >= -1e-9


def test_equilibrium_policy_is_pointwise_optimal(ctx):
    sol, cfg = ctx.mfe, ctx.config
    cls = cfg.network.arrays
    grid = np.linspace(0, 1, 101)
    for j in range(0, cfg.grid.n_steps + 1, 30):
        th, et = sol.aggregates.theta[j], sol.aggregates.eta[j]
        u = sol.values.u[j]
        du = u - u[:, :1]
        h_star, a_star = hamiltonian("S", du, cls, th, et)
        for a in grid:
            assert np.all(h_star <= s_hamiltonian_at(a, du, cls, th, et) + 1e-9)


def test_low_degree_class_never_accepts(ctx):
    assert np.all(ctx.mfe.policy.alpha[:, 0] == 0)


def test_high_degree_classes_start_sceptical_then_open_up(ctx):
    alpha = ctx.mfe.policy.alpha
    for c in (1, 2, 3):
        assert alpha[0, c] == 0
        onset = np.argmax(alpha[:, c] > 0)
        assert onset > 0
        assert np.all(np.diff(alpha[onset:, c]) >= -1e-6)


def test_backward_sweep_checks_inputs(reference):
    bad = AggregatePath(np.zeros(10), np.zeros(10))
    with pytest.raises(GridMismatch):
        integrate_backward(bad, reference.network, reference.grid)
    g = TimeGrid(0.9, 10)
    nan = AggregatePath(np.full(11, np.nan), np.full(11, 0.5))
    with pytest.raises(IntegrationDiverged):
        integrate_backward(nan, reference.network, g)
