import numpy as np
import pytest
from hypothesis import given, strategies as st

from seli_mfg.dynamics import (
    clean_probability, infection_pressure, initial_state, integrate_forward, integrate_reference_player,
    kolmogorov_rhs, link_infection_probability, link_susceptible_probability,
)
from seli_mfg.errors import GridMismatch, IntegrationDiverged
from seli_mfg.model import NodeClassParams, TimeGrid, single_class_scenario

from strategies import networks, node_classes, unit


def test_link_probabilities(reference):
    net = reference.network
    only_low = np.zeros((4, 4))
    only_low[:, 0] = 1.0
    only_low[0] = [0, 0, 0, 1]
    assert link_infection_probability(only_low, net) == pytest.approx(0.4 / 8.4, abs=1e-12)
    assert link_infection_probability(initial_state(4), net) == 0.0
    assert link_susceptible_probability(initial_state(4), net) == pytest.approx(1.0)
    half = np.full((4, 4), 0.0)
    half[:, 0] = half[:, 3] = 0.5
    assert link_susceptible_probability(half, net) == pytest.approx(0.5)
    single = single_class_scenario(1).network
    assert link_infection_probability(np.array([[0, 0, 0, 1.0]]), single) == 1.0


def test_rates():
    c = NodeClassParams(degree=10, lam=0.2)
    assert infection_pressure(c, 0.0) == pytest.approx(0.2)
    assert infection_pressure(c, 0.05) == pytest.approx(0.7)
    assert infection_pressure(NodeClassParams(degree=10, lam=0.0), 0.0) == 0.0
    assert clean_probability(c, 0.0) == pytest.approx(0.8)
    assert clean_probability(c, 1.0) == 0.0
    assert clean_probability(c, 0.05) == pytest.approx(0.8 * np.exp(10 * np.log(0.95)), rel=1e-12)
    assert clean_probability(c, 0.05) == pytest.approx(0.479, abs=5e-4)


def test_rhs_examples():
    c = NodeClassParams(degree=1, lam=0.2)
    d = kolmogorov_rhs(np.array([1.0, 0, 0, 0]), 1.0, 0.0, c)
    np.testing.assert_allclose(d, [-0.2, 0, 0, 0.2], atol=1e-15)
    c = NodeClassParams(degree=1, lam=0.2, delta=0.4, beta_E=0.5, gamma_E=0.5, nu=0.5)
    d = kolmogorov_rhs(np.array([0.5, 0.2, 0.2, 0.1]), 0.0, 0.1, c)
    # R = 0.3, L = 0.72
    assert d[1] == pytest.approx(0.3 * 0.5 - 0.6 * 0.2, abs=1e-15)
    assert d[2] == pytest.approx(0.72 * 0.5 - 0.6 * 0.2, abs=1e-15)


@given(node_classes(), st.lists(unit, min_size=4, max_size=4), unit, unit)
def test_rhs_conserves_mass(cls, raw, alpha, theta):
    state = np.array(raw)
    state = state / state.sum() if state.sum() > 0 else initial_state(1)[0]
    assert abs(kolmogorov_rhs(state, alpha, theta, cls).sum()) <= 1e-12


@given(networks(), st.integers(0, 2**32 - 1))
def test_forward_sweep_stays_on_simplex(net, seed):
    grid = TimeGrid(0.5, 300)
    alpha = np.random.default_rng(seed).uniform(0, 1, (301, len(net)))
    traj, agg = integrate_forward(alpha, net, grid)
    assert np.all(np.abs(traj.m.sum(axis=2) - 1) <= 1e-9)
    assert traj.m.min() >= -1e-9
    np.testing.assert_array_equal(traj.m[0], initial_state(len(net)))
    assert np.all((agg.theta >= 0) & (agg.theta <= 1) & (agg.theta + agg.eta <= 1 + 1e-9))


def test_no_attacker_means_no_infection(reference):
    net = reference.network.with_all(lam=0.0)
    traj, agg = integrate_forward(np.full((901, 4), 0.7), net, reference.grid)
    assert np.all(traj.infected == 0) and np.all(agg.theta == 0)


def test_always_accept_population_saturates(reference):
    _, agg = integrate_forward(np.ones((901, 4)), reference.network, reference.grid)
    assert 0.85 < agg.theta[-1] < 0.99
    assert np.all(agg.theta[1:] > 0)


def test_self_convergence_single_class():
    cfg = single_class_scenario(1, lam=0.2, nu=0.5)
    coarse, _ = integrate_forward(np.ones((901, 1)), cfg.network, cfg.grid)
    fine_grid = TimeGrid(0.9, 90_000)
    fine, _ = integrate_forward(np.ones((90_001, 1)), cfg.network, fine_grid)
    assert np.max(np.abs(fine.m[::100] - coarse.m)) < 1e-4


def test_reference_player_matches_population_exactly(reference, rng):
    alpha = rng.uniform(0, 1, (901, 4))
    traj, _ = integrate_forward(alpha, reference.network, reference.grid)
    for c in range(4):
        x = integrate_reference_player(alpha[:, c], alpha, reference.network, c, reference.grid)
        np.testing.assert_array_equal(x, traj.m[:, c])


def test_reference_player_deviation_differs(reference):
    alpha = np.ones((901, 4))
    x = integrate_reference_player(np.zeros(901), alpha, reference.network, 2, reference.grid)
    traj, _ = integrate_forward(alpha, reference.network, reference.grid)
    assert x[-1, 3] < traj.m[-1, 2, 3]


def test_policy_shape_checked(reference):
    with pytest.raises(GridMismatch):
        integrate_forward(np.ones((900, 4)), reference.network, reference.grid)


def test_unstable_step_is_reported():
    cfg = single_class_scenario(20, lam=1.0, nu=2.0, delta=0.0)
    with pytest.raises(IntegrationDiverged):
        integrate_forward(np.ones((3, 1)), cfg.network, TimeGrid(0.9, 2))
