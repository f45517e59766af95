from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given

from seli_mfg.model import NodeClassParams
from seli_mfg.oracles import brute_force_expected_qoi, enumerated_link_stats
from seli_mfg.qoi import (
    claimed_convexity_bound, convexity_margin, expected_qoi_coefficients, misinformation_qoi,
    reported_qoi, running_cost, target, true_info_qoi,
)

from strategies import aggregates, node_classes

K3 = NodeClassParams(degree=3, lam=0.2)


def test_misinformation_qoi_closed_form():
    assert misinformation_qoi(K3, 0.0, 0.0) == pytest.approx(-0.2)
    c = NodeClassParams(degree=7, lam=0.0)
    assert misinformation_qoi(c, 0.3, 0.4) == pytest.approx(-7 * 0.3)
    _, _, _, fm = enumerated_link_stats(K3, 0.2, 0.5)
    assert misinformation_qoi(K3, 0.2, 0.5) == pytest.approx(fm, abs=1e-12)


def test_true_info_qoi():
    assert true_info_qoi(K3, 0.0) == 1
    assert true_info_qoi(NodeClassParams(degree=10), 1.0) == 11
    assert true_info_qoi(NodeClassParams(degree=20), 0.5) == 11


def test_coefficient_limits():
    flat = NodeClassParams(degree=5, beta_E=1, gamma_E=0, beta_L=1, gamma_L=0, delta=0)
    assert expected_qoi_coefficients(flat, 0.2, 0.3).a1 == pytest.approx(0, abs=1e-12)
    reject = NodeClassParams(degree=5, beta_E=0, gamma_E=1, beta_L=0, gamma_L=1, delta=0.3)
    co = expected_qoi_coefficients(reject, 0.2, 0.3)
    assert co.a2 == 0
    from seli_mfg.dynamics import clean_probability
    L = clean_probability(reject, 0.2)
    s = 7
    assert co.a1 == pytest.approx(L * (true_info_qoi(reject, 0.3) + s) + misinformation_qoi(reject, 0.2, 0.3)
                                  + s * (1 - L))


def test_two_point_identification_top_class(reference):
    cls = reference.network.classes[3]
    co = expected_qoi_coefficients(cls, 0.1, 0.6)
    e0 = brute_force_expected_qoi(cls, 0.1, 0.6, 0.0, scaled=True)
    e1 = brute_force_expected_qoi(cls, 0.1, 0.6, 1.0, scaled=True)
    assert co.a2 == pytest.approx(e0, abs=1e-9)
    assert co.a1 == pytest.approx(e1 - e0, abs=1e-9)


@given(node_classes(max_degree=8), aggregates())
def test_affine_identity_against_enumeration(cls, agg):
    theta, eta = agg
    for scaled in (False, True):
        co = expected_qoi_coefficients(cls, theta, eta, scaled=scaled)
        for a in (0.0, 0.3, 1.0):
            assert co.value(a) == pytest.approx(brute_force_expected_qoi(cls, theta, eta, a, scaled), abs=1e-9)


@given(node_classes(), aggregates())
def test_misinformation_never_beats_true_information(cls, agg):
    theta, eta = agg
    from seli_mfg.dynamics import clean_probability
    L = clean_probability(cls, theta)
    assert misinformation_qoi(cls, theta, eta) <= (1 - L) * (cls.degree * eta + 1) + 1e-9


@given(node_classes(), aggregates())
def test_scaling_shifts_immediate_acceptance_by_s(cls, agg):
    # accepting at once adds exactly S_k; doubting adds S_k only on the accepted-later branches
    theta, eta = agg
    on = expected_qoi_coefficients(cls, theta, eta, scaled=True)
    off = expected_qoi_coefficients(cls, theta, eta, scaled=False)
    assert on.value(1.0) - off.value(1.0) == pytest.approx(cls.degree + 2, abs=1e-9)
    assert on.a2 - off.a2 <= (cls.degree + 2) * max(cls.beta_E, cls.beta_L) + 1e-9


def test_scaling_does_not_preserve_the_argmin():
    from seli_mfg.hjb import best_response
    cls = NodeClassParams(degree=10, delta=0.4, beta_E=0.3, gamma_E=0.7, beta_L=0.6, gamma_L=0.4,
                          target_qoi=10.0)
    du = np.zeros(4)
    unscaled = best_response(du, replace(cls, scaling_enabled=False), 0.3, 0.3)
    shifted = best_response(du, replace(cls, scale_target=True), 0.3, 0.3)
    assert (unscaled, shifted) == (0.0, 1.0)


def test_target_shift_is_opt_in():
    c = NodeClassParams(degree=10, target_qoi=10.0)
    assert target(c) == 10
    assert target(replace(c, scale_target=True)) == 22
    assert target(replace(c, scale_target=True, scaling_enabled=False)) == 10


def test_running_costs(reference):
    c15 = reference.network.classes[2]
    assert running_cost("I", 0.3, c15, 0.1, 0.5) == 20
    assert running_cost("E", 0.3, c15, 0.1, 0.5) == 0
    assert running_cost("L", 0.3, c15, 0.1, 0.5) == 0
    co = expected_qoi_coefficients(c15, 0.1, 0.5)
    hit = replace(c15, target_qoi=float(co.value(0.4)))
    assert running_cost("S", 0.4, hit, 0.1, 0.5) == pytest.approx(0, abs=1e-20)
    with pytest.raises(ValueError):
        running_cost("X", 0.3, c15, 0.1, 0.5)


@given(node_classes(), aggregates())
def test_susceptible_cost_is_convex_quadratic(cls, agg):
    theta, eta = agg
    a1 = expected_qoi_coefficients(cls, theta, eta).a1
    f = [running_cost(0, a, cls, theta, eta) for a in (0.0, 0.5, 1.0)]
    assert f[0] + f[2] - 2 * f[1] == pytest.approx(0.5 * a1 ** 2, rel=1e-7, abs=1e-7)


def test_reported_qoi_is_unscaled(reference):
    cls = reference.network.classes[2]
    assert reported_qoi(cls, 1.0, 0.0, 1.0) == pytest.approx(15.6)


def test_convexity_bound_values(reference):
    assert claimed_convexity_bound(reference.network.classes[0]) == pytest.approx(0.5)
    c = NodeClassParams(degree=4, beta_L=1.0, gamma_L=0.0, delta=0.0)
    assert claimed_convexity_bound(c) == 0
    assert convexity_margin(reference.network.classes[0], 0.0, 1.0) > 0
