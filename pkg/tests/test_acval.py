import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridopt.acval import (VoltageProfile, complex_block, dc_ac_gap, evaluate_ac, linearization_gap,
                           rating_to_current_limit, sine_flow, sine_samples_csv, unblock,
                           validation_report)
from gridopt.cases import RandomCaseConfig, random_network
from gridopt.dcopf import solve_dcopf_angle, solve_dcopf_ptdf
from gridopt.netmodel import parse_case, to_per_unit
from gridopt.sysmatrices import build_b_line


def two_bus(x=0.1, r=0.0, b_sh=0.0, rating=None):
    line = {"from": 1, "to": 2, "r": r, "x": x, "b_sh": b_sh}
    if rating:
        line["rating_mva"] = rating
    return to_per_unit(parse_case(json.dumps({
        "base_mva": 100, "buses": [{"id": 1, "slack": True}, {"id": 2}], "lines": [line],
    })))


def test_two_bus_hand_values():
    ev = evaluate_ac(two_bus(), VoltageProfile.polar([1, 1], [0, -0.1]))
    # I = (V1 - V2) / (j0.1) with V2 = cos 0.1 - j sin 0.1
    i = (1 - complex(math.cos(0.1), -math.sin(0.1))) / 0.1j
    assert ev.i_fwd[0] == pytest.approx(i, abs=1e-12)
    assert ev.i_fwd[0] == pytest.approx(0.9983 - 0.0500j, abs=1e-4)
    assert ev.s_fwd[0] == pytest.approx(0.9983 + 0.0500j, abs=1e-4)
    assert ev.losses[0] == pytest.approx(1j * abs(i) ** 2 * 0.1, abs=1e-12)
    assert ev.losses[0].imag == pytest.approx(0.0999, abs=1e-4)
    assert ev.losses[0].real == pytest.approx(0, abs=1e-12)


def test_flat_profile_is_quiet():
    net = to_per_unit(random_network(np.random.default_rng(5)))
    ev = evaluate_ac(net, VoltageProfile(np.ones(len(net.buses))))
    for arr in (ev.s_bus, ev.i_fwd, ev.i_rev, ev.losses):
        np.testing.assert_allclose(arr, 0, atol=1e-12)


def test_profile_mismatch():
    with pytest.raises(ValueError):
        evaluate_ac(two_bus(), VoltageProfile(np.ones(3)))


def test_violations_tagged_by_kind():
    ev = evaluate_ac(two_bus(rating=50), VoltageProfile.polar([1.0, 1.0], [0, -0.1]))
    kinds = {(v.end, v.kind) for v in ev.violations}
    assert kinds == {("from", "apparent"), ("from", "current"), ("to", "apparent"), ("to", "current")}


def test_sine_flow_examples():
    net = two_bus()
    assert sine_flow(net, [0.2, 0.2])[0] == 0
    assert sine_flow(net, [0.1, 0.0])[0] == pytest.approx(0.99833, abs=1e-5)
    ev = evaluate_ac(net, VoltageProfile.flat_magnitude([0.1, 0.0]))
    assert ev.s_fwd[0].real == pytest.approx(sine_flow(net, [0.1, 0.0])[0], abs=1e-10)


def test_linearization_gap_examples():
    row = linearization_gap([math.pi / 6])[0]
    assert round(row.sin_delta, 4) == 0.5 and round(row.delta, 4) == 0.5236
    assert row.abs_error == pytest.approx(0.0236, abs=1e-4)
    assert row.rel_error == pytest.approx(0.0451, abs=1e-4)
    assert not row.beyond_limit
    zero = linearization_gap([0.0])[0]
    assert (zero.sin_delta, zero.abs_error) == (0.0, 0.0) and math.isnan(zero.rel_error)
    assert linearization_gap([0.6])[0].beyond_limit


def test_sine_samples():
    lines = sine_samples_csv().splitlines()
    assert lines[0] == "delta_rad,sin_delta"
    assert lines[1] == "-1.5708,-1"
    assert len(lines) == 1 + 315


def test_dc_ac_gap(net3_congested):
    r = solve_dcopf_angle(net3_congested)
    gap = dc_ac_gap(net3_congested, r)
    np.testing.assert_allclose(gap.dc_flow, r.flows)
    np.testing.assert_allclose(gap.gap, np.sin(gap.dc_flow) - gap.dc_flow, atol=1e-12)  # x = 1
    assert gap.hidden_overloads == []
    with pytest.raises(ValueError):
        dc_ac_gap(net3_congested, solve_dcopf_ptdf(net3_congested))


def test_dc_ac_gap_single_line():
    net = two_bus()
    r = solve_dcopf_angle(to_per_unit(parse_case(json.dumps({
        "base_mva": 100, "buses": [{"id": 1, "slack": True}, {"id": 2}],
        "lines": [{"from": 1, "to": 2, "x": 0.1}],
        "generators": [{"bus": 1, "cost": 1, "p_max": 500}], "loads": [{"bus": 2, "p": 100}],
    }))))
    gap = dc_ac_gap(net, r)
    assert gap.dc_flow[0] == pytest.approx(1.0)
    assert gap.sine_flow[0] == pytest.approx(0.99833, abs=1e-5)
    assert gap.max_gap == pytest.approx(0.00167, abs=1e-5)


def test_zero_dispatch_zero_gap():
    net = to_per_unit(random_network(np.random.default_rng(2)))
    r = solve_dcopf_angle(net)
    r.theta = np.zeros(len(net.buses))
    assert dc_ac_gap(net, r).max_gap == 0


def test_complex_block_examples():
    z1, z2 = 1 + 2j, 3 + 4j
    np.testing.assert_array_equal(complex_block(np.array([[z1]])) @ complex_block(np.array([z2])), [-5, 10])
    np.testing.assert_array_equal(complex_block(np.eye(3, dtype=complex)), np.eye(6))
    v = np.array([1 + 1j, -2j])
    np.testing.assert_array_equal(unblock(complex_block(v)), v)


def test_rating_to_current_limit():
    assert rating_to_current_limit(1.0) == 1.0
    assert rating_to_current_limit(0.5) == 0.5
    assert rating_to_current_limit(100 / 100) == 1.0
    with pytest.raises(ValueError):
        rating_to_current_limit(0)


def random_ac_case(rng, lossless=False, shuntless=False):
    net = random_network(rng, RandomCaseConfig(min_buses=2 + 1, max_buses=8))
    from dataclasses import replace
    lines = tuple(replace(ln,
                          r=0.0 if lossless else float(rng.uniform(0, 0.1)),
                          b_sh=0.0 if shuntless else float(rng.uniform(0, 0.3)))
                  for ln in net.lines)
    net = to_per_unit(replace(net, lines=lines))
    n = len(net.buses)
    v = VoltageProfile.polar(rng.uniform(0.9, 1.1, n), rng.uniform(-0.5, 0.5, n))
    return net, v


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans(), st.booleans())
def test_ac_identities(seed, lossless, shuntless):
    net, v = random_ac_case(np.random.default_rng(seed), lossless, shuntless)
    ev = evaluate_ac(net, v)
    assert abs(ev.s_bus.sum() - ev.losses.sum()) <= 1e-9
    assert np.all(ev.losses.real >= -1e-10)
    if lossless:
        assert np.max(np.abs(ev.losses.real)) <= 1e-10
    if shuntless:
        assert np.max(np.abs(ev.i_fwd + ev.i_rev)) <= 1e-12
    elif np.any([ln.b_sh > 1e-3 for ln in net.lines]):
        assert np.max(np.abs(ev.i_fwd + ev.i_rev)) > 1e-6


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_taylor_bound(seed):
    rng = np.random.default_rng(seed)
    net = to_per_unit(random_network(rng))
    theta = np.zeros(len(net.buses))
    # walk bus angles so every line difference stays within 0.5 rad
    theta = rng.uniform(-0.25, 0.25, len(net.buses))
    idx = net.bus_index
    dtheta = np.array([theta[idx[ln.from_bus]] - theta[idx[ln.to_bus]] for ln in net.lines])
    gap = sine_flow(net, theta) - build_b_line(net).data @ theta
    xs = np.array([ln.x for ln in net.lines])
    assert np.all(np.abs(gap) <= np.abs(dtheta) ** 3 / (6 * xs) + 1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_complex_block_matches_complex_product(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    np.testing.assert_allclose(complex_block(a) @ complex_block(v), complex_block(a @ v), atol=1e-12)


def test_validation_report(net5):
    r = solve_dcopf_angle(net5)
    rep = validation_report(net5, r.theta, r.slack)
    assert [ln["line"] for ln in rep["lines"]] == list(net5.line_labels())
    assert rep["max_gap_mw"] == pytest.approx(max(abs(ln["gap_mw"]) for ln in rep["lines"]))
    assert all(ln["loss_mw"] == pytest.approx(0, abs=1e-9) for ln in rep["lines"])
