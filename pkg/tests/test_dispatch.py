import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridopt.dispatch import (InsufficientCapacityError, count_marginal, economic_dispatch_lp,
                              merit_order)
from gridopt.netmodel import CaseError, Bus, Generator, Load, Network, parse_case


def copperplate(costs, p_max, demand, p_min=None):
    p_min = p_min or [0.0] * len(costs)
    return Network(
        100.0, (Bus(1, True),),
        generators=tuple(Generator(1, c, hi, lo) for c, hi, lo in zip(costs, p_max, p_min)),
        loads=(Load(1, demand),) if demand else (),
    )


def test_two_generator_merit_order():
    mo = merit_order(copperplate([10, 20], [100, 100], 150))
    np.testing.assert_array_equal(mo.dispatch, [100, 50])
    assert mo.smp == 20
    assert mo.marginal_gen == 1
    assert mo.total_cost == 2000
    assert mo.breakpoints == [100, 200]
    assert mo.curve_points == [(0, 10), (100, 10), (100, 20), (200, 20)]
    assert mo.flags == []


def test_zero_demand_is_degenerate():
    mo = merit_order(copperplate([20, 10], [100, 100], 0))
    np.testing.assert_array_equal(mo.dispatch, 0)
    assert mo.total_cost == 0
    assert mo.smp == 10
    assert "degenerate" in mo.flags


def test_demand_above_capacity():
    with pytest.raises(InsufficientCapacityError):
        merit_order(copperplate([10, 20], [100, 100], 250))


def test_breakpoint_demand_reports_cheaper_side():
    mo = merit_order(copperplate([10, 20], [100, 100], 100))
    assert mo.smp == 10 and mo.marginal_gen == 0
    assert mo.flags == ["breakpoint_degenerate"]


def test_merit_order_needs_zero_p_min():
    with pytest.raises(CaseError, match="p_min"):
        merit_order(copperplate([10, 20], [100, 100], 150, p_min=[10, 0]))


def test_equal_costs_break_ties_by_index():
    mo = merit_order(copperplate([15, 15, 15], [50, 50, 50], 70))
    np.testing.assert_array_equal(mo.dispatch, [50, 20, 0])
    assert mo.marginal_gen == 1


def test_lp_matches_merit_order_two_generators():
    net = copperplate([10, 20], [100, 100], 150)
    r = economic_dispatch_lp(net)
    np.testing.assert_allclose(r.p_g_mw, [100, 50], atol=1e-9)
    assert r.objective_per_h == pytest.approx(2000, abs=1e-9)
    assert r.energy_price == pytest.approx(20)
    np.testing.assert_allclose(r.lmp, 20)
    assert count_marginal(net, r) == 1


def test_lp_all_costs_equal():
    net = copperplate([12, 12, 12], [60, 60, 60], 100)
    assert economic_dispatch_lp(net).objective_per_h == pytest.approx(merit_order(net).total_cost)


def test_lp_honors_p_min():
    r = economic_dispatch_lp(copperplate([10, 20], [100, 100], 120, p_min=[0, 40]))
    np.testing.assert_allclose(r.p_g_mw, [80, 40], atol=1e-9)
    assert r.energy_price == pytest.approx(10)


def test_lp_infeasible():
    assert economic_dispatch_lp(copperplate([10, 20], [100, 100], 250)).status == "infeasible"


def test_curve_csv():
    mo = merit_order(copperplate([10, 20], [100, 100], 150))
    assert mo.curve_csv() == "cum_capacity_mw,price\n0,10\n100,10\n100,20\n200,20\n"


def random_copperplate(rng):
    g = int(rng.integers(1, 9))
    costs = rng.choice(np.arange(1.0, 100.0, 0.5), size=g, replace=False)
    p_max = rng.uniform(10, 300, g)
    demand = float(rng.uniform(0.01, 0.99) * p_max.sum())
    return copperplate(list(costs), list(p_max), demand)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_merit_order_invariants(seed):
    net = random_copperplate(np.random.default_rng(seed))
    mo = merit_order(net)
    assert mo.dispatch.sum() == pytest.approx(mo.demand, rel=1e-12)
    for g, p in zip(net.generators, mo.dispatch):
        assert 0 <= p <= g.p_max
        if g.cost < mo.smp:
            assert p == g.p_max
        if g.cost > mo.smp:
            assert p == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_smp_invariant_to_generator_permutation(seed):
    rng = np.random.default_rng(seed)
    net = random_copperplate(rng)
    perm = rng.permutation(len(net.generators))
    shuffled = replace(net, generators=tuple(net.generators[k] for k in perm))
    assert merit_order(shuffled).smp == merit_order(net).smp
    assert economic_dispatch_lp(shuffled).energy_price == pytest.approx(economic_dispatch_lp(net).energy_price)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1e-3, 0.5, 7.0, 1000.0]))
def test_objective_scaling(seed, k):
    net = random_copperplate(np.random.default_rng(seed))
    base = economic_dispatch_lp(net)
    scaled = economic_dispatch_lp(net, obj_scale=k)
    np.testing.assert_array_equal(scaled.p_g, base.p_g)
    assert scaled.objective_per_h == base.objective_per_h
    assert scaled.energy_price == pytest.approx(base.energy_price, rel=1e-12)


def test_ed_ignores_network():
    net = parse_case(json.dumps({
        "base_mva": 100, "buses": [{"id": 1, "slack": True}, {"id": 2}],
        "lines": [{"from": 1, "to": 2, "x": 0.1, "rating_mva": 10}],
        "generators": [{"bus": 1, "cost": 10, "p_max": 200}, {"bus": 2, "cost": 30, "p_max": 200}],
        "loads": [{"bus": 2, "p": 100}],
    }))
    r = economic_dispatch_lp(net)
    np.testing.assert_allclose(r.p_g_mw, [100, 0], atol=1e-9)
