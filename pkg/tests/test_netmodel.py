import json
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from gridopt.cases import FIXTURES, load_fixture
from gridopt.netmodel import (CaseError, from_per_unit, parse_case, serialize_case,
                              to_per_unit, validate_network)

THREE_BUS = {
    "base_mva": 100,
    "buses": [{"id": 1, "slack": True}, {"id": 2}, {"id": 3}],
    "lines": [{"from": 1, "to": 2, "x": 1.0}, {"from": 1, "to": 3, "x": 1.0}, {"from": 2, "to": 3, "x": 1.0}],
    "generators": [{"bus": 1, "cost": 10, "p_max": 200}],
    "loads": [{"bus": 3, "p": 150}],
}


def doc(**changes):
    d = json.loads(json.dumps(THREE_BUS))
    d.update(changes)
    return json.dumps(d)


def test_parse_three_bus():
    net = parse_case(doc())
    assert len(net.buses) == 3 and len(net.lines) == 3
    assert net.slack == 1
    assert not net.normalized
    ln = net.lines[0]
    assert (ln.r, ln.b_sh, ln.rating) == (0.0, 0.0, None)
    assert net.generators[0].p_min == 0.0


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d["buses"][1].update(slack=True), "multiple slack buses"),
    (lambda d: d["lines"][0].update(x=0.0), "non-positive reactance"),
    (lambda d: d["lines"][0].pop("x"), "missing required field 'x'"),
    (lambda d: d["buses"].append({"id": 2}), "duplicate bus id 2"),
    (lambda d: d["loads"][0].update(bus=9), "unknown bus reference 9"),
    (lambda d: d["generators"][0].update(p_min=300), "p_min <= p_max"),
])
def test_parse_errors(mutate, message):
    d = json.loads(doc())
    mutate(d)
    with pytest.raises(CaseError, match=message):
        parse_case(json.dumps(d))


def test_syntax_error_reports_position():
    with pytest.raises(CaseError, match=r"line 1 column"):
        parse_case('{"base_mva": 100,,}')


def test_rejects_nan():
    with pytest.raises(CaseError):
        parse_case(doc().replace('"p": 150', '"p": NaN'))


def test_per_unit_values():
    d = json.loads(doc())
    d["lines"][0]["rating_mva"] = 100
    pu = to_per_unit(parse_case(json.dumps(d)))
    assert pu.normalized
    assert pu.loads[0].p == 1.5
    assert pu.generators[0].p_max == 2.0
    assert pu.lines[0].rating == 1.0
    assert pu.lines[0].x == 1.0  # impedances untouched
    assert pu.generators[0].cost == 10
    with pytest.raises(CaseError, match="already normalized"):
        to_per_unit(pu)


decimals = st.decimals(min_value=0, max_value=10_000, places=3, allow_nan=False, allow_infinity=False).map(float)


@given(st.lists(decimals, min_size=4, max_size=4), st.sampled_from([1.0, 100.0, 230.0, 1000.0, 37.5]))
def test_per_unit_round_trip_exact(vals, base):
    p, q, pmax, rating = vals
    net = parse_case(doc())
    net = replace(
        net,
        base_mva=base,
        loads=(replace(net.loads[0], p=p, q=q),),
        generators=(replace(net.generators[0], p_max=pmax),),
        lines=(replace(net.lines[0], rating=rating or None),) + net.lines[1:],
    )
    assert from_per_unit(to_per_unit(net)) == net


def test_serialize_round_trip():
    for name in FIXTURES:
        net = load_fixture(name)
        assert parse_case(serialize_case(net)) == net


def test_validate_clean_fixtures():
    for name in ("3bus", "3bus_congested", "5bus"):
        assert validate_network(load_fixture(name)) == []


def test_validate_flags_isolated_bus():
    d = json.loads(doc())
    d["buses"].append({"id": 4})
    diags = validate_network(parse_case(json.dumps(d)))
    assert [(g.code, g.detail) for g in diags] == [("disconnected", {"bus": 4})]


def test_validate_insufficient_capacity_is_warning():
    diags = validate_network(load_fixture("infeasible"))
    assert [g.code for g in diags] == []  # 100 MW capacity serves 80 MW; infeasibility comes from the line
    d = json.loads(doc())
    d["loads"][0]["p"] = 250
    diags = validate_network(parse_case(json.dumps(d)))
    assert [(g.code, g.severity) for g in diags] == [("insufficient_capacity", "warning")]


def test_validate_missing_slack():
    d = json.loads(doc())
    d["buses"][0]["slack"] = False
    assert [g.code for g in validate_network(parse_case(json.dumps(d)))] == ["no_slack"]


def test_parallel_lines_keep_separate_labels():
    d = json.loads(doc())
    d["lines"].append({"from": 1, "to": 2, "x": 0.5})
    net = parse_case(json.dumps(d))
    assert net.line_labels() == ["1-2", "1-3", "2-3", "1-2#2"]


@given(st.one_of(st.just(0.0), st.floats(1e-290, 1e6)), st.sampled_from([1.0, 2.0, 64.0]))
def test_round_trip_exact_for_power_of_two_base(p, base):
    net = parse_case(doc())
    net = replace(net, base_mva=base, loads=(replace(net.loads[0], p=p, q=p / 3),))
    assert from_per_unit(to_per_unit(net)) == net
