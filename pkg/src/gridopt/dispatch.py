"""Economic dispatch on a copperplate network: merit order and LP."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dcopf import DispatchResult, _finish, _failed
from .densecore import rows_to_csv
from .lp import LpProblem, solve_lp
from .netmodel import CaseError, Network, ensure_per_unit, from_per_unit


class InsufficientCapacityError(CaseError):
    pass


@dataclass
class MeritOrderResult:
    order: list[int]                 # generator indices, cheapest first
    breakpoints: list[float]         # cumulative capacity after each block, MW
    dispatch: np.ndarray             # MW per generator (original order)
    smp: float                       # currency/MWh
    marginal_gen: Optional[int]
    total_cost: float                # currency/h
    curve_points: list[tuple[float, float]]
    demand: float
    flags: list[str] = field(default_factory=list)

    @property
    def degenerate(self) -> bool:
        return bool(self.flags)

    def curve_csv(self) -> str:
        return rows_to_csv(["cum_capacity_mw", "price"], self.curve_points)


def _physical(net: Network) -> Network:
    return from_per_unit(net) if net.normalized else net


def merit_order(net: Network, demand_override: Optional[float] = None) -> MeritOrderResult:
    """Fill generators cheapest-first until demand (MW) is met.

    Ties in cost are broken by generator index. Every generator must have
    ``p_min == 0``; use :func:`economic_dispatch_lp` otherwise.
    """
    net = _physical(net)
    gens = net.generators
    if any(g.p_min > 0 for g in gens):
        raise CaseError("merit-order dispatch requires p_min = 0 for every generator")
    demand = net.total_load() if demand_override is None else float(demand_override)
    if demand < 0:
        raise CaseError("demand must be non-negative")
    capacity = math.fsum(g.p_max for g in gens)
    if demand > capacity:
        raise InsufficientCapacityError(f"demand {demand:g} MW exceeds capacity {capacity:g} MW")

    order = sorted(range(len(gens)), key=lambda k: (gens[k].cost, k))
    dispatch = np.zeros(len(gens))
    breakpoints, curve = [], []
    cum = 0.0
    remaining = demand
    marginal = None
    flags = []
    for k in order:
        g = gens[k]
        curve.append((cum, g.cost))
        cum += g.p_max
        breakpoints.append(cum)
        curve.append((cum, g.cost))
        if remaining > 0:
            take = min(g.p_max, remaining)
            dispatch[k] = take
            remaining -= take
            if marginal is None and remaining <= 0:
                marginal = k
                if take == g.p_max:
                    flags.append("breakpoint_degenerate")

    if marginal is None:
        # zero demand: nobody serves the last MWh
        flags.append("degenerate")
        smp = gens[order[0]].cost if gens else math.nan
    else:
        smp = gens[marginal].cost
    total = math.fsum(g.cost * p for g, p in zip(gens, dispatch))
    return MeritOrderResult(order, breakpoints, dispatch, smp, marginal, total, curve, demand, flags)


def economic_dispatch_lp(net: Network, obj_scale: float = 1.0) -> DispatchResult:
    """Copperplate dispatch as an LP; the balance dual is the system marginal price."""
    net = ensure_per_unit(net)
    ng, nb = len(net.generators), len(net.buses)
    c = np.array([g.cost for g in net.generators], dtype=float)
    p = LpProblem(
        c * obj_scale,
        a_eq=np.ones((1, ng)),
        b_eq=[net.total_load()],
        lb=[g.p_min for g in net.generators],
        ub=[g.p_max for g in net.generators],
    )
    sol = solve_lp(p)
    slack = next((b.id for b in net.buses if b.is_slack), None)
    if not sol.optimal:
        return _failed(sol.status, "copperplate", net, slack)
    smp = sol.duals_eq[0] / obj_scale
    nl = len(net.lines)
    return _finish(net, sol, "copperplate", slack, sol.x, np.zeros(nl), np.full(nb, smp),
                   np.zeros((nl, 2)), smp)


def count_marginal(net: Network, r: DispatchResult, tol: float = 1e-9) -> int:
    """Number of generators strictly between their bounds."""
    net = ensure_per_unit(net)
    return sum(g.p_min + tol < p < g.p_max - tol for g, p in zip(net.generators, r.p_g))
