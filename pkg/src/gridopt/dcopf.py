"""DC optimal power flow (angle and PTDF formulations) and LMP tools.

Everything is solved in per unit and radians. Costs stay in currency/MWh,
so an objective computed on p.u. dispatch is in currency/h divided by the
MVA base, and nodal duals come out directly in currency/MWh.

LMP sign convention: ``lmp[i] = d f* / d P_D[i]``, the cost of serving one
more unit of demand at bus i. It is positive for positive costs when the
network is uncongested.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .lp import OPTIMAL, LpProblem, LpSolution, solve_lp
from .netmodel import CaseError, Network, ensure_per_unit
from .sysmatrices import PtdfMatrix, build_b_bus, build_b_line, build_ptdf

ANGLE_WARN = math.pi / 6   # small-angle approximation degrades beyond 30 degrees
BINDING_TOL = 1e-6         # shadow price above which a line counts as binding
FD_REL_TOL = 1e-3


@dataclass(frozen=True)
class BindingLine:
    line: int
    label: str
    direction: str          # "+" for from->to at its limit, "-" for to->from
    shadow_price: float     # currency/MWh, >= 0


@dataclass(eq=False)
class DispatchResult:
    status: str
    formulation: str
    base_mva: float
    bus_ids: tuple
    line_labels: tuple
    p_g: np.ndarray                      # p.u.
    flows: np.ndarray                    # p.u., signed from->to
    lmp: np.ndarray                      # currency/MWh per bus
    objective: float                     # sum c_i P_Gi with P in p.u.
    slack: Optional[int] = None
    theta: Optional[np.ndarray] = None   # rad, angle formulation only
    ratings: tuple = ()                  # p.u. or None per line
    shadow: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))  # (lambda+, lambda-) per line
    energy_price: float = math.nan       # balance dual (PTDF/copperplate) or slack LMP
    degenerate: bool = False
    basis: tuple = ()
    warnings: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def objective_per_h(self) -> float:
        return self.objective * self.base_mva

    @property
    def p_g_mw(self) -> np.ndarray:
        return self.p_g * self.base_mva

    @property
    def flows_mw(self) -> np.ndarray:
        return self.flows * self.base_mva

    @property
    def binding_lines(self) -> list[BindingLine]:
        out = []
        for k, (lp_, lm) in enumerate(self.shadow):
            if lp_ > BINDING_TOL:
                out.append(BindingLine(k, self.line_labels[k], "+", float(lp_)))
            if lm > BINDING_TOL:
                out.append(BindingLine(k, self.line_labels[k], "-", float(lm)))
        return out

    @property
    def lmp_spread(self) -> float:
        return float(np.ptp(self.lmp)) if self.lmp.size else 0.0

    def lmp_at(self, bus: int) -> float:
        return float(self.lmp[self.bus_ids.index(bus)])


def _gen_incidence(net: Network) -> np.ndarray:
    idx = net.bus_index
    cg = np.zeros((len(net.buses), len(net.generators)))
    for k, g in enumerate(net.generators):
        cg[idx[g.bus], k] = 1.0
    return cg


def _rated(net: Network) -> list[int]:
    return [k for k, ln in enumerate(net.lines) if ln.rating is not None]


def _failed(status: str, formulation: str, net: Network, slack) -> DispatchResult:
    nb, nl = len(net.buses), len(net.lines)
    return DispatchResult(
        status=status, formulation=formulation, base_mva=net.base_mva,
        bus_ids=tuple(net.bus_ids), line_labels=tuple(net.line_labels()),
        p_g=np.full(len(net.generators), np.nan), flows=np.full(nl, np.nan),
        lmp=np.full(nb, np.nan), objective=math.nan, slack=slack,
        ratings=tuple(ln.rating for ln in net.lines), shadow=np.zeros((nl, 2)),
    )


def _costs(net: Network) -> np.ndarray:
    return np.array([g.cost for g in net.generators], dtype=float)


def _gen_bounds(net: Network):
    return (np.array([g.p_min for g in net.generators], dtype=float),
            np.array([g.p_max for g in net.generators], dtype=float))


def _finish(net, sol: LpSolution, formulation, slack, p_g, flows, lmp, shadow,
            energy, theta=None) -> DispatchResult:
    warnings = []
    if sol.degenerate:
        warnings.append("degenerate: a basic variable sits at a bound; LMPs may not be unique")
    if theta is not None:
        for lbl, diff in zip(net.line_labels(), _angle_diffs(net, theta)):
            if abs(diff) > ANGLE_WARN:
                warnings.append(f"approx_warning: |angle difference| on line {lbl} is "
                                f"{abs(diff):.4f} rad > pi/6")
    return DispatchResult(
        status=OPTIMAL, formulation=formulation, base_mva=net.base_mva,
        bus_ids=tuple(net.bus_ids), line_labels=tuple(net.line_labels()),
        p_g=p_g, flows=flows, lmp=lmp, objective=float(_costs(net) @ p_g),
        slack=slack, theta=theta, ratings=tuple(ln.rating for ln in net.lines),
        shadow=shadow, energy_price=float(energy), degenerate=sol.degenerate,
        basis=sol.basis, warnings=warnings,
    )


def _angle_diffs(net: Network, theta: np.ndarray) -> np.ndarray:
    idx = net.bus_index
    return np.array([theta[idx[ln.from_bus]] - theta[idx[ln.to_bus]] for ln in net.lines])


def solve_dcopf_angle(net: Network, slack: Optional[int] = None, obj_scale: float = 1.0,
                      angle_ref: float = 0.0) -> DispatchResult:
    """DC-OPF over generator outputs and bus angles.

    Keeps all N nodal balance rows ``B theta = Cg P_G - P_D`` plus a pin
    ``theta_slack = angle_ref``. Each rated line contributes the two-sided
    limit ``|B_line theta| <= rating``.
    """
    if obj_scale <= 0:
        raise ValueError("obj_scale must be positive")
    net = ensure_per_unit(net)
    slack = net.slack if slack is None else slack
    idx = net.bus_index
    if slack not in idx:
        raise CaseError(f"slack bus {slack} is not a bus of the network")
    nb, ng = len(net.buses), len(net.generators)
    b_bus = build_b_bus(net).data
    b_line = build_b_line(net).data
    rated = _rated(net)

    # variables: [P_G (ng), theta (nb)]
    a_eq = np.zeros((nb + 1, ng + nb))
    a_eq[:nb, :ng] = _gen_incidence(net)
    a_eq[:nb, ng:] = -b_bus
    a_eq[nb, ng + idx[slack]] = 1.0
    b_eq = np.append(np.array(net.bus_load()), angle_ref)

    a_ub = np.zeros((2 * len(rated), ng + nb))
    b_ub = np.zeros(2 * len(rated))
    for r, k in enumerate(rated):
        a_ub[2 * r, ng:] = b_line[k]
        a_ub[2 * r + 1, ng:] = -b_line[k]
        b_ub[2 * r] = b_ub[2 * r + 1] = net.lines[k].rating

    p_min, p_max = _gen_bounds(net)
    lb = np.concatenate([p_min, np.full(nb, -np.inf)])
    ub = np.concatenate([p_max, np.full(nb, np.inf)])
    c = np.concatenate([_costs(net) * obj_scale, np.zeros(nb)])

    sol = solve_lp(LpProblem(c, a_eq, b_eq, a_ub, b_ub, lb, ub))
    if not sol.optimal:
        return _failed(sol.status, "angle", net, slack)
    p_g = sol.x[:ng]
    theta = sol.x[ng:]
    lmp = sol.duals_eq[:nb] / obj_scale
    shadow = np.zeros((len(net.lines), 2))
    for r, k in enumerate(rated):
        shadow[k] = sol.duals_ub[2 * r: 2 * r + 2] / obj_scale
    return _finish(net, sol, "angle", slack, p_g, b_line @ theta, lmp, shadow,
                   lmp[idx[slack]], theta=theta)


def solve_dcopf_ptdf(net: Network, slack: Optional[int] = None, obj_scale: float = 1.0) -> DispatchResult:
    """DC-OPF over generator outputs only.

    One system balance row plus ``-rating <= PTDF (Cg P_G - P_D) <= rating``
    per rated line. Nodal prices are rebuilt from the balance dual and the
    line shadow prices: ``lmp_i = nu + sum_l (lam-_l - lam+_l) PTDF_{l,i}``.
    """
    if obj_scale <= 0:
        raise ValueError("obj_scale must be positive")
    net = ensure_per_unit(net)
    slack = net.slack if slack is None else slack
    ptdf = build_ptdf(net, slack).data
    ng = len(net.generators)
    cg = _gen_incidence(net)
    p_d = np.array(net.bus_load())
    rated = _rated(net)

    a_eq = np.ones((1, ng))
    b_eq = np.array([net.total_load()])
    h = ptdf[rated] @ cg
    base_flow = ptdf[rated] @ p_d
    limits = np.array([net.lines[k].rating for k in rated], dtype=float)
    a_ub = np.zeros((2 * len(rated), ng))
    a_ub[0::2], a_ub[1::2] = h, -h
    b_ub = np.zeros(2 * len(rated))
    b_ub[0::2] = limits + base_flow
    b_ub[1::2] = limits - base_flow

    p_min, p_max = _gen_bounds(net)
    sol = solve_lp(LpProblem(_costs(net) * obj_scale, a_eq, b_eq, a_ub, b_ub, p_min, p_max))
    if not sol.optimal:
        return _failed(sol.status, "ptdf", net, slack)
    p_g = sol.x
    shadow = np.zeros((len(net.lines), 2))
    for r, k in enumerate(rated):
        shadow[k] = sol.duals_ub[2 * r: 2 * r + 2] / obj_scale
    energy = sol.duals_eq[0] / obj_scale
    lmp = energy + (shadow[:, 1] - shadow[:, 0]) @ ptdf
    flows = ptdf @ (cg @ p_g - p_d)
    return _finish(net, sol, "ptdf", slack, p_g, flows, lmp, shadow, energy)


SOLVERS = {"angle": solve_dcopf_angle, "ptdf": solve_dcopf_ptdf}


def solve_dcopf(net: Network, formulation: str = "angle", **kw) -> DispatchResult:
    try:
        solver = SOLVERS[formulation]
    except KeyError:
        raise ValueError(f"unknown formulation {formulation!r}") from None
    return solver(net, **kw)


# ---------------------------------------------------------------- LMP tools

@dataclass(frozen=True)
class LmpDecomposition:
    bus_ids: tuple
    energy: np.ndarray
    congestion: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.energy + self.congestion


def lmp_decompose(r: DispatchResult, p: PtdfMatrix) -> LmpDecomposition:
    """Split nodal prices into a uniform energy part and a congestion part.

    The congestion part is ``sum_l (lam-_l - lam+_l) PTDF_{l,i}``; it is zero
    at the slack bus, so the energy part is the slack-bus price.
    """
    if not r.optimal:
        raise ValueError("cannot decompose prices of a non-optimal result")
    if r.slack != p.slack:
        raise ValueError(f"slack mismatch: result uses bus {r.slack}, PTDF uses bus {p.slack}")
    congestion = (r.shadow[:, 1] - r.shadow[:, 0]) @ p.data
    s = r.bus_ids.index(r.slack)
    energy = np.full(len(r.bus_ids), r.lmp[s] - congestion[s])
    return LmpDecomposition(r.bus_ids, energy, congestion)


@dataclass(frozen=True)
class FdCheck:
    bus: int
    fd_price: float
    lmp: float
    rel_gap: float
    active_set_changed: bool
    status: str = OPTIMAL

    @property
    def passed(self) -> bool:
        return self.status == OPTIMAL and (self.rel_gap <= FD_REL_TOL or self.active_set_changed)


def verify_lmp_fd(net: Network, r: DispatchResult, eps: float = 1e-5, obj_scale: float = 1.0) -> list[FdCheck]:
    """Check each LMP against ``(f*(P_D + eps e_i) - f*) / eps``.

    ``eps`` is in p.u.; the gap is relative to ``max(|lmp|, 1)``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not r.optimal:
        raise ValueError("finite-difference check needs an optimal result")
    net = ensure_per_unit(net)
    solver = SOLVERS[r.formulation]
    out = []
    for k, bus in enumerate(r.bus_ids):
        rp = solver(net.with_load_delta(bus, eps), slack=r.slack, obj_scale=obj_scale)
        if not rp.optimal:
            out.append(FdCheck(bus, math.nan, float(r.lmp[k]), math.inf, True, rp.status))
            continue
        fd = (rp.objective - r.objective) / eps
        gap = abs(fd - r.lmp[k]) / max(abs(r.lmp[k]), 1.0)
        out.append(FdCheck(bus, fd, float(r.lmp[k]), gap, rp.basis != r.basis))
    return out


# ---------------------------------------------------------------- reporting

def report_dict(r: DispatchResult, net: Network) -> dict:
    """JSON-ready report in MW and currency units."""
    gens = net.generators
    rep = {
        "version": __version__,
        "status": r.status,
        "formulation": r.formulation,
        "slack": r.slack,
        "objective_per_h": _num(r.objective_per_h),
        "dispatch": [{"gen": k, "bus": g.bus, "p_mw": _num(p)} for k, (g, p) in enumerate(zip(gens, r.p_g_mw))],
    }
    if r.theta is not None:
        rep["theta_rad"] = [_num(t) for t in r.theta]
    binding = {bl.line for bl in r.binding_lines}
    flows = []
    for k, (lbl, f) in enumerate(zip(r.line_labels, r.flows_mw)):
        entry = {"line": lbl, "p_mw": _num(f)}
        if r.ratings and r.ratings[k] is not None:
            entry["limit_mw"] = _num(r.ratings[k] * r.base_mva)
        entry["binding"] = k in binding
        flows.append(entry)
    rep["flows"] = flows
    rep["lmp"] = [{"bus": b, "price": _num(p)} for b, p in zip(r.bus_ids, r.lmp)]
    rep["warnings"] = list(r.warnings)
    return rep


def _num(v):
    v = float(v) + 0.0  # drops negative zero
    return v if math.isfinite(v) else None
