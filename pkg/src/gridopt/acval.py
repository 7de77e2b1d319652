"""AC evaluation of an operating point and DC-vs-AC linearization diagnostics.

Nothing here solves an AC power flow. Given bus voltages, the admittance
matrices yield injections, directed line currents and flows, and losses;
given DC angles, the exact sine flow shows how far the linear model is off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dcopf import DispatchResult
from .densecore import rows_to_csv
from .netmodel import CaseError, Network, ensure_per_unit
from .sysmatrices import build_b_line, build_y_bus, build_y_line


@dataclass(frozen=True)
class VoltageProfile:
    v: np.ndarray   # complex p.u. per bus

    def __post_init__(self):
        v = np.asarray(self.v, dtype=complex).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError("voltages must be finite")
        if np.any(np.abs(v) <= 0):
            raise ValueError("voltage magnitudes must be positive")
        object.__setattr__(self, "v", v)

    @classmethod
    def polar(cls, magnitude, angle) -> "VoltageProfile":
        return cls(np.asarray(magnitude) * np.exp(1j * np.asarray(angle, dtype=float)))

    @classmethod
    def flat_magnitude(cls, theta) -> "VoltageProfile":
        theta = np.asarray(theta, dtype=float)
        return cls.polar(np.ones_like(theta), theta)


@dataclass(frozen=True)
class Violation:
    line: int
    label: str
    end: str        # "from" or "to"
    kind: str       # "current" or "apparent"
    magnitude: float
    limit: float


@dataclass(eq=False)
class AcEvaluation:
    s_bus: np.ndarray
    i_fwd: np.ndarray
    i_rev: np.ndarray
    s_fwd: np.ndarray
    s_rev: np.ndarray
    losses: np.ndarray
    violations: list = field(default_factory=list)


def rating_to_current_limit(rating_pu: float) -> float:
    """At nominal voltage a per-unit apparent limit equals the current limit."""
    if not rating_pu > 0:
        raise ValueError("rating must be positive")
    return float(rating_pu)


def evaluate_ac(net: Network, v: VoltageProfile) -> AcEvaluation:
    """Evaluate ``S = diag(V) conj(Y_bus V)`` and directed line quantities."""
    net = ensure_per_unit(net)
    vv = v.v if isinstance(v, VoltageProfile) else VoltageProfile(v).v
    if vv.size != len(net.buses):
        raise CaseError(f"profile has {vv.size} buses, network has {len(net.buses)}")
    y_bus = build_y_bus(net).data
    s_bus = vv * np.conj(y_bus @ vv)
    i_fwd = build_y_line(net, "forward").data @ vv
    i_rev = build_y_line(net, "reverse").data @ vv
    idx = net.bus_index
    vi = np.array([vv[idx[ln.from_bus]] for ln in net.lines], dtype=complex)
    vj = np.array([vv[idx[ln.to_bus]] for ln in net.lines], dtype=complex)
    s_fwd = vi * np.conj(i_fwd)
    s_rev = vj * np.conj(i_rev)

    violations = []
    labels = net.line_labels()
    for k, ln in enumerate(net.lines):
        if ln.rating is None:
            continue
        i_max = rating_to_current_limit(ln.rating)
        for end, s, cur in (("from", s_fwd[k], i_fwd[k]), ("to", s_rev[k], i_rev[k])):
            if abs(s) > ln.rating:
                violations.append(Violation(k, labels[k], end, "apparent", abs(s), ln.rating))
            if abs(cur) > i_max:
                violations.append(Violation(k, labels[k], end, "current", abs(cur), i_max))
    return AcEvaluation(s_bus, i_fwd, i_rev, s_fwd, s_rev, s_fwd + s_rev, violations)


def sine_flow(net: Network, theta) -> np.ndarray:
    """Lossless AC line flow at unit voltages, ``sin(theta_i - theta_j) / x_ij``."""
    theta = np.asarray(theta, dtype=float)
    idx = net.bus_index
    return np.array([math.sin(theta[idx[ln.from_bus]] - theta[idx[ln.to_bus]]) / ln.x
                     for ln in net.lines])


@dataclass(frozen=True)
class GapRow:
    delta: float
    sin_delta: float
    abs_error: float
    rel_error: float      # nan at delta = 0
    beyond_limit: bool    # |delta| > pi/6


def linearization_gap(theta_diffs) -> list[GapRow]:
    rows = []
    for d in np.asarray(theta_diffs, dtype=float).ravel():
        s = math.sin(d)
        err = abs(d - s)
        rel = err / abs(d) if d != 0 else math.nan
        rows.append(GapRow(float(d), s, err, rel, abs(d) > math.pi / 6))
    return rows


def sine_samples_csv(step: float = 0.01) -> str:
    """(delta, sin delta) on [-pi/2, pi/2] for plotting the approximation."""
    n = int(math.floor(math.pi / step + 1e-9))
    deltas = [-math.pi / 2 + k * step for k in range(n + 1)]
    return rows_to_csv(["delta_rad", "sin_delta"], [(d, math.sin(d)) for d in deltas])


@dataclass(eq=False)
class DcAcGap:
    labels: tuple
    dc_flow: np.ndarray
    sine_flow: np.ndarray
    gap: np.ndarray
    hidden_overloads: list   # labels whose sine flow breaks the rating but DC flow does not

    @property
    def max_gap(self) -> float:
        return float(np.max(np.abs(self.gap), initial=0.0))


def dc_ac_gap(net: Network, r: DispatchResult) -> DcAcGap:
    """Compare DC flows ``B_line theta`` with exact sine flows at the same angles."""
    if r.theta is None:
        raise ValueError("result carries no angles (PTDF formulation); use the angle formulation")
    return _gap_at(ensure_per_unit(net), r.theta)


def _gap_at(net: Network, theta) -> DcAcGap:
    theta = np.asarray(theta, dtype=float)
    dc = build_b_line(net).data @ theta
    ac = sine_flow(net, theta)
    hidden = []
    for ln, lbl, f_dc, f_ac in zip(net.lines, net.line_labels(), dc, ac):
        if ln.rating is not None and abs(f_ac) > ln.rating + 1e-9 and abs(f_dc) <= ln.rating + 1e-9:
            hidden.append(lbl)
    return DcAcGap(tuple(net.line_labels()), dc, ac, ac - dc, hidden)


def complex_block(z) -> np.ndarray:
    """Real form of a complex vector (stacked ``[Re; Im]``) or matrix (``[[Re, -Im], [Im, Re]]``)."""
    z = np.asarray(z, dtype=complex)
    if z.ndim == 1:
        return np.concatenate([z.real, z.imag])
    if z.ndim == 2:
        return np.block([[z.real, -z.imag], [z.imag, z.real]])
    raise ValueError("complex_block expects a vector or a matrix")


def unblock(v) -> np.ndarray:
    """Inverse of :func:`complex_block` for stacked vectors."""
    v = np.asarray(v, dtype=float)
    h = v.size // 2
    return v[:h] + 1j * v[h:]


def validation_report(net: Network, theta, slack=None) -> dict:
    """Per-line DC, sine and apparent values at unit voltages and angles ``theta``."""
    net = ensure_per_unit(net)
    if len(theta) != len(net.buses):
        raise CaseError("angle count does not match the network")
    gap = _gap_at(net, theta)
    ev = evaluate_ac(net, VoltageProfile.flat_magnitude(theta))
    base = net.base_mva
    lines = []
    for k, ln in enumerate(net.lines):
        entry = {
            "line": gap.labels[k],
            "dc_mw": float(gap.dc_flow[k] * base),
            "sine_mw": float(gap.sine_flow[k] * base),
            "gap_mw": float(gap.gap[k] * base),
            "s_from_mva": float(abs(ev.s_fwd[k]) * base),
            "s_to_mva": float(abs(ev.s_rev[k]) * base),
            "loss_mw": float(ev.losses[k].real * base),
        }
        if ln.rating is not None:
            entry["limit_mva"] = float(ln.rating * base)
        lines.append(entry)
    return {
        "slack": slack,
        "lines": lines,
        "violations": [
            {"line": v.label, "end": v.end, "kind": v.kind,
             "magnitude": float(v.magnitude * base), "limit": float(v.limit * base)}
            for v in ev.violations
        ],
        "hidden_overloads": gap.hidden_overloads,
        "max_gap_mw": gap.max_gap * base,
    }
