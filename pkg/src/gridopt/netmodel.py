"""Network data model: JSON case parsing, validation and per-unit conversion.

Impedances in a case file are already per unit on ``base_mva``; only power
quantities (MW, MVA, MVAr) are rescaled by :func:`to_per_unit`.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Optional


class CaseError(ValueError):
    """Raised for malformed or inconsistent case data."""


@dataclass(frozen=True)
class Bus:
    id: int
    is_slack: bool = False


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    x: float
    r: float = 0.0
    b_sh: float = 0.0
    rating: Optional[float] = None  # None means unbounded

    @property
    def b(self) -> float:
        """Series susceptance used by the DC model, 1/x."""
        return 1.0 / self.x


@dataclass(frozen=True)
class Generator:
    bus: int
    cost: float
    p_max: float
    p_min: float = 0.0


@dataclass(frozen=True)
class Load:
    bus: int
    p: float
    q: float = 0.0


@dataclass(frozen=True)
class Network:
    base_mva: float
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...] = ()
    generators: tuple[Generator, ...] = ()
    loads: tuple[Load, ...] = ()
    normalized: bool = False

    @property
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    @property
    def bus_index(self) -> dict[int, int]:
        return {b.id: k for k, b in enumerate(self.buses)}

    @property
    def slack(self) -> int:
        slacks = [b.id for b in self.buses if b.is_slack]
        if len(slacks) != 1:
            raise CaseError(f"expected exactly one slack bus, found {len(slacks)}")
        return slacks[0]

    def line_labels(self) -> list[str]:
        """Stable line keys ``"i-j"``; parallel circuits get a ``#k`` suffix."""
        seen: dict[tuple[int, int], int] = defaultdict(int)
        labels = []
        for ln in self.lines:
            key = (ln.from_bus, ln.to_bus)
            seen[key] += 1
            label = f"{ln.from_bus}-{ln.to_bus}"
            if seen[key] > 1:
                label += f"#{seen[key]}"
            labels.append(label)
        return labels

    def bus_load(self) -> list[float]:
        """Active demand aggregated per bus, in the network's current units."""
        idx = self.bus_index
        out = [0.0] * len(self.buses)
        for ld in self.loads:
            out[idx[ld.bus]] += ld.p
        return out

    def total_load(self) -> float:
        return math.fsum(ld.p for ld in self.loads)

    def with_slack(self, bus_id: int) -> "Network":
        if bus_id not in self.bus_index:
            raise CaseError(f"slack bus {bus_id} is not a bus of the network")
        buses = tuple(Bus(b.id, b.id == bus_id) for b in self.buses)
        return replace(self, buses=buses)

    def with_load_delta(self, bus_id: int, delta: float) -> "Network":
        """Return a copy with ``delta`` extra demand at ``bus_id``."""
        return replace(self, loads=self.loads + (Load(bus_id, delta),))


# ---------------------------------------------------------------- parsing

def _number(obj: dict, key: str, where: str, default=None, required=True) -> Optional[float]:
    if key not in obj or obj[key] is None:
        if required and default is None:
            raise CaseError(f"{where}: missing required field '{key}'")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise CaseError(f"{where}: field '{key}' must be a number")
    if not math.isfinite(val):
        raise CaseError(f"{where}: field '{key}' must be finite")
    return float(val)


def _reject_constant(token: str):
    raise CaseError(f"non-finite number '{token}' is not allowed")


def _check_bus(ref, known: set[int], where: str) -> int:
    if isinstance(ref, bool) or not isinstance(ref, int):
        raise CaseError(f"{where}: bus reference must be an integer")
    if ref not in known:
        raise CaseError(f"{where}: unknown bus reference {ref}")
    return ref


def parse_case(text: str) -> Network:
    """Parse a JSON case document into a physical-unit :class:`Network`."""
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise CaseError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise CaseError("case document must be a JSON object")

    base = _number(doc, "base_mva", "case")
    if base <= 0:
        raise CaseError("case: base_mva must be positive")

    buses = []
    seen: set[int] = set()
    for k, raw in enumerate(doc.get("buses") or []):
        where = f"buses[{k}]"
        bid = raw.get("id") if isinstance(raw, dict) else None
        if isinstance(bid, bool) or not isinstance(bid, int):
            raise CaseError(f"{where}: missing required field 'id'")
        if bid <= 0:
            raise CaseError(f"{where}: bus id must be a positive integer")
        if bid in seen:
            raise CaseError(f"{where}: duplicate bus id {bid}")
        seen.add(bid)
        buses.append(Bus(bid, bool(raw.get("slack", False))))
    if not buses:
        raise CaseError("case: no buses")
    if sum(b.is_slack for b in buses) > 1:
        raise CaseError("multiple slack buses")

    lines = []
    for k, raw in enumerate(doc.get("lines") or []):
        where = f"lines[{k}]"
        if "from" not in raw or "to" not in raw:
            raise CaseError(f"{where}: missing required field 'from'/'to'")
        i = _check_bus(raw["from"], seen, where)
        j = _check_bus(raw["to"], seen, where)
        if i == j:
            raise CaseError(f"{where}: line connects bus {i} to itself")
        x = _number(raw, "x", where)
        if x <= 0:
            raise CaseError(f"{where}: non-positive reactance")
        r = _number(raw, "r", where, 0.0)
        b_sh = _number(raw, "b_sh", where, 0.0)
        rating = _number(raw, "rating_mva", where, required=False)
        if r < 0:
            raise CaseError(f"{where}: negative resistance")
        if b_sh < 0:
            raise CaseError(f"{where}: negative shunt susceptance")
        if rating is not None and rating <= 0:
            raise CaseError(f"{where}: non-positive rating")
        lines.append(Line(i, j, x, r, b_sh, rating))

    gens = []
    for k, raw in enumerate(doc.get("generators") or []):
        where = f"generators[{k}]"
        bus = _check_bus(raw.get("bus"), seen, where)
        cost = _number(raw, "cost", where)
        p_max = _number(raw, "p_max", where)
        p_min = _number(raw, "p_min", where, 0.0)
        if not 0 <= p_min <= p_max:
            raise CaseError(f"{where}: require 0 <= p_min <= p_max")
        gens.append(Generator(bus, cost, p_max, p_min))

    loads = []
    for k, raw in enumerate(doc.get("loads") or []):
        where = f"loads[{k}]"
        bus = _check_bus(raw.get("bus"), seen, where)
        p = _number(raw, "p", where)
        if p < 0:
            raise CaseError(f"{where}: negative load")
        loads.append(Load(bus, p, _number(raw, "q", where, 0.0)))

    return Network(base, tuple(buses), tuple(lines), tuple(gens), tuple(loads))


def load_case(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_case(fh.read())


def case_to_dict(net: Network) -> dict:
    """Inverse of :func:`parse_case` (physical units expected)."""
    def line(ln: Line) -> dict:
        d = {"from": ln.from_bus, "to": ln.to_bus, "r": ln.r, "x": ln.x, "b_sh": ln.b_sh}
        if ln.rating is not None:
            d["rating_mva"] = ln.rating
        return d

    return {
        "base_mva": net.base_mva,
        "buses": [{"id": b.id, "slack": b.is_slack} for b in net.buses],
        "lines": [line(ln) for ln in net.lines],
        "generators": [{"bus": g.bus, "cost": g.cost, "p_min": g.p_min, "p_max": g.p_max}
                       for g in net.generators],
        "loads": [{"bus": ld.bus, "p": ld.p, "q": ld.q} for ld in net.loads],
    }


def serialize_case(net: Network) -> str:
    if net.normalized:
        raise CaseError("serialize the physical-unit network, not the per-unit one")
    return json.dumps(case_to_dict(net), indent=2)


# ---------------------------------------------------------------- per unit

def to_per_unit(net: Network) -> Network:
    """Divide every power quantity by ``base_mva``. Costs stay in currency/MWh."""
    if net.normalized:
        raise CaseError("network is already normalized")
    k = net.base_mva
    return replace(
        net,
        lines=tuple(replace(ln, rating=None if ln.rating is None else ln.rating / k)
                    for ln in net.lines),
        generators=tuple(replace(g, p_min=g.p_min / k, p_max=g.p_max / k) for g in net.generators),
        loads=tuple(replace(ld, p=ld.p / k, q=ld.q / k) for ld in net.loads),
        normalized=True,
    )


def _restore(pu: float, base: float) -> float:
    # Division by base is not injective on floats, so pick, among values that
    # divide back to ``pu``, the one with the shortest decimal repr (case files
    # hold decimal text); fall back to the plain product.
    v = pu * base
    cands = [v, math.nextafter(v, math.inf), math.nextafter(v, -math.inf)]
    cands += [float(f"{v:.{d}g}") for d in range(1, 18)]
    ok = [c for c in cands if c / base == pu]
    if not ok:
        return v
    return min(ok, key=lambda c: (len(repr(c)), abs(c - v)))


def from_per_unit(net: Network) -> Network:
    """Multiply power quantities back by ``base_mva``.

    Decimal case values survive ``to_per_unit``/``from_per_unit`` bit for bit.
    """
    if not net.normalized:
        raise CaseError("network is not normalized")
    k = net.base_mva
    return replace(
        net,
        lines=tuple(replace(ln, rating=None if ln.rating is None else _restore(ln.rating, k))
                    for ln in net.lines),
        generators=tuple(replace(g, p_min=_restore(g.p_min, k), p_max=_restore(g.p_max, k))
                         for g in net.generators),
        loads=tuple(replace(ld, p=_restore(ld.p, k), q=_restore(ld.q, k)) for ld in net.loads),
        normalized=False,
    )


def ensure_per_unit(net: Network) -> Network:
    return net if net.normalized else to_per_unit(net)


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    detail: dict = field(default_factory=dict)
    severity: str = "error"


def validate_network(net: Network) -> list[Diagnostic]:
    """Collect every invariant violation instead of raising."""
    diags: list[Diagnostic] = []
    ids = net.bus_ids
    known = set(ids)
    if len(known) != len(ids):
        diags.append(Diagnostic("duplicate_bus", "bus ids are not unique"))

    n_slack = sum(b.is_slack for b in net.buses)
    if n_slack == 0:
        diags.append(Diagnostic("no_slack", "no slack bus designated"))
    elif n_slack > 1:
        diags.append(Diagnostic("multiple_slack", "multiple slack buses"))

    for k, ln in enumerate(net.lines):
        if ln.from_bus not in known or ln.to_bus not in known:
            diags.append(Diagnostic("unknown_bus", f"line {k} references an unknown bus", {"line": k}))
        if ln.from_bus == ln.to_bus:
            diags.append(Diagnostic("self_loop", f"line {k} is a self loop", {"line": k}))
        if not ln.x > 0:
            diags.append(Diagnostic("non_positive_reactance", f"line {k}: non-positive reactance", {"line": k}))
        if ln.r < 0 or ln.b_sh < 0:
            diags.append(Diagnostic("negative_parameter", f"line {k}: negative r or b_sh", {"line": k}))
        if ln.rating is not None and not ln.rating > 0:
            diags.append(Diagnostic("non_positive_rating", f"line {k}: non-positive rating", {"line": k}))
    for k, g in enumerate(net.generators):
        if g.bus not in known:
            diags.append(Diagnostic("unknown_bus", f"generator {k} references an unknown bus", {"generator": k}))
        if not (0 <= g.p_min <= g.p_max) or not math.isfinite(g.cost):
            diags.append(Diagnostic("bad_generator", f"generator {k}: invalid limits or cost", {"generator": k}))
    for k, ld in enumerate(net.loads):
        if ld.bus not in known:
            diags.append(Diagnostic("unknown_bus", f"load {k} references an unknown bus", {"load": k}))
        if ld.p < 0:
            diags.append(Diagnostic("negative_load", f"load {k}: negative demand", {"load": k}))

    # connectivity from the first bus
    adj: dict[int, set[int]] = {b: set() for b in ids}
    for ln in net.lines:
        if ln.from_bus in adj and ln.to_bus in adj:
            adj[ln.from_bus].add(ln.to_bus)
            adj[ln.to_bus].add(ln.from_bus)
    if ids:
        stack, reached = [ids[0]], {ids[0]}
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in reached:
                    reached.add(nb)
                    stack.append(nb)
        for b in ids:
            if b not in reached:
                diags.append(Diagnostic("disconnected", f"bus {b} is not connected", {"bus": b}))

    capacity = math.fsum(g.p_max for g in net.generators)
    if capacity < net.total_load():
        diags.append(Diagnostic(
            "insufficient_capacity",
            f"total p_max {capacity:g} below total load {net.total_load():g}",
            {"capacity": capacity, "load": net.total_load()},
            severity="warning",
        ))
    return diags
