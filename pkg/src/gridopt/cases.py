"""Shipped fixture cases and random network generation for experiments."""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .dcopf import solve_dcopf_angle
from .netmodel import Bus, Generator, Line, Load, Network, load_case

FIXTURES = ("3bus", "3bus_congested", "5bus", "infeasible")


def fixture_path(name: str):
    return resources.files("gridopt") / "data" / f"{name}.json"


def load_fixture(name: str) -> Network:
    return load_case(fixture_path(name))


@dataclass
class RandomCaseConfig:
    min_buses: int = 3
    max_buses: int = 8
    x_range: tuple = (0.05, 1.0)
    p_max_range: tuple = (50.0, 200.0)
    cost_range: tuple = (5.0, 60.0)
    load_fraction: tuple = (0.3, 0.7)   # total load as a share of capacity
    congest_prob: float = 0.5
    base_mva: float = 100.0


def _mw(v) -> float:
    # case files carry decimal data; 0.01 MW resolution
    return round(float(v), 2)


def _random_topology(rng, n: int, cfg: RandomCaseConfig) -> list[Line]:
    pairs = []
    for k in range(1, n):
        pairs.append((int(rng.integers(0, k)) + 1, k + 1))
    existing = {tuple(sorted(p)) for p in pairs}
    for _ in range(int(rng.integers(0, n + 1))):
        i, j = (int(v) + 1 for v in rng.choice(n, size=2, replace=False))
        if tuple(sorted((i, j))) not in existing:
            existing.add(tuple(sorted((i, j))))
            pairs.append((i, j))
    return [Line(i, j, round(float(rng.uniform(*cfg.x_range)), 4)) for i, j in pairs]


def random_network(rng: np.random.Generator, cfg: RandomCaseConfig = RandomCaseConfig(),
                   congested: bool | None = None, max_tries: int = 50) -> Network:
    """Connected random case in physical units, feasible by construction.

    With ``congested=True`` one line is rated below its unconstrained flow,
    so at least one limit binds; with ``False`` every rating has headroom.
    ``None`` draws the choice with ``cfg.congest_prob``.
    """
    if congested is None:
        congested = bool(rng.random() < cfg.congest_prob)
    for _ in range(max_tries):
        n = int(rng.integers(cfg.min_buses, cfg.max_buses + 1))
        buses = tuple(Bus(k + 1, k == 0) for k in range(n))
        lines = _random_topology(rng, n, cfg)
        n_gen = int(rng.integers(2, n + 1))
        costs = rng.choice(np.arange(cfg.cost_range[0], cfg.cost_range[1], 0.25), size=n_gen, replace=False)
        gens = tuple(Generator(int(rng.integers(1, n + 1)), float(c), _mw(rng.uniform(*cfg.p_max_range)))
                     for c in costs)
        capacity = sum(g.p_max for g in gens)
        load_buses = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False) + 1
        shares = rng.dirichlet(np.ones(load_buses.size))
        total = capacity * rng.uniform(*cfg.load_fraction)
        loads = tuple(Load(int(b), _mw(total * s)) for b, s in zip(load_buses, shares))
        net = Network(cfg.base_mva, buses, tuple(lines), gens, loads)

        free = solve_dcopf_angle(net)
        if not free.optimal:
            continue
        flows = np.abs(free.flows_mw)
        if congested:
            candidates = np.flatnonzero(flows > 1.0)
            if candidates.size == 0:
                continue
            tight = int(rng.choice(candidates))
        ratings = []
        for k, f in enumerate(flows):
            if congested and k == tight:
                ratings.append(_mw(f * rng.uniform(0.3, 0.9)))
            else:
                ratings.append(_mw(f * rng.uniform(1.2, 3.0) + rng.uniform(1.0, 20.0)))
        rated = tuple(Line(ln.from_bus, ln.to_bus, ln.x, rating=r) for ln, r in zip(lines, ratings))
        candidate = Network(cfg.base_mva, buses, rated, gens, loads)
        res = solve_dcopf_angle(candidate)
        if res.optimal and (not congested or res.binding_lines):
            return candidate
    raise RuntimeError("could not draw a feasible random network")
