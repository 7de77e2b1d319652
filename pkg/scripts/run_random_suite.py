"""Solve a random DC-OPF suite with both formulations and summarize agreement.

    python3 scripts/run_random_suite.py --n 200 --seed 20240917
"""
import argparse
import time
from dataclasses import dataclass

import numpy as np

from gridopt.cases import RandomCaseConfig, random_network
from gridopt.dcopf import solve_dcopf_angle, solve_dcopf_ptdf, verify_lmp_fd
from gridopt.netmodel import to_per_unit


@dataclass
class SuiteConfig:
    n: int = 200
    seed: int = 20240917
    fd_eps: float = 1e-5
    fd: bool = True


def main(cfg: SuiteConfig):
    rng = np.random.default_rng(cfg.seed)
    t0 = time.perf_counter()
    nets = [to_per_unit(random_network(rng, RandomCaseConfig())) for _ in range(cfg.n)]
    worst = dict(objective=0.0, flow=0.0, lmp=0.0, fd=0.0)
    congested = degenerate = 0
    for net in nets:
        a, p = solve_dcopf_angle(net), solve_dcopf_ptdf(net)
        worst["objective"] = max(worst["objective"], abs(a.objective - p.objective) / abs(a.objective))
        worst["flow"] = max(worst["flow"], float(np.max(np.abs(a.flows - p.flows))))
        worst["lmp"] = max(worst["lmp"], float(np.max(np.abs(a.lmp - p.lmp))))
        congested += bool(a.binding_lines)
        degenerate += a.degenerate or p.degenerate
        if cfg.fd and not a.degenerate:
            for c in verify_lmp_fd(net, a, cfg.fd_eps):
                worst["fd"] = max(worst["fd"], c.rel_gap)
    print(f"cases {cfg.n}  congested {congested}  degenerate {degenerate}  "
          f"time {time.perf_counter() - t0:.1f} s")
    for k, v in worst.items():
        print(f"  max {k:<9} gap {v:.2e}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=SuiteConfig.n)
    ap.add_argument("--seed", type=int, default=SuiteConfig.seed)
    ap.add_argument("--no-fd", action="store_true")
    args = ap.parse_args()
    main(SuiteConfig(args.n, args.seed, fd=not args.no_fd))
