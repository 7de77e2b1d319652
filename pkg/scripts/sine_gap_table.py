"""Tabulate how far sin(delta) drifts from delta, and the DC-vs-sine flow gap on the 5-bus case."""
import math

from gridopt.acval import dc_ac_gap, linearization_gap
from gridopt.cases import load_fixture
from gridopt.dcopf import solve_dcopf_angle
from gridopt.netmodel import to_per_unit


def main():
    print(f"{'delta':>8} {'sin':>8} {'abs err':>9} {'rel err':>8}")
    for row in linearization_gap([0.05, 0.1, 0.2, math.pi / 6, 0.7, 1.0]):
        flag = "  beyond pi/6" if row.beyond_limit else ""
        print(f"{row.delta:8.4f} {row.sin_delta:8.4f} {row.abs_error:9.2e} {row.rel_error:8.2%}{flag}")
    net = to_per_unit(load_fixture("5bus"))
    gap = dc_ac_gap(net, solve_dcopf_angle(net))
    print("\n5-bus dispatch, MW:")
    for lbl, dc, ac in zip(gap.labels, gap.dc_flow, gap.sine_flow):
        print(f"  {lbl:>4}  dc {dc * net.base_mva:8.3f}  sine {ac * net.base_mva:8.3f}")
    print(f"  max gap {gap.max_gap * net.base_mva:.3f} MW, hidden overloads: {gap.hidden_overloads or 'none'}")


if __name__ == "__main__":
    main()
