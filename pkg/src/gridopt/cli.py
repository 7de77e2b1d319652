"""``gridopt`` command line.

Exit codes: 0 ok/optimal, 1 infeasible or unbounded, 2 input error,
3 numerical error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .acval import sine_samples_csv, validation_report
from .dcopf import lmp_decompose, report_dict, solve_dcopf, verify_lmp_fd
from .densecore import Matrix, SingularMatrixError, matrix_to_csv, rows_to_csv
from .dispatch import economic_dispatch_lp, merit_order
from .lp import LpNumericalError
from .netmodel import CaseError, Network, load_case, to_per_unit
from .sysmatrices import build_b_bus, build_b_line, build_ptdf, build_x_bus, build_y_bus

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass
class RunConfig:
    subcommand: str
    cases: list
    slack: Optional[int] = None
    formulation: str = "angle"
    obj_scale: float = 1.0
    fd_eps: Optional[float] = None
    out: Optional[str] = None
    fmt: str = "json"
    jobs: int = 1
    method: str = "merit"
    report: Optional[str] = None
    sine_samples: Optional[str] = None


class _Failure(Exception):
    def __init__(self, code: int, message: str, payload=None):
        super().__init__(message)
        self.code = code
        self.payload = payload


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--case", nargs="+", required=True, help="case file(s), JSON")
    common.add_argument("--slack", type=int, help="override the slack bus id")
    common.add_argument("--out", help="output file (directory for 'matrices' CSV)")
    common.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    common.add_argument("--jobs", type=int, default=1, help="cases processed concurrently")
    common.add_argument("--obj-scale", type=float, default=1.0,
                        help="solver-internal objective scale; reported cost is unscaled")

    parser = argparse.ArgumentParser(prog="gridopt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gridopt {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("matrices", parents=[common], help="emit B_bus, B_line, X_bus, Y_bus")
    sub.add_parser("ptdf", parents=[common], help="emit the PTDF matrix")
    ed = sub.add_parser("ed", parents=[common], help="copperplate economic dispatch")
    ed.add_argument("--method", choices=("merit", "lp"), default="merit")
    dc = sub.add_parser("dcopf", parents=[common], help="DC optimal power flow with LMPs")
    dc.add_argument("--formulation", choices=("angle", "ptdf"), default="angle")
    dc.add_argument("--fd-check", dest="fd_eps", type=float, metavar="EPS",
                    help="verify LMPs by finite differences with load step EPS (p.u.)")
    val = sub.add_parser("validate", parents=[common], help="AC evaluation of a DC dispatch")
    val.add_argument("--report", help="dcopf JSON report with theta_rad; solved on the fly if omitted")
    val.add_argument("--sine-samples", help="also write (delta, sin delta) samples CSV here")
    sub.add_parser("curve", parents=[common], help="merit-order step curve CSV")
    return parser


def _config(ns: argparse.Namespace) -> RunConfig:
    if ns.obj_scale is None or not (ns.obj_scale > 0 and math.isfinite(ns.obj_scale)):
        raise _Failure(EXIT_INPUT, "--obj-scale must be positive")
    if ns.jobs < 1:
        raise _Failure(EXIT_INPUT, "--jobs must be at least 1")
    return RunConfig(
        subcommand=ns.subcommand, cases=list(ns.case), slack=ns.slack,
        formulation=getattr(ns, "formulation", "angle"), obj_scale=ns.obj_scale,
        fd_eps=getattr(ns, "fd_eps", None), out=ns.out, fmt=ns.fmt, jobs=ns.jobs,
        method=getattr(ns, "method", "merit"), report=getattr(ns, "report", None),
        sine_samples=getattr(ns, "sine_samples", None),
    )


# ---------------------------------------------------------------- subcommands

def _load(cfg: RunConfig, path: str) -> Network:
    net = load_case(path)
    if cfg.slack is not None:
        net = net.with_slack(cfg.slack)
    net.slack  # raises CaseError unless exactly one slack
    return net


def _matrix_json(m: Matrix) -> dict:
    data = m.data
    if np.iscomplexobj(data):
        values = [[[float(v.real), float(v.imag)] for v in row] for row in data]
    else:
        values = data.tolist()
    return {"rows": list(m.row_labels or []), "cols": list(m.col_labels or []), "data": values}


def _cmd_matrices(cfg, net):
    pu = to_per_unit(net)
    b_bus = build_b_bus(pu)
    mats = {
        "b_bus": b_bus,
        "b_line": build_b_line(pu),
        "x_bus": build_x_bus(b_bus, pu.slack),
        "y_bus": build_y_bus(pu),
    }
    if cfg.fmt == "csv":
        return {name: matrix_to_csv(m) for name, m in mats.items()}
    return {"version": __version__, "slack": pu.slack, **{k: _matrix_json(m) for k, m in mats.items()}}


def _cmd_ptdf(cfg, net):
    p = build_ptdf(to_per_unit(net))
    if cfg.fmt == "csv":
        return matrix_to_csv(p.matrix)
    return {"version": __version__, "slack": p.slack, "ptdf": _matrix_json(p.matrix)}


def _cmd_ed(cfg, net):
    if cfg.method == "merit":
        mo = merit_order(net)
        rep = {
            "version": __version__, "status": "optimal", "method": "merit", "slack": net.slack,
            "objective_per_h": mo.total_cost, "smp": mo.smp, "marginal_gen": mo.marginal_gen,
            "dispatch": [{"gen": k, "bus": g.bus, "p_mw": float(p)}
                         for k, (g, p) in enumerate(zip(net.generators, mo.dispatch))],
            "flags": mo.flags,
        }
    else:
        r = economic_dispatch_lp(net, obj_scale=cfg.obj_scale)
        rep = report_dict(r, net)
        rep["method"] = "lp"
        rep["smp"] = r.energy_price if r.optimal else None
        if not r.optimal:
            raise _Failure(EXIT_INFEASIBLE, f"economic dispatch {r.status}", rep)
    if cfg.fmt == "csv":
        return rows_to_csv(["gen", "bus", "p_mw"], [(d["gen"], d["bus"], d["p_mw"]) for d in rep["dispatch"]])
    return rep


def _cmd_dcopf(cfg, net):
    r = solve_dcopf(net, cfg.formulation, obj_scale=cfg.obj_scale)
    rep = report_dict(r, net)
    if not r.optimal:
        raise _Failure(EXIT_INFEASIBLE, f"DC-OPF {r.status}", rep)
    dec = lmp_decompose(r, build_ptdf(to_per_unit(net), r.slack))
    rep["lmp_decomposition"] = [{"bus": b, "energy": float(e), "congestion": float(c)}
                                for b, e, c in zip(dec.bus_ids, dec.energy, dec.congestion)]
    if cfg.fd_eps is not None:
        checks = verify_lmp_fd(net, r, cfg.fd_eps, obj_scale=cfg.obj_scale)
        rep["fd_check"] = [{
            "bus": c.bus, "status": c.status,
            "fd_price": c.fd_price if math.isfinite(c.fd_price) else None,
            "lmp": c.lmp, "rel_gap": c.rel_gap if math.isfinite(c.rel_gap) else None,
            "active_set_changed": bool(c.active_set_changed), "passed": bool(c.passed),
        } for c in checks]
    if cfg.fmt == "csv":
        return rows_to_csv(["bus", "price"], [(d["bus"], d["price"]) for d in rep["lmp"]])
    return rep


def _cmd_validate(cfg, net):
    if cfg.report:
        try:
            with open(cfg.report, encoding="utf-8") as fh:
                prior = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _Failure(EXIT_INPUT, f"cannot read report: {exc}") from None
        if "theta_rad" not in prior:
            raise _Failure(EXIT_INPUT, "report has no theta_rad; solve with --formulation angle")
        theta = np.array(prior["theta_rad"], dtype=float)
        slack = prior.get("slack", net.slack)
    else:
        r = solve_dcopf(net, "angle", obj_scale=cfg.obj_scale)
        if not r.optimal:
            raise _Failure(EXIT_INFEASIBLE, f"DC-OPF {r.status}", report_dict(r, net))
        theta, slack = r.theta, r.slack
    rep = {"version": __version__, **validation_report(net, theta, slack)}
    if cfg.sine_samples:
        Path(cfg.sine_samples).write_text(sine_samples_csv(), encoding="utf-8")
    if cfg.fmt == "csv":
        header = ["line", "dc_mw", "sine_mw", "gap_mw", "s_from_mva", "s_to_mva"]
        return rows_to_csv(header, [[d[h] for h in header] for d in rep["lines"]])
    return rep


def _cmd_curve(cfg, net):
    mo = merit_order(net)
    if cfg.fmt == "csv":
        return mo.curve_csv()
    return {"version": __version__, "slack": net.slack,
            "points": [{"cum_capacity_mw": a, "price": p} for a, p in mo.curve_points]}


COMMANDS = {
    "matrices": _cmd_matrices, "ptdf": _cmd_ptdf, "ed": _cmd_ed,
    "dcopf": _cmd_dcopf, "validate": _cmd_validate, "curve": _cmd_curve,
}


def _process(cfg: RunConfig, path: str):
    """Run one case; returns ``(exit_code, payload, message)``."""
    try:
        net = _load(cfg, path)
        return EXIT_OK, COMMANDS[cfg.subcommand](cfg, net), None
    except _Failure as exc:
        return exc.code, exc.payload, str(exc)
    except (CaseError, ValueError, OSError, KeyError) as exc:
        return EXIT_INPUT, None, f"{path}: {exc}"
    except (SingularMatrixError, LpNumericalError, ArithmeticError) as exc:
        return EXIT_NUMERIC, None, f"{path}: numerical error: {exc}"


# ---------------------------------------------------------------- output

def _render(payload) -> str:
    if isinstance(payload, str):
        return payload
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def _emit(cfg: RunConfig, results: list) -> None:
    payloads = [p for _, p, _ in results]
    if cfg.subcommand == "matrices" and cfg.fmt == "csv":
        if cfg.out and len(payloads) == 1 and payloads[0] is not None:
            outdir = Path(cfg.out)
            outdir.mkdir(parents=True, exist_ok=True)
            for name, text in payloads[0].items():
                (outdir / f"{name}.csv").write_text(text, encoding="utf-8", newline="\n")
            return
        payloads = ["".join(f"# {name}\n{text}" for name, text in p.items()) if p else p for p in payloads]
    if len(payloads) == 1:
        if payloads[0] is None:
            return
        text = _render(payloads[0])
    elif cfg.fmt == "json":
        text = _render(payloads)
    else:
        text = "".join(f"# {case}\n{_render(p) if p is not None else ''}" for case, p in zip(cfg.cases, payloads))
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = _config(ns)
    except _Failure as exc:
        print(f"gridopt: {exc}", file=sys.stderr)
        return exc.code

    if cfg.jobs > 1 and len(cfg.cases) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(lambda c: _process(cfg, c), cfg.cases))
    else:
        results = [_process(cfg, c) for c in cfg.cases]

    for _, _, msg in results:
        if msg:
            print(f"gridopt: {msg}", file=sys.stderr)
    try:
        _emit(cfg, results)
    except OSError as exc:
        print(f"gridopt: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return max(code for code, _, _ in results)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
