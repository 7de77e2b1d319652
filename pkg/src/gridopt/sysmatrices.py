"""System matrices of the DC and AC network models.

DC side: bus susceptance ``B_bus``, line susceptance ``B_line``, zero-padded
bus reactance ``X_bus`` and the PTDF matrix. AC side: bus admittance
``Y_bus`` and the two directed line admittance matrices of the pi model.
All builders expect per-unit networks (only impedances are used, which are
per unit in the case file anyway).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .densecore import Matrix, invert
from .netmodel import CaseError, Network


def _line_ends(net: Network):
    idx = net.bus_index
    for ln in net.lines:
        yield idx[ln.from_bus], idx[ln.to_bus], ln


def build_b_bus(net: Network) -> Matrix:
    """N x N bus susceptance matrix with b = 1/x (resistance ignored)."""
    n = len(net.buses)
    b = np.zeros((n, n))
    for i, j, ln in _line_ends(net):
        b[i, i] += ln.b
        b[j, j] += ln.b
        b[i, j] -= ln.b
        b[j, i] -= ln.b
    ids = tuple(net.bus_ids)
    return Matrix(b, ids, ids)


def build_b_line(net: Network) -> Matrix:
    """L x N map from bus angles to line flows, ``P_line = B_line @ theta``."""
    m = np.zeros((len(net.lines), len(net.buses)))
    for k, (i, j, ln) in enumerate(_line_ends(net)):
        m[k, i] = ln.b
        m[k, j] = -ln.b
    return Matrix(m, tuple(net.line_labels()), tuple(net.bus_ids))


def build_x_bus(b_bus: Matrix, slack: int) -> Matrix:
    """Invert ``B_bus`` with the slack row/column removed, then pad zeros back.

    Raises :class:`~gridopt.densecore.SingularMatrixError` when the network
    is disconnected.
    """
    if b_bus.row_labels is None:
        raise ValueError("b_bus must carry bus labels")
    if slack not in b_bus.row_labels:
        raise CaseError(f"slack bus {slack} is not a bus of the network")
    s = b_bus.row_of(slack)
    keep = [k for k in range(b_bus.rows) if k != s]
    x = np.zeros_like(b_bus.data)
    if keep:
        x[np.ix_(keep, keep)] = invert(b_bus.data[np.ix_(keep, keep)])
    return Matrix(x, b_bus.row_labels, b_bus.col_labels)


@dataclass(frozen=True, eq=False)
class PtdfMatrix:
    matrix: Matrix
    slack: int

    @property
    def data(self) -> np.ndarray:
        return self.matrix.data

    @property
    def line_labels(self) -> tuple:
        return self.matrix.row_labels

    @property
    def bus_ids(self) -> tuple:
        return self.matrix.col_labels

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def build_ptdf(net: Network, slack: Optional[int] = None) -> PtdfMatrix:
    """PTDF = B_line @ X_bus for the given slack (defaults to the case slack)."""
    slack = net.slack if slack is None else slack
    b_line = build_b_line(net)
    x_bus = build_x_bus(build_b_bus(net), slack)
    return PtdfMatrix(Matrix(b_line.data @ x_bus.data, b_line.row_labels, b_line.col_labels), slack)


def _resolve_line(lines, line):
    """Accept a line index, a label ``"i-j"``, or an ``(i, j)`` pair."""
    if isinstance(line, (int, np.integer)):
        return int(line)
    if isinstance(line, str):
        return lines.index(line)
    i, j = line[0], line[1]
    return lines.index(f"{i}-{j}")


def ptdf_element(x_bus: Matrix, line, m: int, n: int) -> float:
    """Sensitivity of the flow on ``line = (i, j, x_ij)`` to an m -> n transfer.

    Uses ``(X_im - X_jm - X_in + X_jn) / x_ij``.
    """
    i, j, x_ij = line
    labels = x_bus.row_labels
    for bus in (i, j, m, n):
        if bus not in labels:
            raise CaseError(f"unknown bus {bus}")
    X = x_bus.at
    return (X(i, m) - X(j, m) - X(i, n) + X(j, n)) / x_ij


def ptdf_pair(p: PtdfMatrix, line, m: int, n: int) -> float:
    """``PTDF_{l,m} - PTDF_{l,n}``: flow change on ``line`` for a transfer m -> n."""
    try:
        row = _resolve_line(list(p.line_labels), line)
        cm, cn = p.matrix.col_of(m), p.matrix.col_of(n)
    except ValueError:
        raise CaseError(f"unknown line or bus: {line!r}, {m}, {n}") from None
    return float(p.data[row, cm] - p.data[row, cn])


def ptdf_flows(p: PtdfMatrix, injections, tol: float = 1e-9) -> np.ndarray:
    """Line flows for a balanced vector of net bus injections."""
    inj = np.asarray(injections, dtype=float)
    if inj.shape != (p.data.shape[1],):
        raise ValueError("injection vector length does not match bus count")
    if abs(inj.sum()) > tol:
        raise ValueError(f"unbalanced injections (sum = {inj.sum():.3g})")
    return p.data @ inj


# ---------------------------------------------------------------- AC side

def _series_admittance(ln) -> complex:
    return 1.0 / complex(ln.r, ln.x)


def build_y_bus(net: Network) -> Matrix:
    """Complex bus admittance matrix with half-shunts at each line end."""
    n = len(net.buses)
    y = np.zeros((n, n), dtype=complex)
    for i, j, ln in _line_ends(net):
        ys = _series_admittance(ln)
        ysh = 0.5j * ln.b_sh
        y[i, i] += ys + ysh
        y[j, j] += ys + ysh
        y[i, j] -= ys
        y[j, i] -= ys
    ids = tuple(net.bus_ids)
    return Matrix(y, ids, ids)


def build_y_line(net: Network, direction: str = "forward") -> Matrix:
    """L x N directed line admittance matrix; ``I_dir = Y_line @ V``.

    forward rows give the current leaving the from-bus, reverse rows the
    current leaving the to-bus.
    """
    if direction not in ("forward", "reverse"):
        raise ValueError("direction must be 'forward' or 'reverse'")
    y = np.zeros((len(net.lines), len(net.buses)), dtype=complex)
    for k, (i, j, ln) in enumerate(_line_ends(net)):
        ys = _series_admittance(ln)
        near, far = (i, j) if direction == "forward" else (j, i)
        y[k, near] = 0.5j * ln.b_sh + ys
        y[k, far] = -ys
    return Matrix(y, tuple(net.line_labels()), tuple(net.bus_ids))
