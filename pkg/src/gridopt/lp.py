"""Dense two-phase simplex with bounded variables and full dual information.

Problem form::

    minimize    c @ x
    subject to  A_eq @ x == b_eq
                A_ub @ x <= b_ub
                lb <= x <= ub          (either side may be infinite)

Dual conventions (all are sensitivities of the optimal objective f*):

* ``duals_eq[i]  =  d f* / d b_eq[i]``
* ``duals_ub[i]  = -d f* / d b_ub[i]``  (a shadow price, >= 0 at optimum)
* ``duals_bounds[j]`` is the reduced cost of x_j when it sits at a bound,
  i.e. ``d f* / d lb_j`` or ``d f* / d ub_j``; zero for basic variables.

Pivoting uses Bland's smallest-index rule for both the entering and the
leaving variable, so runs are deterministic and cannot cycle. Once the
simplex stops, the basic solution and the duals are recomputed from an LU
factorization of the final basis, which removes tableau round-off.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .densecore import SingularMatrixError, lu_factor, lu_solve, lu_solve_transpose

FEAS_TOL = 1e-8     # primal feasibility / phase-1 residual
OPT_TOL = 1e-9      # reduced-cost optimality
PIVOT_TOL = 1e-10   # smallest admissible pivot element
RATIO_TIE = 1e-12   # ratios closer than this count as ties

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"

_LOWER, _UPPER, _FREE, _BASIC = 0, 1, 2, 3


class LpNumericalError(ArithmeticError):
    """The simplex hit its iteration cap or a singular basis."""


@dataclass(eq=False)
class LpProblem:
    c: np.ndarray
    a_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    a_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.a_eq, self.b_eq = _rows(self.a_eq, self.b_eq, n, "eq")
        self.a_ub, self.b_ub = _rows(self.a_ub, self.b_ub, n, "ub")
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).copy()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).copy()
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(self.lb == np.inf) or np.any(self.ub == -np.inf):
            raise ValueError("bounds must not exclude every finite value")

    @property
    def n(self) -> int:
        return self.c.size


def _rows(a, b, n, what):
    if a is None:
        if b is not None and np.size(b):
            raise ValueError(f"b_{what} given without a_{what}")
        return np.zeros((0, n)), np.zeros(0)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if a.shape[1] != n or a.shape[0] != b.size:
        raise ValueError(f"a_{what}/b_{what} dimensions are inconsistent")
    return a, b


@dataclass(eq=False)
class LpSolution:
    status: str
    x: np.ndarray
    objective: float
    duals_eq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals_ub: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals_bounds: np.ndarray = field(default_factory=lambda: np.zeros(0))
    basis: tuple = ()
    degenerate: bool = False
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def dual_objective(self, p: LpProblem) -> float:
        """Objective of the dual at the reported multipliers (equals f* at optimum)."""
        at_lb = np.isclose(self.x, p.lb) & np.isfinite(p.lb)
        at_ub = ~at_lb & np.isclose(self.x, p.ub) & np.isfinite(p.ub)
        val = p.b_eq @ self.duals_eq - p.b_ub @ self.duals_ub
        val += self.duals_bounds[at_lb] @ p.lb[at_lb] + self.duals_bounds[at_ub] @ p.ub[at_ub]
        return float(val)


class _Simplex:
    def __init__(self, p: LpProblem):
        n, m_eq, m_ub = p.n, p.a_eq.shape[0], p.a_ub.shape[0]
        m = m_eq + m_ub
        self.n, self.m_eq, self.m_ub, self.m = n, m_eq, m_ub, m

        a = np.zeros((m, n + m_ub))
        a[:m_eq, :n] = p.a_eq
        a[m_eq:, :n] = p.a_ub
        a[m_eq:, n:] = np.eye(m_ub)
        b = np.concatenate([p.b_eq, p.b_ub])
        lo = np.concatenate([p.lb, np.zeros(m_ub)])
        hi = np.concatenate([p.ub, np.full(m_ub, np.inf)])

        # nonbasic starting point: finite lower bound, else finite upper, else 0
        status = np.where(np.isfinite(lo), _LOWER, np.where(np.isfinite(hi), _UPPER, _FREE))
        value = np.where(status == _LOWER, lo, np.where(status == _UPPER, hi, 0.0))
        value[n:] = 0.0
        resid = b - a[:, :n] @ value[:n]

        # slack columns start basic where the residual allows it, artificials elsewhere
        sign = np.ones(m)
        basis = np.empty(m, dtype=int)
        art_rows = []
        for i in range(m):
            if i >= m_eq and resid[i] >= 0:
                basis[i] = n + (i - m_eq)
            else:
                art_rows.append(i)
                if resid[i] < 0:
                    sign[i] = -1.0
        a *= sign[:, None]
        b = b * sign
        resid = resid * sign
        n_art = len(art_rows)
        art = np.zeros((m, n_art))
        for k, i in enumerate(art_rows):
            art[i, k] = 1.0
            basis[i] = n + m_ub + k
        self.a = np.hstack([a, art])
        self.b = b
        self.sign = sign
        self.n_struct = n + m_ub
        self.n_art = n_art
        self.lo = np.concatenate([lo, np.zeros(n_art)])
        self.hi = np.concatenate([hi, np.full(n_art, np.inf)])
        self.status = np.concatenate([status, np.full(n_art, _LOWER)])
        self.value = np.concatenate([value, np.zeros(n_art)])
        self.basis = basis
        self.status[basis] = _BASIC
        self.beta = resid.copy()
        self.tab = self.a.copy()
        self.iterations = 0
        self.max_iter = 50 * (m + self.a.shape[1]) + 100

    # one simplex run with the given costs; returns OPTIMAL or UNBOUNDED
    def run(self, cost: np.ndarray, allowed: np.ndarray) -> str:
        while True:
            if self.iterations > self.max_iter:
                raise LpNumericalError("simplex iteration limit reached")
            d = cost - cost[self.basis] @ self.tab if self.m else cost.copy()
            st = self.status
            eligible = allowed & (
                ((st == _LOWER) & (d < -OPT_TOL))
                | ((st == _UPPER) & (d > OPT_TOL))
                | ((st == _FREE) & (np.abs(d) > OPT_TOL))
            )
            cand = np.flatnonzero(eligible)
            if cand.size == 0:
                return OPTIMAL
            j = int(cand[0])
            direction = 1.0 if d[j] < 0 else -1.0
            self.iterations += 1
            if not self._step(j, direction):
                return UNBOUNDED

    def _step(self, j: int, direction: float) -> bool:
        col = self.tab[:, j] if self.m else np.zeros(0)
        rate = -direction * col  # change of each basic value per unit step
        t_best = np.inf
        leave_row = -1
        leave_to = _LOWER
        for i in range(self.m):
            r = rate[i]
            if abs(r) <= PIVOT_TOL:
                continue
            bv = self.basis[i]
            if r < 0:
                if not np.isfinite(self.lo[bv]):
                    continue
                t, to = max(self.beta[i] - self.lo[bv], 0.0) / -r, _LOWER
            else:
                if not np.isfinite(self.hi[bv]):
                    continue
                t, to = max(self.hi[bv] - self.beta[i], 0.0) / r, _UPPER
            if leave_row < 0 or t < t_best - RATIO_TIE:
                t_best, leave_row, leave_to = t, i, to
            elif t <= t_best + RATIO_TIE and bv < self.basis[leave_row]:
                t_best, leave_row, leave_to = min(t, t_best), i, to

        span = self.hi[j] - self.lo[j] if self.status[j] != _FREE else np.inf
        if span <= t_best + RATIO_TIE and np.isfinite(span):
            # bound flip, basis unchanged
            self.beta += rate * span
            if self.status[j] == _LOWER:
                self.status[j], self.value[j] = _UPPER, self.hi[j]
            else:
                self.status[j], self.value[j] = _LOWER, self.lo[j]
            return True
        if leave_row < 0:
            return False

        t = t_best
        self.beta += rate * t
        entering_value = self.value[j] + direction * t
        bv = self.basis[leave_row]
        self.status[bv] = leave_to
        self.value[bv] = self.lo[bv] if leave_to == _LOWER else self.hi[bv]
        self._pivot(leave_row, j)
        self.beta[leave_row] = entering_value
        return True

    def _pivot(self, r: int, j: int):
        tab = self.tab
        piv = tab[r, j]
        tab[r] /= piv
        colj = tab[:, j].copy()
        colj[r] = 0.0
        tab -= np.outer(colj, tab[r])
        self.basis[r] = j
        self.status[j] = _BASIC

    def drive_out_artificials(self):
        """Pivot zero-valued artificials out of the basis where possible."""
        for r in range(self.m):
            if self.basis[r] < self.n_struct:
                continue
            row = self.tab[r, :self.n_struct]
            cand = [k for k in np.flatnonzero(np.abs(row) > 1e-8) if self.status[k] != _BASIC]
            if not cand:
                continue  # redundant row; artificial stays basic at zero
            j = int(cand[0])
            art = self.basis[r]
            self.status[art] = _LOWER
            self.value[art] = 0.0
            self._pivot(r, j)
            self.beta[r] = self.value[j]

    def refine(self, cost: np.ndarray):
        """Recompute basic values and row duals from an LU of the basis."""
        nonbasic = self.status != _BASIC
        rhs = self.b - self.a[:, nonbasic] @ self.value[nonbasic]
        if self.m:
            try:
                f = lu_factor(self.a[:, self.basis])
            except SingularMatrixError as exc:
                raise LpNumericalError(str(exc)) from None
            xb = lu_solve(f, rhs)
            y = lu_solve_transpose(f, cost[self.basis])
        else:
            xb, y = np.zeros(0), np.zeros(0)
        x = self.value.copy()
        x[self.basis] = xb
        return x, y


def solve_lp(p: LpProblem) -> LpSolution:
    """Solve ``p`` and return a status-tagged solution with duals."""
    s = _Simplex(p)
    n = p.n
    ncol = s.a.shape[1]

    if s.n_art:
        phase1 = np.zeros(ncol)
        phase1[s.n_struct:] = 1.0
        s.run(phase1, np.ones(ncol, dtype=bool))
        infeas = float(np.sum(s.beta[s.basis >= s.n_struct]))
        scale = max(1.0, float(np.max(np.abs(p.b_eq), initial=0.0)), float(np.max(np.abs(p.b_ub), initial=0.0)))
        if infeas > FEAS_TOL * scale:
            return LpSolution(INFEASIBLE, np.full(n, np.nan), np.nan, iterations=s.iterations)
        s.drive_out_artificials()
        # artificials are pinned to zero for phase 2
        s.hi[s.n_struct:] = 0.0
        nb_art = s.status[s.n_struct:] != _BASIC
        s.status[s.n_struct:][nb_art] = _LOWER

    cost = np.zeros(ncol)
    cost[:n] = p.c
    allowed = np.ones(ncol, dtype=bool)
    allowed[s.n_struct:] = False
    if s.run(cost, allowed) == UNBOUNDED:
        return LpSolution(UNBOUNDED, np.full(n, np.nan), -np.inf, iterations=s.iterations)

    x_all, y_flipped = s.refine(cost)
    y = y_flipped * s.sign
    # reduced costs in the original (unflipped) rows
    a_orig = s.a[:, :n] * s.sign[:, None]
    d = p.c - a_orig.T @ y if s.m else p.c.copy()
    x = x_all[:n]
    at_bound = s.status[:n] != _BASIC
    duals_bounds = np.where(at_bound, d, 0.0)

    degenerate = False
    for i, bv in enumerate(s.basis):
        val = x_all[bv]
        lo, hi = s.lo[bv], s.hi[bv]
        tol = FEAS_TOL * max(1.0, abs(val))
        if (np.isfinite(lo) and abs(val - lo) <= tol) or (np.isfinite(hi) and abs(val - hi) <= tol):
            degenerate = True
            break

    return LpSolution(
        status=OPTIMAL,
        x=x,
        objective=float(p.c @ x),
        duals_eq=y[:s.m_eq].copy(),
        duals_ub=-y[s.m_eq:].copy(),
        duals_bounds=duals_bounds,
        basis=tuple(sorted(int(b) for b in s.basis)),
        degenerate=degenerate,
        iterations=s.iterations,
    )
