"""Dense two-phase simplex for small linear programs."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels

PIVOT_TOL = 1e-9
MAX_ITER = 10_000


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL = "numerical"


@dataclass
class LinearProgram:
    """maximize objective @ x subject to

    * ``coeffs @ x == rhs`` for each ``(coeffs, rhs)`` in ``eq_constraints``
    * ``coeffs @ x >= rhs`` for each ``(coeffs, rhs)`` in ``ineq_constraints``
    * ``lo <= x_k <= hi`` per variable (infinite bounds allowed; default ``[0, inf)``)
    """

    objective: Sequence[float]
    eq_constraints: list[tuple[Sequence[float], float]] = field(default_factory=list)
    ineq_constraints: list[tuple[Sequence[float], float]] = field(default_factory=list)
    bounds: list[tuple[float, float]] | None = None

    def __post_init__(self):
        n = len(self.objective)
        if self.bounds is None:
            self.bounds = [(0.0, math.inf)] * n
        if len(self.bounds) != n:
            raise ValueError(f"expected {n} bounds, got {len(self.bounds)}")
        for lo, hi in self.bounds:
            if lo > hi:
                raise ValueError(f"bound lo={lo} exceeds hi={hi}")
        for coeffs, _ in list(self.eq_constraints) + list(self.ineq_constraints):
            if len(coeffs) != n:
                raise ValueError(f"constraint has {len(coeffs)} coefficients, expected {n}")

    @property
    def n(self) -> int:
        return len(self.objective)


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective_value: float
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


_STATUS = {
    kernels.STATUS_OPTIMAL: LpStatus.OPTIMAL,
    kernels.STATUS_UNBOUNDED: LpStatus.UNBOUNDED,
    kernels.STATUS_ITERATION_LIMIT: LpStatus.ITERATION_LIMIT,
}


def _substitute(lp: LinearProgram):
    """Rewrite x = offset + M @ y with y >= 0; returns (offset, M, upper bounds on y)."""
    n = lp.n
    columns: list[np.ndarray] = []
    upper: list[float] = []
    offset = np.zeros(n)
    for k, (lo, hi) in enumerate(lp.bounds):
        unit = np.zeros(n)
        unit[k] = 1.0
        if math.isfinite(lo):
            offset[k] = lo
            columns.append(unit)
            upper.append(hi - lo)
        elif math.isfinite(hi):
            offset[k] = hi
            columns.append(-unit)
            upper.append(math.inf)
        else:
            columns.append(unit)
            columns.append(-unit)
            upper.extend([math.inf, math.inf])
    M = np.array(columns).T if columns else np.zeros((n, 0))
    return offset, M, upper


def _build_rows(lp: LinearProgram, offset, M, upper):
    """Constraint rows in y-space as (coeffs, sense, rhs) with sense in {'E','G','L'}."""
    ny = M.shape[1]
    rows = []
    for coeffs, rhs in lp.eq_constraints:
        a = np.asarray(coeffs, dtype=float)
        rows.append((a @ M, "E", float(rhs) - a @ offset))
    for coeffs, rhs in lp.ineq_constraints:
        a = np.asarray(coeffs, dtype=float)
        rows.append((a @ M, "G", float(rhs) - a @ offset))
    for j, u in enumerate(upper):
        if math.isfinite(u):
            e = np.zeros(ny)
            e[j] = 1.0
            rows.append((e, "L", u))
    normalized = []
    for a, sense, b in rows:
        if b < 0:
            a, b = -a, -b
            sense = {"E": "E", "G": "L", "L": "G"}[sense]
        normalized.append((a, sense, b))
    return normalized


def solve_lp(lp: LinearProgram, *, rule: str = "bland", max_iter: int = MAX_ITER,
             tol: float = PIVOT_TOL, backend: str | None = None) -> LpSolution:
    """Solve ``lp`` with a two-phase dense tableau simplex.

    ``rule="bland"`` (default) uses Bland's smallest-index rule and cannot
    cycle; ``rule="dantzig"`` picks the most negative reduced cost and exists
    for demonstrating cycling.
    """
    engine = kernels.get_backend(backend)
    rules = {"bland": kernels.RULE_BLAND, "dantzig": kernels.RULE_DANTZIG}
    if rule not in rules:
        raise ValueError(f"unknown pivot rule {rule!r}; expected 'bland' or 'dantzig'")
    pivot_rule = rules[rule]
    c = np.asarray(lp.objective, dtype=float)
    offset, M, upper = _substitute(lp)
    rows = _build_rows(lp, offset, M, upper)
    ny = M.shape[1]
    m = len(rows)

    n_slack = sum(1 for _, sense, _ in rows if sense != "E")
    n_art = sum(1 for _, sense, _ in rows if sense != "L")
    n_real = ny + n_slack
    width = n_real + n_art
    T = np.zeros((m + 1, width + 1))
    basis = np.zeros(m, dtype=np.int64)
    art_rows = []
    s_col, a_col = ny, n_real
    for i, (a, sense, b) in enumerate(rows):
        T[i, :ny] = a
        T[i, -1] = b
        if sense == "L":
            T[i, s_col] = 1.0
            basis[i] = s_col
            s_col += 1
        else:
            if sense == "G":
                T[i, s_col] = -1.0
                s_col += 1
            T[i, a_col] = 1.0
            basis[i] = a_col
            art_rows.append(i)
            a_col += 1

    A = T[:m, :width].copy()
    b = T[:m, -1].copy()
    iterations = 0
    if art_rows:
        # phase 1: maximise -sum(artificials)
        cost1 = np.zeros(width)
        cost1[n_real:] = -1.0
        _set_objective(T, basis, cost1)
        status, T, iterations = _run_phase(engine, T, basis, A, b, cost1, n_real, max_iter, tol, pivot_rule)
        if status == _INFEASIBLE_BASIS or status == kernels.STATUS_ITERATION_LIMIT:
            return _failed(_phase_failure(status), lp.n, iterations)
        scale = max([1.0] + [rhs for _, _, rhs in rows])
        if T[m, -1] < -10 * tol * scale:
            return _failed(LpStatus.INFEASIBLE, lp.n, iterations)
        keep = []
        for i in range(m):
            if basis[i] >= n_real:
                row = np.abs(T[i, :n_real])
                j = int(np.argmax(row))
                if row[j] <= tol:
                    continue  # redundant equality
                engine.pivot(T, i, j)
                basis[i] = j
            keep.append(i)
        cols = list(range(n_real)) + [width]
        T = np.ascontiguousarray(T[np.ix_(keep + [m], cols)])
        basis = np.ascontiguousarray(basis[keep])
        A = np.ascontiguousarray(A[np.ix_(keep, range(n_real))])
        b = b[keep]
        m = len(keep)

    # phase 2: objective row holds z_j - c_j
    cost = np.zeros(n_real)
    cost[:ny] = c @ M
    _set_objective(T, basis, cost)
    status, T, its = _run_phase(engine, T, basis, A, b, cost, n_real, max_iter - iterations, tol, pivot_rule)
    iterations += its
    if status != kernels.STATUS_OPTIMAL:
        return _failed(_phase_failure(status), lp.n, iterations)
    y = np.zeros(n_real)
    y[basis] = T[:m, -1]
    x = offset + M @ np.clip(y[:ny], 0.0, None)
    return LpSolution(LpStatus.OPTIMAL, x, float(c @ x), iterations)


# Basis that looked optimal in the tableau but is primal infeasible once
# recomputed from the original rows.
_INFEASIBLE_BASIS = -1
REFINE_ROUNDS = 8
FEAS_TOL = 1e-9


def _phase_failure(status: int) -> LpStatus:
    return LpStatus.NUMERICAL if status == _INFEASIBLE_BASIS else _STATUS[status]


def _set_objective(T, basis, cost) -> None:
    m = T.shape[0] - 1
    n = cost.size
    T[m, :] = cost[basis] @ T[:m, :]
    T[m, :n] -= cost


def _rebuild(A, b, basis, cost):
    """Tableau for ``basis`` recomputed from the original rows, or None if singular."""
    m = A.shape[0]
    try:
        body = np.linalg.solve(A[:, basis], np.column_stack([A, b]))
    except np.linalg.LinAlgError:
        return None
    T = np.zeros((m + 1, A.shape[1] + 1))
    T[:m] = body
    T[:m, basis] = np.eye(m)
    _set_objective(T, basis, cost)
    return T


def _run_phase(engine, T, basis, A, b, cost, n_eligible, budget, tol, rule):
    """Pivot to optimality, then reinvert from the original data and resume if needed.

    Dense tableau updates drift when the data mix tiny and large coefficients,
    so the final basis is re-solved against ``A`` and ``b`` directly.
    """
    iterations = 0
    for _ in range(REFINE_ROUNDS):
        status, its = engine.run_simplex(T, basis, n_eligible, budget - iterations, tol, rule)
        iterations += its
        if status != kernels.STATUS_OPTIMAL:
            return status, T, iterations
        fresh = _rebuild(A, b, basis, cost)
        if fresh is None:
            return status, T, iterations
        T = fresh
        scale = 1.0 + np.abs(b).max(initial=0.0)
        if np.any(T[:-1, -1] < -FEAS_TOL * scale):
            # still dual feasible, so dual simplex pivots restore primal feasibility
            ok, its = _dual_simplex(engine, T, basis, A.shape[1], budget - iterations, tol, FEAS_TOL * scale)
            iterations += its
            if not ok:
                return _INFEASIBLE_BASIS, T, iterations
            continue
        T[:-1, -1] = np.maximum(T[:-1, -1], 0.0)
        if np.all(T[-1, :n_eligible] >= -tol):
            return status, T, iterations
    return kernels.STATUS_ITERATION_LIMIT, T, iterations


def _dual_simplex(engine, T, basis, n_eligible, budget, tol, feas_tol) -> tuple[bool, int]:
    """Dual simplex with smallest-index choices; False if no repair is possible."""
    m = T.shape[0] - 1
    for its in range(max(budget, 0)):
        neg = np.flatnonzero(T[:m, -1] < -feas_tol)
        if neg.size == 0:
            return True, its
        row = int(neg[np.argmin(basis[neg])])
        entries = T[row, :n_eligible]
        cand = np.flatnonzero(entries < -tol)
        if cand.size == 0:
            return False, its
        ratios = np.maximum(T[m, cand], 0.0) / -entries[cand]
        best = ratios.min()
        col = int(cand[np.flatnonzero(ratios <= best + tol)[0]])
        engine.pivot(T, row, col)
        basis[row] = col
    return False, max(budget, 0)


def _failed(status: LpStatus, n: int, iterations: int) -> LpSolution:
    return LpSolution(status, np.full(n, np.nan), math.nan, iterations)
