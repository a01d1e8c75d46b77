"""Strong Stackelberg equilibrium via one LP per attacker action, plus baselines.

The defender (leader) commits to a mixed strategy over deception placements;
the attacker observes it and plays a best response, breaking ties in the
defender's favour.  For every attacker action ``t`` an LP finds the best
defender strategy that keeps ``t`` a best response; the best feasible LP wins.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import GridTooLarge, NoFeasibleAction
from .lp import LinearProgram, LpStatus, solve_lp
from .payoff import PayoffMatrices

TIE_TOL = 1e-9
STRATEGY_TOL = 1e-9
DEFAULT_GRID_BUDGET = 20_000_000


@dataclass(frozen=True)
class ActionLp:
    action: int
    status: LpStatus
    value: float


@dataclass(frozen=True)
class StackelbergSolution:
    defender_strategy: np.ndarray
    attacker_action: int
    defender_utility: float
    attacker_utility: float
    per_action: tuple[ActionLp, ...] = field(default=())

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.defender_strategy > 0))


def _index_set(indices: Iterable[int] | None, n: int, what: str) -> np.ndarray:
    if indices is None:
        return np.arange(n)
    idx = np.array(sorted(set(int(i) for i in indices)), dtype=np.int64)
    if idx.size == 0:
        raise ValueError(f"{what} action set is empty")
    if idx[0] < 0 or idx[-1] >= n:
        raise IndexError(f"{what} action index out of range 0..{n - 1}")
    return idx


def as_strategy(x: Sequence[float], n: int | None = None) -> np.ndarray:
    """Validate a defender mixed strategy and clamp round-off negatives to zero."""
    x = np.array(x, dtype=float)
    if x.ndim != 1 or (n is not None and x.size != n):
        raise ValueError(f"strategy must be a vector of length {n}")
    if np.any(x < -STRATEGY_TOL) or np.any(x > 1 + STRATEGY_TOL):
        raise ValueError("strategy entries must lie in [0, 1]")
    if abs(x.sum() - 1.0) > STRATEGY_TOL:
        raise ValueError(f"strategy sums to {x.sum()!r}, not 1")
    return np.clip(x, 0.0, 1.0)


def best_response(m: PayoffMatrices, x: Sequence[float],
                  allowed_attacker: Iterable[int] | None = None) -> int:
    """Attacker action maximising its expected reward against ``x``.

    Near-ties (within ``TIE_TOL``) go to the action better for the defender,
    then to the lowest index.
    """
    x = np.asarray(x, dtype=float)
    cols = _index_set(allowed_attacker, m.n, "attacker")
    ua = x @ m.r_a[:, cols]
    ud = x @ m.r_d[:, cols]
    tied = ua >= ua.max() - TIE_TOL
    return int(cols[np.argmax(np.where(tied, ud, -np.inf))])


def evaluate_strategy(m: PayoffMatrices, x: Sequence[float],
                      allowed_attacker: Iterable[int] | None = None) -> tuple[float, int]:
    """Defender utility of committing to ``x`` and the attacker action it induces."""
    x = np.asarray(x, dtype=float)
    t = best_response(m, x, allowed_attacker)
    return float(x @ m.r_d[:, t]), t


def uniform_strategy(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n >= 1 required")
    return np.full(n, 1.0 / n)


def greedy_strategy(m: PayoffMatrices, allowed_defender: Iterable[int] | None = None,
                    allowed_attacker: Iterable[int] | None = None) -> np.ndarray:
    """Best pure commitment: the single deception placement with highest utility."""
    rows = _index_set(allowed_defender, m.n, "defender")
    best_j, best_u = -1, -math.inf
    for j in rows:
        x = np.zeros(m.n)
        x[j] = 1.0
        u, _ = evaluate_strategy(m, x, allowed_attacker)
        if u > best_u:
            best_j, best_u = int(j), u
    x = np.zeros(m.n)
    x[best_j] = 1.0
    return x


def action_lp(m: PayoffMatrices, target: int, rows: np.ndarray, cols: np.ndarray) -> LinearProgram:
    """LP for ``target``: best defender strategy on ``rows`` keeping ``target`` a best response."""
    ra = m.r_a[rows]
    ineq = [(ra[:, target] - ra[:, t], 0.0) for t in cols if t != target]
    return LinearProgram(
        objective=m.r_d[rows, target],
        eq_constraints=[(np.ones(rows.size), 1.0)],
        ineq_constraints=ineq,
        bounds=[(0.0, 1.0)] * rows.size,
    )


def solve_stackelberg(m: PayoffMatrices, allowed_defender: Iterable[int] | None = None,
                      allowed_attacker: Iterable[int] | None = None, *,
                      backend: str | None = None) -> StackelbergSolution:
    rows = _index_set(allowed_defender, m.n, "defender")
    cols = _index_set(allowed_attacker, m.n, "attacker")
    per_action = []
    candidates = {}
    for t in cols:
        sol = solve_lp(action_lp(m, int(t), rows, cols), backend=backend)
        per_action.append(ActionLp(int(t), sol.status, sol.objective_value))
        if sol.optimal:
            candidates[int(t)] = sol.x
    unstable = [m.labels[a.action] for a in per_action if a.status is LpStatus.NUMERICAL]
    if unstable:
        warnings.warn(f"best-response LPs for {', '.join(unstable)} were numerically unstable and skipped; "
                      "payoff differences may be below float precision", RuntimeWarning, stacklevel=2)
    if not candidates:
        raise NoFeasibleAction("no attacker action admits a feasible best-response LP")

    values = {a.action: a.value for a in per_action if a.action in candidates}
    top = max(values.values())
    target = min(t for t, v in values.items() if v >= top - TIE_TOL)
    x = np.zeros(m.n)
    x[rows] = np.clip(candidates[target], 0.0, 1.0)
    # rounding can leave the sum a few ulps off 1
    x /= x.sum()
    return StackelbergSolution(
        defender_strategy=x,
        attacker_action=target,
        defender_utility=float(x @ m.r_d[:, target]),
        attacker_utility=float(x @ m.r_a[:, target]),
        per_action=tuple(per_action),
    )


def grid_points(steps: int, parts: int) -> int:
    return math.comb(steps + parts - 1, parts - 1)


def brute_force_sse(m: PayoffMatrices, grid_step: float,
                    allowed_defender: Iterable[int] | None = None,
                    allowed_attacker: Iterable[int] | None = None, *,
                    budget: int = DEFAULT_GRID_BUDGET,
                    backend: str | None = None) -> StackelbergSolution:
    """Oracle: scan every defender strategy on a simplex grid of width ``grid_step``.

    Independent of the LP path; only meant for small games.
    """
    if not 0 < grid_step <= 0.5:
        raise ValueError("grid_step must lie in (0, 0.5]")
    steps = round(1.0 / grid_step)
    if abs(steps * grid_step - 1.0) > 1e-9:
        raise ValueError(f"1/grid_step must be an integer, got {1.0 / grid_step!r}")
    rows = _index_set(allowed_defender, m.n, "defender")
    cols = _index_set(allowed_attacker, m.n, "attacker")
    n_points = grid_points(steps, rows.size)
    if n_points > budget:
        raise GridTooLarge(f"{n_points} grid points exceed the budget of {budget}")
    engine = kernels.get_backend(backend)
    counts, value, action, _ = engine.grid_search(m.r_d, m.r_a, rows, cols, steps, TIE_TOL)
    x = np.zeros(m.n)
    x[rows] = np.asarray(counts, dtype=float) / steps
    return StackelbergSolution(
        defender_strategy=x,
        attacker_action=int(action),
        defender_utility=float(x @ m.r_d[:, action]),
        attacker_utility=float(x @ m.r_a[:, action]),
    )
