"""Critical-vulnerability search, Cap/Esc sweeps, layer and baseline comparisons."""
from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import TooFewActions
from .payoff import PayoffMatrices, build_payoff_matrices, build_profiles
from .scenario import CvssVersion, Layer, Scenario, restrict_layer
from .solver import (
    TIE_TOL,
    evaluate_strategy,
    greedy_strategy,
    solve_stackelberg,
    uniform_strategy,
)

# Removal utilities reported for the reference scenario, keyed by removed action.
PUBLISHED_REMOVAL_UTILITIES = {
    CvssVersion.V2: {"a1": -46.4, "a2": -53.8, "a3": -50.1, "a4": -48.6,
                     "a5": -47.04, "a6": -50.48, "a7": -52.1, "a8": -52.1},
    CvssVersion.V3: {"a1": -26.59, "a2": -28.49, "a3": -48.94, "a4": -48.94,
                     "a5": -26.49, "a6": -48.94, "a7": -48.94, "a8": -48.94},
}

# Baseline utilities reported for the reference scenario.
PUBLISHED_BASELINE_UTILITIES = {
    CvssVersion.V2: {"URS": -60.25, "GS": -58.0, "SG": -52.1},
    CvssVersion.V3: {"URS": -87.0, "GS": -102.0, "SG": -48.94},
}

DEFAULT_GRID = tuple(float(v) for v in range(1, 11))


@dataclass(frozen=True)
class CriticalReport:
    removal_utilities: dict[str, float]
    critical_action: str
    base_utility: float

    @property
    def critical_index(self) -> int:
        return list(self.removal_utilities).index(self.critical_action)


@dataclass(frozen=True)
class SweepRow:
    cvss_version: str
    cap: float
    esc: float
    defender_utility: float
    attacker_action: str
    defender_strategy: tuple[float, ...]


@dataclass(frozen=True)
class LayerComparison:
    utility_coordinated: float
    utility_cyber_only: float
    utility_physical_only: float


@dataclass(frozen=True)
class BaselineRow:
    method: str
    strategy: tuple[float, ...]
    defender_utility: float
    attacker_action: str


def removal_utilities(m: PayoffMatrices, order: Sequence[int] | None = None) -> dict[int, float]:
    """Defender SSE utility after deleting each attacker action in turn.

    The defender keeps its full action set; only the attacker loses an option.
    """
    order = range(m.n) if order is None else order
    everything = set(range(m.n))
    return {a: solve_stackelberg(m, allowed_attacker=everything - {a}).defender_utility
            for a in order}


def pick_critical(utilities: dict[int, float]) -> int:
    top = max(utilities.values())
    return min(a for a, u in utilities.items() if u >= top - TIE_TOL)


def critical_from_matrices(m: PayoffMatrices) -> CriticalReport:
    if m.n < 2:
        raise TooFewActions(f"need at least 2 attacker actions, got {m.n}")
    if m.n == 2:
        warnings.warn("with 2 actions every removal leaves a single-action game", stacklevel=2)
    utilities = removal_utilities(m)
    a_star = pick_critical(utilities)
    return CriticalReport(
        removal_utilities={m.labels[a]: u for a, u in sorted(utilities.items())},
        critical_action=m.labels[a_star],
        base_utility=solve_stackelberg(m).defender_utility,
    )


def most_critical_vulnerability(s: Scenario) -> CriticalReport:
    return critical_from_matrices(build_payoff_matrices(s))


def _solve_cell(args) -> SweepRow:
    s, profiles, cap, esc = args
    cell = s.with_params(cap=cap, esc=esc)
    m = build_payoff_matrices(cell, profiles)
    sol = solve_stackelberg(m)
    return SweepRow(s.cvss_version.value, cap, esc, sol.defender_utility,
                    m.labels[sol.attacker_action], tuple(float(p) for p in sol.defender_strategy))


def sweep(s: Scenario, cap_values: Iterable[float] = DEFAULT_GRID,
          esc_values: Iterable[float] = DEFAULT_GRID, jobs: int = 1) -> list[SweepRow]:
    """Re-solve on every (cap, esc) cell; rows come back cap-major regardless of ``jobs``."""
    caps = [float(c) for c in cap_values]
    escs = [float(e) for e in esc_values]
    if not caps or not escs:
        raise ValueError("cap and esc value lists must be non-empty")
    if min(caps) < 0 or min(escs) < 0:
        raise ValueError("cap and esc values must be non-negative")
    profiles = build_profiles(s)
    cells = [(s, profiles, c, e) for c in caps for e in escs]
    if jobs <= 1:
        return [_solve_cell(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_solve_cell, cells, chunksize=max(1, len(cells) // (4 * jobs))))


def compare_layers(s: Scenario) -> LayerComparison:
    m = build_payoff_matrices(s)
    cyber = restrict_layer(s, Layer.CYBER)
    physical = restrict_layer(s, Layer.PHYSICAL)
    return LayerComparison(
        utility_coordinated=solve_stackelberg(m).defender_utility,
        utility_cyber_only=solve_stackelberg(m, allowed_defender=cyber).defender_utility,
        utility_physical_only=solve_stackelberg(m, allowed_defender=physical).defender_utility,
    )


def compare_baselines(m: PayoffMatrices) -> list[BaselineRow]:
    """URS, GS and SG rows, each evaluated against a best-responding attacker."""
    rows = []
    for method, x in (("URS", uniform_strategy(m.n)), ("GS", greedy_strategy(m))):
        u, t = evaluate_strategy(m, x)
        rows.append(BaselineRow(method, tuple(float(p) for p in x), u, m.labels[t]))
    sol = solve_stackelberg(m)
    rows.append(BaselineRow("SG", tuple(float(p) for p in sol.defender_strategy),
                            sol.defender_utility, m.labels[sol.attacker_action]))
    return rows


def support_size(strategy: Sequence[float]) -> int:
    return int(np.count_nonzero(np.asarray(strategy) > 0))
