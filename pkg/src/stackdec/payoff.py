"""Defender/attacker values, normalization and the payoff matrices."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cvss import exploit_probability_v2, exploit_probability_v3
from .errors import DomainError, MissingData
from .scenario import CvssVersion, Scenario


class Provenance(str, enum.Enum):
    COMPUTED = "computed"
    OVERRIDE = "override"


@dataclass(frozen=True)
class UtilityProfile:
    exploit_prob: float
    v_d_raw: float | None
    v_a_raw: float | None
    v_d_norm: float
    v_a_norm: float
    provenance: Provenance


@dataclass(frozen=True)
class PayoffMatrices:
    """``r_d[j, i]`` / ``r_a[j, i]``: defender deceives on j, attacker exploits i."""

    r_d: np.ndarray
    r_a: np.ndarray
    labels: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.r_d.shape[0]

    @classmethod
    def from_arrays(cls, r_d, r_a, labels: Sequence[str] | None = None) -> "PayoffMatrices":
        r_d = np.array(r_d, dtype=float)
        r_a = np.array(r_a, dtype=float)
        if r_d.shape != r_a.shape or r_d.ndim != 2:
            raise ValueError(f"payoff shapes differ or are not 2-D: {r_d.shape} vs {r_a.shape}")
        if labels is None:
            labels = tuple(f"a{k + 1}" for k in range(r_d.shape[1]))
        r_d.flags.writeable = False
        r_a.flags.writeable = False
        return cls(r_d, r_a, tuple(labels))


def _check_prob(pr: float) -> None:
    if not 0.0 <= pr <= 1.0:
        raise DomainError(f"probability {pr} outside [0, 1]")


def _check_score(name: str, x: float) -> None:
    if not 0.0 <= x <= 10.0:
        raise DomainError(f"{name}={x} outside [0, 10]")


def defender_value(pr: float, impact_score: float, r: float) -> float:
    """Expected defender outcome: lose the impact on success, earn ``r`` on failure."""
    _check_prob(pr)
    _check_score("impact_score", impact_score)
    if r < 0:
        raise DomainError(f"failure reward r={r} must be non-negative")
    return -1.0 * pr * impact_score + (1.0 - pr) * r


def attacker_value(pr: float, base_score: float, exploit_score: float) -> float:
    """Expected attacker gain: base score on success, exploitability cost on failure."""
    _check_prob(pr)
    _check_score("base_score", base_score)
    _check_score("exploit_score", exploit_score)
    return pr * base_score - (1.0 - pr) * exploit_score


def minmax_normalize(xs: Sequence[float], a: float, b: float) -> list[float]:
    """Affinely map ``min(xs) -> a`` and ``max(xs) -> b``.

    A constant input has no spread to map, so every element goes to the
    midpoint ``(a + b) / 2``.
    """
    if len(xs) == 0:
        raise ValueError("cannot normalize an empty list")
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    lo, hi = min(xs), max(xs)
    if hi == lo:
        return [(a + b) / 2.0] * len(xs)
    span = hi - lo
    return [a + (x - lo) / span * (b - a) for x in xs]


def build_profiles(s: Scenario) -> list[UtilityProfile]:
    version = s.cvss_version
    computed: dict[int, tuple[float, float, float]] = {}
    profiles: dict[int, UtilityProfile] = {}
    for k, v in enumerate(s.vulnerabilities):
        o = v.override(version)
        if o is not None:
            profiles[k] = UtilityProfile(o.p, None, None, o.vd, o.va, Provenance.OVERRIDE)
            continue
        vector, scores = v.vector(version), v.scores(version)
        if vector is None or scores is None:
            raise MissingData(f"{v.id}: no {version.value} override and no vector+scores")
        if version is CvssVersion.V2:
            pr = exploit_probability_v2(vector)
        else:
            pr = exploit_probability_v3(vector, s.v3_weights)
        computed[k] = (pr,
                       defender_value(pr, scores.impact_score, v.r),
                       attacker_value(pr, scores.base_score, scores.exploitability_score))
    if computed:
        keys = list(computed)
        vd = minmax_normalize([computed[k][1] for k in keys], *s.vd_range)
        va = minmax_normalize([computed[k][2] for k in keys], *s.va_range)
        for k, d, a in zip(keys, vd, va):
            pr, d_raw, a_raw = computed[k]
            profiles[k] = UtilityProfile(pr, d_raw, a_raw, d, a, Provenance.COMPUTED)
    return [profiles[k] for k in range(s.n)]


def build_payoff_matrices(s: Scenario, profiles: Sequence[UtilityProfile] | None = None) -> PayoffMatrices:
    if profiles is None:
        profiles = build_profiles(s)
    if len(profiles) != s.n:
        raise ValueError(f"{len(profiles)} profiles for {s.n} vulnerabilities")
    v_a = np.array([p.v_a_norm for p in profiles])
    v_d = np.array([p.v_d_norm for p in profiles])
    c_d = np.array([v.c_d for v in s.vulnerabilities])
    c_a = np.array([v.c_a for v in s.vulnerabilities])
    hit = np.eye(s.n, dtype=bool)
    # rows: defender action j, columns: attacker action i
    r_d = np.where(hit, s.cap * v_a[:, None], s.esc * v_d[None, :]) - c_d[:, None] + c_a[None, :]
    r_a = np.where(hit, -s.cap * v_a[None, :], s.esc * v_a[None, :]) + c_d[:, None] - c_a[None, :]
    return PayoffMatrices.from_arrays(r_d, r_a, s.ids)
