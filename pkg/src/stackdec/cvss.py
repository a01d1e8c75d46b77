"""CVSS v2 / v3.x vector parsing, scoring and exploit probabilities."""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping

from .errors import (
    DuplicateMetric,
    IncompleteWeightTable,
    MissingMetric,
    UnknownMetric,
    UnknownValue,
)

V2_METRICS = ("AV", "AC", "Au", "C", "I", "A")
V3_METRICS = ("AV", "AC", "PR", "UI", "S", "C", "I", "A")

V2_WEIGHTS: dict[str, dict[str, float]] = {
    "AV": {"N": 1.0, "A": 0.646, "L": 0.395},
    "AC": {"L": 0.71, "M": 0.61, "H": 0.35},
    "Au": {"N": 0.704, "S": 0.56, "M": 0.45},
    "C": {"N": 0.0, "P": 0.275, "C": 0.660},
    "I": {"N": 0.0, "P": 0.275, "C": 0.660},
    "A": {"N": 0.0, "P": 0.275, "C": 0.660},
}

V3_WEIGHTS: dict[str, dict[str, float]] = {
    "AV": {"N": 0.85, "A": 0.62, "L": 0.55, "P": 0.2},
    "AC": {"L": 0.77, "H": 0.44},
    "PR": {"N": 0.85, "L": 0.62, "H": 0.27},
    "PR_CHANGED": {"N": 0.85, "L": 0.68, "H": 0.5},
    "UI": {"N": 0.85, "R": 0.62},
    "C": {"N": 0.0, "L": 0.22, "H": 0.56},
    "I": {"N": 0.0, "L": 0.22, "H": 0.56},
    "A": {"N": 0.0, "L": 0.22, "H": 0.56},
}

_V3_ALLOWED = {
    "AV": ("N", "A", "L", "P"),
    "AC": ("L", "H"),
    "PR": ("N", "L", "H"),
    "UI": ("N", "R"),
    "S": ("U", "C"),
    "C": ("N", "L", "H"),
    "I": ("N", "L", "H"),
    "A": ("N", "L", "H"),
}
_V2_ALLOWED = {m: tuple(V2_WEIGHTS[m]) for m in V2_METRICS}

# metrics whose weights enter the v3 exploit probability
PROBABILITY_METRICS_V3 = ("AV", "AC", "PR", "UI")


@dataclass(frozen=True)
class ScoreSet:
    base_score: float
    impact_score: float
    exploitability_score: float

    def __post_init__(self):
        for name in ("base_score", "impact_score", "exploitability_score"):
            value = getattr(self, name)
            if not 0.0 <= value <= 10.0:
                raise ValueError(f"{name}={value} outside [0, 10]")

    def to_dict(self) -> dict[str, float]:
        return {
            "base": self.base_score,
            "impact": self.impact_score,
            "exploitability": self.exploitability_score,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> "ScoreSet":
        return cls(float(data["base"]), float(data["impact"]), float(data["exploitability"]))


@dataclass(frozen=True)
class CvssV2Vector:
    av: str
    ac: str
    au: str
    c: str = "N"
    i: str = "N"
    a: str = "N"

    @property
    def weights(self) -> tuple[float, float, float, float, float, float]:
        w = V2_WEIGHTS
        return (w["AV"][self.av], w["AC"][self.ac], w["Au"][self.au],
                w["C"][self.c], w["I"][self.i], w["A"][self.a])

    def __str__(self) -> str:
        return format_v2(self)


@dataclass(frozen=True)
class CvssV3Vector:
    av: str
    ac: str
    pr: str
    ui: str
    scope: str
    c: str = "N"
    i: str = "N"
    a: str = "N"
    version: str | None = None

    @property
    def scope_changed(self) -> bool:
        return self.scope == "C"

    @property
    def weights(self) -> tuple[float, float, float, float]:
        """Weights of (AV, AC, PR, UI) under the FIRST v3.1 table."""
        return _v3_probability_weights(self, V3_WEIGHTS)

    def __str__(self) -> str:
        return format_v3(self)


def _split_metrics(vector_string: str, allowed: Mapping[str, tuple[str, ...]],
                   canonical: Mapping[str, str]) -> dict[str, str]:
    found: dict[str, str] = {}
    for token in vector_string.strip().split("/"):
        token = token.strip()
        if not token:
            continue
        if ":" not in token:
            raise UnknownMetric(token)
        key, _, value = token.partition(":")
        metric = canonical.get(key.strip().upper())
        if metric is None:
            raise UnknownMetric(token)
        value = value.strip().upper()
        if value not in allowed[metric]:
            raise UnknownValue(f"{key}:{value}")
        if metric in found:
            raise DuplicateMetric(token)
        found[metric] = value
    return found


def parse_v2(vector_string: str, lenient: bool = False) -> CvssV2Vector:
    """Parse ``AV:x/AC:x/Au:x/C:x/I:x/A:x`` (any order, case-insensitive values).

    In lenient mode omitted C/I/A default to None; AV, AC and Au are always required.
    """
    text = vector_string.strip()
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    found = _split_metrics(text, _V2_ALLOWED, {m.upper(): m for m in V2_METRICS})
    for metric in V2_METRICS:
        if metric not in found:
            if lenient and metric in ("C", "I", "A"):
                found[metric] = "N"
            else:
                raise MissingMetric(metric)
    return CvssV2Vector(found["AV"], found["AC"], found["Au"], found["C"], found["I"], found["A"])


def parse_v3(vector_string: str, lenient: bool = False) -> CvssV3Vector:
    """Parse a CVSS v3.x base vector, with or without the ``CVSS:3.x/`` prefix."""
    text = vector_string.strip()
    version = None
    head, sep, rest = text.partition("/")
    if head.upper().startswith("CVSS:"):
        version = head.split(":", 1)[1].strip()
        if version not in ("3.0", "3.1"):
            raise UnknownValue(head)
        text = rest if sep else ""
    found = _split_metrics(text, _V3_ALLOWED, {m: m for m in V3_METRICS})
    for metric in V3_METRICS:
        if metric not in found:
            if lenient and metric in ("C", "I", "A"):
                found[metric] = "N"
            else:
                raise MissingMetric(metric)
    return CvssV3Vector(found["AV"], found["AC"], found["PR"], found["UI"], found["S"],
                        found["C"], found["I"], found["A"], version=version)


def format_v2(v: CvssV2Vector) -> str:
    return f"AV:{v.av}/AC:{v.ac}/Au:{v.au}/C:{v.c}/I:{v.i}/A:{v.a}"


def format_v3(v: CvssV3Vector) -> str:
    body = f"AV:{v.av}/AC:{v.ac}/PR:{v.pr}/UI:{v.ui}/S:{v.scope}/C:{v.c}/I:{v.i}/A:{v.a}"
    return f"CVSS:{v.version}/{body}" if v.version else body


def exploit_probability_v2(v: CvssV2Vector) -> float:
    """2 * AV * AC * Au; at most 0.99968, so always a probability."""
    return 2.0 * V2_WEIGHTS["AV"][v.av] * V2_WEIGHTS["AC"][v.ac] * V2_WEIGHTS["Au"][v.au]


def check_weight_table(weights: Mapping[str, Mapping[str, float]]) -> None:
    """Raise IncompleteWeightTable unless every AV/AC/PR/UI value has a weight."""
    for metric in PROBABILITY_METRICS_V3:
        table = weights.get(metric)
        if table is None:
            raise IncompleteWeightTable(f"no weights for metric {metric}")
        missing = [val for val in _V3_ALLOWED[metric] if val not in table]
        if missing:
            raise IncompleteWeightTable(f"metric {metric} lacks values {missing}")
    changed = weights.get("PR_CHANGED")
    if changed is not None:
        missing = [val for val in _V3_ALLOWED["PR"] if val not in changed]
        if missing:
            raise IncompleteWeightTable(f"metric PR_CHANGED lacks values {missing}")


def _v3_probability_weights(v: CvssV3Vector, weights: Mapping[str, Mapping[str, float]]):
    pr_table = weights["PR"]
    if v.scope_changed:
        pr_table = weights.get("PR_CHANGED", pr_table)
    return (float(weights["AV"][v.av]), float(weights["AC"][v.ac]),
            float(pr_table[v.pr]), float(weights["UI"][v.ui]))


def exploit_probability_v3(v: CvssV3Vector,
                           weights: Mapping[str, Mapping[str, float]] | None = None) -> float:
    """AV * AC * PR * UI under FIRST v3.1 weights or an alternate table."""
    if weights is None:
        weights = V3_WEIGHTS
    else:
        check_weight_table(weights)
    av, ac, pr, ui = _v3_probability_weights(v, weights)
    return av * ac * pr * ui


def round1(x: float) -> float:
    """Round half-up to one decimal, as the CVSS v2 guide does."""
    return float(Decimal(repr(x)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def roundup(x: float) -> float:
    """CVSS v3.1 Roundup: smallest one-decimal number >= x, float-noise safe."""
    scaled = round(x * 100000)
    if scaled % 10000 == 0:
        return scaled / 100000.0
    return (math.floor(scaled / 10000) + 1) / 10.0


def scores_v2(v: CvssV2Vector) -> ScoreSet:
    w_av, w_ac, w_au, w_c, w_i, w_a = v.weights
    impact = 10.41 * (1 - (1 - w_c) * (1 - w_i) * (1 - w_a))
    exploitability = 20 * w_av * w_ac * w_au
    f_impact = 0.0 if impact == 0 else 1.176
    base = ((0.6 * impact) + (0.4 * exploitability) - 1.5) * f_impact
    return ScoreSet(max(round1(base), 0.0), min(round1(impact), 10.0), min(round1(exploitability), 10.0))


def scores_v3(v: CvssV3Vector) -> ScoreSet:
    w = V3_WEIGHTS
    iss = 1 - (1 - w["C"][v.c]) * (1 - w["I"][v.i]) * (1 - w["A"][v.a])
    if v.scope_changed:
        impact = 7.52 * (iss - 0.029) - 3.25 * (iss - 0.02) ** 15
    else:
        impact = 6.42 * iss
    av, ac, pr, ui = v.weights
    exploitability = 8.22 * av * ac * pr * ui
    if impact <= 0:
        base = 0.0
    elif v.scope_changed:
        base = roundup(min(1.08 * (impact + exploitability), 10.0))
    else:
        base = roundup(min(impact + exploitability, 10.0))
    return ScoreSet(base, max(round1(impact), 0.0), round1(exploitability))
