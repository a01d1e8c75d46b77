"""Game ground data: vulnerabilities, layers, costs and game parameters."""
from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from .cvss import (
    CvssV2Vector,
    CvssV3Vector,
    ScoreSet,
    check_weight_table,
    format_v2,
    format_v3,
    parse_v2,
    parse_v3,
    scores_v2,
    scores_v3,
)
from .errors import CvssError, EmptyLayer, IncompleteWeightTable, IoError, ParseError, ValidationError

CVE_ID_RE = re.compile(r"^CVE-\d{4}-\d{4,}$")


class Layer(str, enum.Enum):
    CYBER = "cyber"
    PHYSICAL = "physical"


class CvssVersion(str, enum.Enum):
    V2 = "v2"
    V3 = "v3"


@dataclass(frozen=True)
class Override:
    """Pre-computed exploit probability and normalized values for one CVSS version."""

    p: float
    vd: float
    va: float


@dataclass(frozen=True)
class Vulnerability:
    id: str
    cve_id: str
    layer: Layer
    r: float
    c_d: float
    c_a: float
    v2_vector: CvssV2Vector | None = None
    v3_vector: CvssV3Vector | None = None
    v2_scores: ScoreSet | None = None
    v3_scores: ScoreSet | None = None
    overrides: Mapping[CvssVersion, Override] = field(default_factory=dict)

    def vector(self, version: CvssVersion):
        return self.v2_vector if version is CvssVersion.V2 else self.v3_vector

    def scores(self, version: CvssVersion) -> ScoreSet | None:
        return self.v2_scores if version is CvssVersion.V2 else self.v3_scores

    def override(self, version: CvssVersion) -> Override | None:
        return self.overrides.get(version)


@dataclass(frozen=True)
class Scenario:
    cvss_version: CvssVersion
    cap: float
    esc: float
    vulnerabilities: tuple[Vulnerability, ...]
    vd_range: tuple[float, float] = (-10.0, -1.0)
    va_range: tuple[float, float] = (1.0, 10.0)
    v3_weights: Mapping[str, Mapping[str, float]] | None = None

    @property
    def n(self) -> int:
        return len(self.vulnerabilities)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.vulnerabilities)

    def with_params(self, **changes: Any) -> "Scenario":
        return replace(self, **changes)


# Defaults for quantities the source tables never publish.
LAYER_DEFAULTS = {
    Layer.CYBER: {"r": 1.0, "c_d": 0.5, "c_a": 0.5},
    Layer.PHYSICAL: {"r": 2.0, "c_d": 1.0, "c_a": 1.0},
}
DEFAULT_CAP = 5.0
DEFAULT_ESC = 5.0

_TOP_KEYS = {"cvss_version", "cap", "esc", "vd_range", "va_range", "v3_weights", "vulnerabilities"}
_VULN_KEYS = {"id", "cve", "layer", "v2_vector", "v3_vector", "scores", "r", "c_d", "c_a", "overrides"}


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _interval(value: Any, where: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ParseError(f"{where}: expected [lo, hi]")
    return _number(value[0], where), _number(value[1], where)


def _check_keys(data: Mapping[str, Any], allowed: set[str], where: str, strict: bool) -> None:
    if not isinstance(data, Mapping):
        raise ParseError(f"{where}: expected an object")
    unknown = sorted(set(data) - allowed)
    if strict and unknown:
        raise ParseError(f"{where}: unknown keys {unknown}")


def _vulnerability_from_dict(data: Mapping[str, Any], where: str, strict: bool) -> Vulnerability:
    _check_keys(data, _VULN_KEYS, where, strict)
    for key in ("id", "cve", "layer", "r", "c_d", "c_a"):
        if key not in data:
            raise ParseError(f"{where}: missing key {key!r}")
    try:
        layer = Layer(str(data["layer"]).lower())
    except ValueError:
        raise ValidationError(f"{where}.layer: expected 'cyber' or 'physical', got {data['layer']!r}") from None
    try:
        v2 = parse_v2(data["v2_vector"]) if data.get("v2_vector") else None
        v3 = parse_v3(data["v3_vector"]) if data.get("v3_vector") else None
    except CvssError as exc:
        raise ValidationError(f"{where}: bad CVSS vector: {exc}") from exc

    scores = data.get("scores") or {}
    try:
        v2_scores = ScoreSet.from_dict(scores["v2"]) if "v2" in scores else None
        v3_scores = ScoreSet.from_dict(scores["v3"]) if "v3" in scores else None
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{where}.scores: {exc}") from exc
    # scores omitted but vector present: derive them
    if v2 is not None and v2_scores is None:
        v2_scores = scores_v2(v2)
    if v3 is not None and v3_scores is None:
        v3_scores = scores_v3(v3)

    overrides: dict[CvssVersion, Override] = {}
    for key, triple in (data.get("overrides") or {}).items():
        try:
            version = CvssVersion(key)
        except ValueError:
            raise ParseError(f"{where}.overrides: unknown version {key!r}") from None
        if not isinstance(triple, Mapping) or set(triple) != {"p", "vd", "va"}:
            raise ValidationError(f"{where}.overrides.{key}: need exactly p, vd, va")
        overrides[version] = Override(*(_number(triple[k], f"{where}.overrides.{key}.{k}")
                                        for k in ("p", "vd", "va")))

    return Vulnerability(
        id=str(data["id"]),
        cve_id=str(data["cve"]),
        layer=layer,
        r=_number(data["r"], f"{where}.r"),
        c_d=_number(data["c_d"], f"{where}.c_d"),
        c_a=_number(data["c_a"], f"{where}.c_a"),
        v2_vector=v2,
        v3_vector=v3,
        v2_scores=v2_scores,
        v3_scores=v3_scores,
        overrides=overrides,
    )


def scenario_from_dict(data: Mapping[str, Any], strict: bool = True) -> Scenario:
    _check_keys(data, _TOP_KEYS, "scenario", strict)
    for key in ("cvss_version", "cap", "esc", "vulnerabilities"):
        if key not in data:
            raise ParseError(f"scenario: missing key {key!r}")
    try:
        version = CvssVersion(str(data["cvss_version"]).lower())
    except ValueError:
        raise ValidationError(f"cvss_version must be 'v2' or 'v3', got {data['cvss_version']!r}") from None
    vulns = data["vulnerabilities"]
    if not isinstance(vulns, list):
        raise ParseError("vulnerabilities: expected an array")
    weights = data.get("v3_weights")
    if weights is not None:
        try:
            check_weight_table(weights)
        except IncompleteWeightTable as exc:
            raise ValidationError(f"v3_weights: {exc}") from exc
        weights = {metric: {val: float(w) for val, w in table.items()} for metric, table in weights.items()}
    scenario = Scenario(
        cvss_version=version,
        cap=_number(data["cap"], "cap"),
        esc=_number(data["esc"], "esc"),
        vulnerabilities=tuple(_vulnerability_from_dict(v, f"vulnerabilities[{k}]", strict)
                              for k, v in enumerate(vulns)),
        vd_range=_interval(data.get("vd_range", (-10.0, -1.0)), "vd_range"),
        va_range=_interval(data.get("va_range", (1.0, 10.0)), "va_range"),
        v3_weights=weights,
    )
    check_scenario(scenario)
    return scenario


def check_scenario(s: Scenario) -> None:
    """Raise ValidationError naming the first violated hard invariant."""
    if s.n < 2:
        raise ValidationError(f"n >= 2 required, got {s.n} vulnerabilities")
    if len(set(s.ids)) != s.n:
        raise ValidationError("vulnerability ids must be unique")
    vd_lo, vd_hi = s.vd_range
    va_lo, va_hi = s.va_range
    if not (vd_lo < vd_hi < 0 < va_lo < va_hi):
        raise ValidationError("vd_range/va_range: need vd_lo < vd_hi < 0 < va_lo < va_hi")
    if s.cap < 0 or s.esc < 0:
        raise ValidationError("cap and esc must be non-negative")
    for v in s.vulnerabilities:
        if not CVE_ID_RE.match(v.cve_id):
            raise ValidationError(f"{v.id}: malformed CVE id {v.cve_id!r}")
        for name in ("r", "c_d", "c_a"):
            if getattr(v, name) < 0:
                raise ValidationError(f"{v.id}: {name} must be non-negative")
        for version, o in v.overrides.items():
            if not 0.0 <= o.p <= 1.0:
                raise ValidationError(f"{v.id}: override {version.value}.p={o.p} outside [0, 1]")
            if not vd_lo <= o.vd <= vd_hi:
                raise ValidationError(f"{v.id}: override {version.value}.vd={o.vd} outside vd_range")
            if not va_lo <= o.va <= va_hi:
                raise ValidationError(f"{v.id}: override {version.value}.va={o.va} outside va_range")
        has_data = v.vector(s.cvss_version) is not None and v.scores(s.cvss_version) is not None
        if not has_data and v.override(s.cvss_version) is None:
            raise ValidationError(
                f"{v.id}: needs a {s.cvss_version.value} vector with scores or a full override")


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    vulns = []
    for v in s.vulnerabilities:
        item: dict[str, Any] = {"id": v.id, "cve": v.cve_id, "layer": v.layer.value}
        if v.v2_vector is not None:
            item["v2_vector"] = format_v2(v.v2_vector)
        if v.v3_vector is not None:
            item["v3_vector"] = format_v3(v.v3_vector)
        scores = {}
        if v.v2_scores is not None:
            scores["v2"] = v.v2_scores.to_dict()
        if v.v3_scores is not None:
            scores["v3"] = v.v3_scores.to_dict()
        if scores:
            item["scores"] = scores
        item.update(r=v.r, c_d=v.c_d, c_a=v.c_a)
        if v.overrides:
            item["overrides"] = {ver.value: {"p": o.p, "vd": o.vd, "va": o.va}
                                 for ver, o in sorted(v.overrides.items(), key=lambda kv: kv[0].value)}
        vulns.append(item)
    out: dict[str, Any] = {
        "cvss_version": s.cvss_version.value,
        "cap": s.cap,
        "esc": s.esc,
        "vd_range": list(s.vd_range),
        "va_range": list(s.va_range),
    }
    if s.v3_weights is not None:
        out["v3_weights"] = {m: dict(t) for m, t in s.v3_weights.items()}
    out["vulnerabilities"] = vulns
    return out


def load_scenario(path: str | Path, strict: bool = True) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read scenario {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(data, strict=strict)


def write_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n", encoding="utf-8")


def validate(s: Scenario) -> list[str]:
    """Soft checks that physical-layer costs and rewards exceed cyber-layer ones."""
    cyber = [v for v in s.vulnerabilities if v.layer is Layer.CYBER]
    physical = [v for v in s.vulnerabilities if v.layer is Layer.PHYSICAL]
    if not cyber or not physical:
        return []
    warnings = []
    for name, label in (("c_d", "deception cost"), ("c_a", "attack cost"), ("r", "failure reward")):
        lo_phys = min(getattr(v, name) for v in physical)
        hi_cyber = max(getattr(v, name) for v in cyber)
        if lo_phys <= hi_cyber:
            warnings.append(f"min physical {name} ({lo_phys}) <= max cyber {name} ({hi_cyber}): "
                            f"physical {label} is expected to be higher")
    return warnings


def restrict_layer(s: Scenario, layer: Layer | str) -> tuple[int, ...]:
    """Defender action indices whose vulnerability sits on ``layer``."""
    layer = Layer(layer)
    idx = tuple(k for k, v in enumerate(s.vulnerabilities) if v.layer is layer)
    if not idx:
        raise EmptyLayer(f"scenario has no {layer.value} vulnerabilities")
    return idx


# --- built-in fixture -------------------------------------------------------

# (id, cve, layer, v2 vector, v3 vector)
REFERENCE_CVES = (
    ("a1", "CVE-2020-10220", Layer.CYBER, "AV:N/AC:L/Au:N/C:P/I:P/A:P",
     "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"),
    ("a2", "CVE-2014-0160", Layer.CYBER, "AV:N/AC:L/Au:N/C:P/I:N/A:N",
     "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N"),
    ("a3", "CVE-2020-16952", Layer.CYBER, "AV:N/AC:M/Au:N/C:C/I:C/A:C",
     "CVSS:3.1/AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H"),
    ("a4", "CVE-2020-0688", Layer.CYBER, "AV:N/AC:L/Au:S/C:C/I:C/A:C",
     "CVSS:3.1/AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H"),
    ("a5", "CVE-2021-44228", Layer.CYBER, "AV:N/AC:M/Au:N/C:C/I:C/A:C",
     "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:C/C:H/I:H/A:H"),
    ("a6", "CVE-2017-9389", Layer.PHYSICAL, "AV:N/AC:L/Au:S/C:C/I:C/A:C",
     "CVSS:3.1/AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H"),
    ("a7", "CVE-2017-10724", Layer.PHYSICAL, "AV:N/AC:L/Au:S/C:P/I:P/A:P",
     "CVSS:3.1/AV:A/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"),
    ("a8", "CVE-2019-10915", Layer.PHYSICAL, "AV:L/AC:L/Au:N/C:C/I:C/A:C",
     "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"),
)

# (exploit probability, V_d, V_a) per id, v2 then v3
REFERENCE_PROFILES = {
    CvssVersion.V2: {
        "a1": (0.999, -8.69, 10.0), "a2": (0.999, -5.6, 7.2), "a3": (0.86, -7.27, 6.79),
        "a4": (0.795, -9.16, 7.79), "a5": (0.859, -10.0, 9.19), "a6": (0.795, -8.61, 7.79),
        "a7": (0.795, -6.09, 5.56), "a8": (0.395, -1.0, 1.0),
    },
    CvssVersion.V3: {
        "a1": (0.727, -9.85, 9.69), "a2": (0.727, -6.48, 6.13), "a3": (0.47, -3.06, 1.0),
        "a4": (0.531, -5.52, 3.92), "a5": (0.727, -10.0, 10.0), "a6": (0.53, -2.66, 3.9),
        "a7": (0.53, -2.69, 3.92), "a8": (0.471, -1.0, 2.56),
    },
}


def paper_fixture(version: CvssVersion | str = CvssVersion.V2, *, cap: float = DEFAULT_CAP,
                  esc: float = DEFAULT_ESC) -> Scenario:
    """The eight-vulnerability reference scenario with tabulated overrides."""
    version = CvssVersion(version)
    vulns = []
    for vid, cve, layer, v2s, v3s in REFERENCE_CVES:
        v2, v3 = parse_v2(v2s), parse_v3(v3s)
        vulns.append(Vulnerability(
            id=vid, cve_id=cve, layer=layer, **LAYER_DEFAULTS[layer],
            v2_vector=v2, v3_vector=v3, v2_scores=scores_v2(v2), v3_scores=scores_v3(v3),
            overrides={ver: Override(*REFERENCE_PROFILES[ver][vid]) for ver in CvssVersion},
        ))
    return Scenario(cvss_version=version, cap=cap, esc=esc, vulnerabilities=tuple(vulns))
