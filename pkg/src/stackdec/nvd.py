"""NVD REST API v2.0 client with an on-disk raw-response cache."""
from __future__ import annotations

import enum
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from .cvss import ScoreSet, parse_v2, parse_v3, scores_v2, scores_v3
from .errors import CacheMiss, MissingVersion, NetworkError, NotFound, RateLimited, ValidationError
from .scenario import (
    CVE_ID_RE,
    DEFAULT_CAP,
    DEFAULT_ESC,
    LAYER_DEFAULTS,
    CvssVersion,
    Layer,
    Scenario,
    Vulnerability,
    check_scenario,
)

log = logging.getLogger(__name__)

NVD_URL = "https://services.nvd.nist.gov/rest/json/cves/2.0"
API_KEY_ENV = "NVD_API_KEY"
CACHE_SCHEMA = "nvd-cves-2.0"
INTERVAL_NO_KEY = 6.0
INTERVAL_WITH_KEY = 0.6

# transport(url, params, headers, timeout) -> (status_code, response_headers, body)
Transport = Callable[[str, Mapping[str, str], Mapping[str, str], float], tuple[int, Mapping[str, str], bytes]]


class Source(str, enum.Enum):
    NETWORK = "network"
    CACHE = "cache"
    FIXTURE = "fixture"


class FetchMode(str, enum.Enum):
    NETWORK_THEN_CACHE = "network_then_cache"
    CACHE_ONLY = "cache_only"


@dataclass(frozen=True)
class CveRecord:
    cve_id: str
    v2_vector_string: str | None
    v2_scores: ScoreSet | None
    v3_vector_string: str | None
    v3_scores: ScoreSet | None
    fetched_at: str | None
    source: Source


@dataclass(frozen=True)
class CacheEntry:
    path: Path
    body: bytes
    schema: str
    fetched_at: str | None


def fixture_dir() -> Path:
    return Path(str(resources.files("stackdec") / "data" / "nvd_cache"))


def check_cve_id(cve_id: str) -> str:
    cve_id = cve_id.strip().upper()
    if not CVE_ID_RE.match(cve_id):
        raise ValidationError(f"malformed CVE id {cve_id!r}")
    return cve_id


def default_transport(url, params, headers, timeout):
    import requests

    try:
        resp = requests.get(url, params=dict(params), headers=dict(headers), timeout=timeout)
    except requests.RequestException as exc:
        raise NetworkError(str(exc)) from exc
    return resp.status_code, dict(resp.headers), resp.content


def _primary(entries: list[dict[str, Any]]) -> dict[str, Any] | None:
    if not entries:
        return None
    for entry in entries:
        if entry.get("type") == "Primary":
            return entry
    return entries[0]


def _scores(entry: Mapping[str, Any]) -> ScoreSet | None:
    try:
        return ScoreSet(float(entry["cvssData"]["baseScore"]), float(entry["impactScore"]),
                        float(entry["exploitabilityScore"]))
    except (KeyError, TypeError, ValueError):
        return None


def parse_nvd_response(body: bytes | str, cve_id: str, *, fetched_at: str | None = None,
                       source: Source = Source.NETWORK) -> CveRecord:
    """Extract CVSS v2/v3 data for ``cve_id`` from an NVD ``/cves/2.0`` response body."""
    data = json.loads(body)
    match = None
    for item in data.get("vulnerabilities") or []:
        cve = item.get("cve", {})
        if str(cve.get("id", "")).upper() == cve_id:
            match = cve
            break
    if match is None:
        raise NotFound(f"{cve_id} not present in NVD response")
    metrics = match.get("metrics", {})

    v2_vector = v2_scores = None
    entry = _primary(metrics.get("cvssMetricV2", []))
    if entry is not None:
        v2_vector = entry["cvssData"]["vectorString"]
        parsed = parse_v2(v2_vector)
        v2_scores = _scores(entry) or scores_v2(parsed)

    v3_vector = v3_scores = None
    entry = _primary(metrics.get("cvssMetricV31", [])) or _primary(metrics.get("cvssMetricV30", []))
    if entry is not None:
        v3_vector = entry["cvssData"]["vectorString"]
        parsed = parse_v3(v3_vector)
        v3_scores = _scores(entry) or scores_v3(parsed)

    if v2_vector is None and v3_vector is None:
        raise MissingVersion(f"{cve_id} carries neither CVSS v2 nor v3 metrics")
    return CveRecord(cve_id, v2_vector, v2_scores, v3_vector, v3_scores, fetched_at, source)


class RateGate:
    """Serialises requests so consecutive ones are at least ``interval`` seconds apart."""

    def __init__(self, interval: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.interval = interval
        self._clock = clock
        self._sleep = sleep
        self._last: float | None = None
        self._lock = threading.Lock()

    def __enter__(self):
        self._lock.acquire()
        if self._last is not None:
            wait = self._last + self.interval - self._clock()
            if wait > 0:
                self._sleep(wait)
        return self

    def __exit__(self, *exc):
        self._last = self._clock()
        self._lock.release()
        return False


class NvdClient:
    def __init__(self, cache_dir: str | Path, *, api_key: str | None = None,
                 transport: Transport | None = None, fixtures: str | Path | None = None,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep,
                 now: Callable[[], datetime] = lambda: datetime.now(timezone.utc),
                 timeout: float = 30.0):
        self.cache_dir = Path(cache_dir)
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV) or None
        self.transport = transport or default_transport
        self.fixtures = Path(fixtures) if fixtures is not None else None
        self.gate = RateGate(INTERVAL_WITH_KEY if self.api_key else INTERVAL_NO_KEY, clock, sleep)
        self._now = now
        self.timeout = timeout

    # cache -----------------------------------------------------------------

    def cache_path(self, cve_id: str) -> Path:
        return self.cache_dir / f"{cve_id}.json"

    @staticmethod
    def _meta_path(path: Path) -> Path:
        return path.with_name(path.stem + ".meta.json")

    def read_cache(self, cve_id: str, root: Path | None = None) -> CacheEntry | None:
        path = (root or self.cache_dir) / f"{cve_id}.json"
        if not path.is_file():
            return None
        meta: dict[str, Any] = {}
        meta_path = self._meta_path(path)
        if meta_path.is_file():
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        return CacheEntry(path, path.read_bytes(), meta.get("schema", CACHE_SCHEMA), meta.get("fetched_at"))

    def write_cache(self, cve_id: str, body: bytes, fetched_at: str | None) -> CacheEntry:
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        path = self.cache_path(cve_id)
        meta = json.dumps({"schema": CACHE_SCHEMA, "fetched_at": fetched_at}, sort_keys=True).encode()
        _atomic_write(self._meta_path(path), meta)
        _atomic_write(path, body)
        return CacheEntry(path, body, CACHE_SCHEMA, fetched_at)

    # fetch -----------------------------------------------------------------

    def _request(self, cve_id: str) -> bytes:
        headers = {"apiKey": self.api_key} if self.api_key else {}
        with self.gate:
            status, resp_headers, body = self.transport(NVD_URL, {"cveId": cve_id}, headers, self.timeout)
        if status in (403, 429):
            retry = resp_headers.get("Retry-After") or resp_headers.get("retry-after")
            raise RateLimited(f"NVD rate limit hit for {cve_id} (HTTP {status})",
                              retry_after=float(retry) if retry else None)
        if status == 404:
            raise NotFound(f"{cve_id} not found (HTTP 404)")
        if status != 200:
            raise NetworkError(f"NVD returned HTTP {status} for {cve_id}")
        return body

    def _from_cache(self, cve_id: str) -> CveRecord:
        entry = self.read_cache(cve_id)
        if entry is not None:
            return parse_nvd_response(entry.body, cve_id, fetched_at=entry.fetched_at, source=Source.CACHE)
        if self.fixtures is not None:
            entry = self.read_cache(cve_id, root=self.fixtures)
            if entry is not None:
                self.write_cache(cve_id, entry.body, entry.fetched_at)
                return parse_nvd_response(entry.body, cve_id, fetched_at=entry.fetched_at,
                                          source=Source.FIXTURE)
        raise CacheMiss(f"{cve_id} is not cached in {self.cache_dir}")

    def fetch(self, cve_id: str, mode: FetchMode | str = FetchMode.NETWORK_THEN_CACHE) -> CveRecord:
        cve_id = check_cve_id(cve_id)
        mode = FetchMode(mode)
        if mode is FetchMode.CACHE_ONLY:
            return self._from_cache(cve_id)
        try:
            body = self._request(cve_id)
        except NetworkError as exc:
            log.warning("network fetch of %s failed (%s); trying cache", cve_id, exc)
            try:
                return self._from_cache(cve_id)
            except CacheMiss:
                raise exc from None
        fetched_at = self._now().isoformat(timespec="seconds")
        record = parse_nvd_response(body, cve_id, fetched_at=fetched_at, source=Source.NETWORK)
        self.write_cache(cve_id, body, fetched_at)
        return record


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def vulnerability_from_record(record: CveRecord, vid: str, layer: Layer, version: CvssVersion,
                              r: float | None = None, c_d: float | None = None,
                              c_a: float | None = None) -> Vulnerability:
    if version is CvssVersion.V2 and record.v2_vector_string is None:
        raise MissingVersion(f"{record.cve_id} has no CVSS v2 data")
    if version is CvssVersion.V3 and record.v3_vector_string is None:
        raise MissingVersion(f"{record.cve_id} has no CVSS v3 data")
    defaults = LAYER_DEFAULTS[layer]
    return Vulnerability(
        id=vid, cve_id=record.cve_id, layer=layer,
        r=defaults["r"] if r is None else r,
        c_d=defaults["c_d"] if c_d is None else c_d,
        c_a=defaults["c_a"] if c_a is None else c_a,
        v2_vector=parse_v2(record.v2_vector_string) if record.v2_vector_string else None,
        v3_vector=parse_v3(record.v3_vector_string) if record.v3_vector_string else None,
        v2_scores=record.v2_scores,
        v3_scores=record.v3_scores,
    )


def build_scenario_from_nvd(ids: Sequence[str], layers: Sequence[Layer | str], *,
                            client: NvdClient, version: CvssVersion | str = CvssVersion.V2,
                            cap: float = DEFAULT_CAP, esc: float = DEFAULT_ESC,
                            mode: FetchMode | str = FetchMode.NETWORK_THEN_CACHE) -> Scenario:
    """Scenario of computed (non-override) vulnerabilities, one per CVE, ids a1..an."""
    if len(ids) != len(layers):
        raise ValidationError(f"{len(ids)} CVE ids but {len(layers)} layers")
    if len(ids) < 2:
        raise ValidationError(f"n >= 2 required, got {len(ids)} CVE ids")
    version = CvssVersion(version)
    vulns = []
    for k, (cve_id, layer) in enumerate(zip(ids, layers)):
        record = client.fetch(cve_id, mode)
        vulns.append(vulnerability_from_record(record, f"a{k + 1}", Layer(layer), version))
    scenario = Scenario(cvss_version=version, cap=cap, esc=esc, vulnerabilities=tuple(vulns))
    check_scenario(scenario)
    return scenario


def read_cve_list(lines: Iterable[str]) -> list[tuple[str, Layer | None]]:
    """Parse ``CVE-ID[,layer]`` lines; blank lines and ``#`` comments are skipped."""
    out = []
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        cve, _, layer = (part.strip() for part in line.partition(","))
        out.append((cve.upper(), Layer(layer.lower()) if layer else None))
    return out
