import json
from datetime import datetime, timezone

import pytest

from stackdec.errors import CacheMiss, MissingVersion, NetworkError, NotFound, RateLimited, ValidationError
from stackdec.nvd import (
    API_KEY_ENV,
    CACHE_SCHEMA,
    INTERVAL_NO_KEY,
    INTERVAL_WITH_KEY,
    FetchMode,
    NvdClient,
    RateGate,
    Source,
    build_scenario_from_nvd,
    fixture_dir,
    parse_nvd_response,
    read_cve_list,
    vulnerability_from_record,
)
from stackdec.scenario import REFERENCE_CVES, CvssVersion, Layer

FIXED_NOW = datetime(2026, 1, 2, 3, 4, 5, tzinfo=timezone.utc)


def body_for(cve_id, v2="AV:N/AC:L/Au:N/C:P/I:P/A:P", v3=None):
    metrics = {}
    if v2:
        metrics["cvssMetricV2"] = [{"type": "Primary", "cvssData": {"version": "2.0", "vectorString": v2,
                                                                  "baseScore": 7.5},
                                    "impactScore": 6.4, "exploitabilityScore": 10.0}]
    if v3:
        metrics["cvssMetricV31"] = [
            {"type": "Secondary", "cvssData": {"vectorString": "CVSS:3.1/AV:L/AC:H/PR:H/UI:R/S:U/C:N/I:N/A:L",
                                               "baseScore": 1.8},
             "impactScore": 1.4, "exploitabilityScore": 0.3},
            {"type": "Primary", "cvssData": {"vectorString": v3, "baseScore": 9.8},
             "impactScore": 5.9, "exploitabilityScore": 3.9},
        ]
    return json.dumps({"vulnerabilities": [{"cve": {"id": cve_id, "metrics": metrics}}]}).encode()


class FakeTransport:
    def __init__(self, responses=None, default=None):
        self.responses = dict(responses or {})
        self.default = default
        self.calls = []

    def __call__(self, url, params, headers, timeout):
        self.calls.append((url, dict(params), dict(headers)))
        cve = params["cveId"]
        if cve in self.responses:
            return self.responses[cve]
        if self.default is not None:
            return self.default
        return 200, {}, body_for(cve)


def failing_transport(*_):
    raise AssertionError("network access attempted")


def client(tmp_path, transport=None, **kw):
    kw.setdefault("api_key", "")
    return NvdClient(tmp_path / "cache", transport=transport or FakeTransport(), sleep=lambda s: None,
                     now=lambda: FIXED_NOW, **kw)


def test_network_fetch_writes_raw_cache(tmp_path):
    c = client(tmp_path)
    rec = c.fetch("cve-2020-0001")
    assert rec.cve_id == "CVE-2020-0001" and rec.source is Source.NETWORK
    assert rec.fetched_at == "2026-01-02T03:04:05+00:00"
    entry = c.read_cache("CVE-2020-0001")
    assert entry.body == body_for("CVE-2020-0001")
    assert entry.schema == CACHE_SCHEMA and entry.fetched_at == rec.fetched_at
    assert not list((tmp_path / "cache").glob("*.tmp"))


def test_cache_round_trip(tmp_path):
    c = client(tmp_path)
    first = c.fetch("CVE-2020-0001")
    again = client(tmp_path, transport=failing_transport).fetch("CVE-2020-0001", FetchMode.CACHE_ONLY)
    assert again.source is Source.CACHE
    assert (again.v2_vector_string, again.v2_scores, again.fetched_at) == (
        first.v2_vector_string, first.v2_scores, first.fetched_at)


def test_cache_miss(tmp_path):
    with pytest.raises(CacheMiss):
        client(tmp_path, transport=failing_transport).fetch("CVE-2020-0001", "cache_only")


def test_offline_falls_back_to_bundled_fixture(tmp_path):
    c = client(tmp_path, transport=failing_transport, fixtures=fixture_dir())
    rec = c.fetch("CVE-2014-0160", FetchMode.CACHE_ONLY)
    assert rec.source is Source.FIXTURE
    assert (tmp_path / "cache" / "CVE-2014-0160.json").is_file()
    assert c.fetch("CVE-2014-0160", FetchMode.CACHE_ONLY).source is Source.CACHE


@pytest.mark.parametrize("row", REFERENCE_CVES, ids=[r[1] for r in REFERENCE_CVES])
def test_fixture_cache_matches_table(row, tmp_path):
    vid, cve, layer, v2, v3 = row
    rec = client(tmp_path, transport=failing_transport, fixtures=fixture_dir()).fetch(cve, "cache_only")
    assert rec.v2_vector_string == v2
    assert rec.v3_vector_string == v3


def test_malformed_id_never_hits_network(tmp_path):
    with pytest.raises(ValidationError):
        client(tmp_path, transport=failing_transport).fetch("CVE-99-1")


@pytest.mark.parametrize("status, error", [(403, RateLimited), (429, RateLimited), (404, NotFound),
                                           (500, NetworkError)])
def test_http_errors(tmp_path, status, error):
    c = client(tmp_path, transport=FakeTransport(default=(status, {"Retry-After": "7"}, b"")))
    with pytest.raises(error) as info:
        c.fetch("CVE-2020-0001")
    if error is RateLimited:
        assert info.value.retry_after == 7.0


def test_network_failure_uses_cache(tmp_path):
    client(tmp_path).fetch("CVE-2020-0001")

    def broken(*_):
        raise NetworkError("connection refused")

    rec = client(tmp_path, transport=broken).fetch("CVE-2020-0001")
    assert rec.source is Source.CACHE


def test_network_failure_without_cache(tmp_path):
    def broken(*_):
        raise NetworkError("connection refused")

    with pytest.raises(NetworkError):
        client(tmp_path, transport=broken).fetch("CVE-2020-0001")


def test_api_key_header_and_interval(tmp_path, monkeypatch):
    monkeypatch.setenv(API_KEY_ENV, "secret")
    t = FakeTransport()
    c = NvdClient(tmp_path, transport=t, sleep=lambda s: None)
    c.fetch("CVE-2020-0001")
    assert t.calls[0][2] == {"apiKey": "secret"}
    assert c.gate.interval == INTERVAL_WITH_KEY
    monkeypatch.delenv(API_KEY_ENV)
    assert NvdClient(tmp_path).gate.interval == INTERVAL_NO_KEY


def test_rate_gate_spacing():
    now = [100.0]
    slept = []

    def sleep(s):
        slept.append(s)
        now[0] += s

    gate = RateGate(6.0, clock=lambda: now[0], sleep=sleep)
    with gate:
        pass
    now[0] += 1.5
    with gate:
        pass
    now[0] += 10
    with gate:
        pass
    assert slept == [pytest.approx(4.5)]


def test_primary_v31_preferred():
    rec = parse_nvd_response(body_for("CVE-2020-0001", v3="CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"),
                             "CVE-2020-0001")
    assert rec.v3_scores.base_score == 9.8


def test_missing_version(tmp_path):
    rec = parse_nvd_response(body_for("CVE-2020-0001", v2=None,
                                      v3="CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"), "CVE-2020-0001")
    with pytest.raises(MissingVersion):
        vulnerability_from_record(rec, "a1", Layer.CYBER, CvssVersion.V2)
    with pytest.raises(MissingVersion):
        parse_nvd_response(body_for("CVE-2020-0001", v2=None), "CVE-2020-0001")


def test_absent_record():
    with pytest.raises(NotFound):
        parse_nvd_response(json.dumps({"vulnerabilities": []}), "CVE-2020-0001")


def test_build_scenario(tmp_path):
    c = client(tmp_path)
    s = build_scenario_from_nvd(["CVE-2020-0001", "CVE-2020-0002"], ["cyber", "physical"], client=c)
    assert s.ids == ("a1", "a2")
    assert s.vulnerabilities[1].c_d == 1.0
    with pytest.raises(ValidationError):
        build_scenario_from_nvd(["CVE-2020-0001"], ["cyber"], client=c)


def test_read_cve_list():
    lines = ["# header", "", "cve-2020-0001, Cyber  # trailing", "CVE-2020-0002"]
    assert read_cve_list(lines) == [("CVE-2020-0001", Layer.CYBER), ("CVE-2020-0002", None)]
