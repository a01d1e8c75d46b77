import json

import pytest

from stackdec import cli, nvd
from stackdec.scenario import paper_fixture, write_scenario


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def no_network(monkeypatch):
    def refuse(*_):
        raise AssertionError("network access attempted")

    monkeypatch.setattr(nvd, "default_transport", refuse)


def test_fmt():
    assert cli.fmt(-0.00001) == "0.0000"
    assert cli.fmt(0.12345) == "0.1234"
    assert cli.fmt(0.12355) == "0.1236"
    assert cli.fmt(-19.78871) == "-19.7887"


def test_parse_range():
    assert cli.parse_range("1:3:1") == [1.0, 2.0, 3.0]
    assert cli.parse_range("0.5:1:0.25") == [0.5, 0.75, 1.0]
    assert cli.parse_range("4") == [4.0]
    for bad in ("3:1:1", "1:2:0", "a:b:c", "1:2"):
        with pytest.raises(cli.UsageError):
            cli.parse_range(bad)


def test_solve_summary(capsys):
    code, out, _ = run(capsys, "solve", "--fixture", "v2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("scenario: ") and "(v2, cap=5.0000, esc=5.0000, layer=all)" in lines[0]
    assert [ln.split(":")[0] for ln in lines[1:]] == [
        "defender_strategy", "attacker_action", "defender_utility", "attacker_utility"]
    assert len(lines[1].split(": ")[1].split(";")) == 8


def test_solve_layer_restricts_support(capsys, tmp_path):
    out_path = tmp_path / "sol.json"
    code, _, _ = run(capsys, "solve", "--fixture", "v3", "--layer", "physical", "--out", str(out_path))
    assert code == 0
    report = json.loads(out_path.read_text())
    assert report["command"] == "solve" and report["parameters"]["layer"] == "physical"
    assert [float(p) for p in report["results"]["defender_strategy"][:5]] == [0.0] * 5
    assert len(report["scenario_digest"]) == 64


def test_solve_csv(capsys, tmp_path):
    out_path = tmp_path / "sol.csv"
    run(capsys, "solve", "--fixture", "v2", "--format", "csv", "--out", str(out_path))
    header = out_path.read_text().splitlines()[0]
    assert header == "labels,defender_strategy,attacker_action,defender_utility,attacker_utility"


def test_baselines(capsys):
    code, out, _ = run(capsys, "baselines", "--fixture", "v2")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "method,strategy,defender_utility"
    assert lines[1].startswith("URS,0.1250;0.1250;")
    assert [ln.split(",")[0] for ln in lines[1:]] == ["URS", "GS", "SG"]


def test_baselines_published_deltas(capsys):
    code, out, _ = run(capsys, "baselines", "--fixture", "v3", "--compare-paper")
    lines = out.splitlines()
    assert lines[0] == "method,strategy,defender_utility,published_utility,delta"
    assert lines[3].split(",")[3] == "-48.9400"


def test_published_deltas_need_fixture(capsys, tmp_path):
    path = tmp_path / "s.json"
    write_scenario(paper_fixture(), path)
    code, _, err = run(capsys, "critical", "--scenario", str(path), "--compare-paper")
    assert code == 2 and "UsageError" in err


def test_critical(capsys):
    code, out, _ = run(capsys, "critical", "--fixture", "v2")
    lines = out.splitlines()
    assert lines[0] == "removed_action,defender_utility,is_critical"
    assert len(lines) == 9
    assert sum(ln.endswith(",true") for ln in lines) == 1


def test_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "--fixture", "v2", "--cap", "1:2:1", "--esc", "3:5:1")
    lines = out.splitlines()
    assert lines[0] == "cvss_version,cap,esc,defender_utility,attacker_action,strategy"
    assert len(lines) == 7
    assert lines[1].startswith("v2,1.0000,3.0000,")


def test_sweep_reversed_range(capsys):
    code, _, err = run(capsys, "sweep", "--fixture", "v2", "--cap", "5:1:1")
    assert code == 2 and "reversed" in err


def test_compare_layers(capsys):
    code, out, _ = run(capsys, "compare-layers", "--fixture", "v2")
    assert [ln.split(",")[0] for ln in out.splitlines()] == ["mode", "coordinated", "cyber_only", "physical_only"]


def test_profiles(capsys):
    code, out, _ = run(capsys, "profiles", "--fixture", "v2")
    lines = out.splitlines()
    assert lines[1] == "a1,CVE-2020-10220,cyber,0.9990,-8.6900,10.0000,override"


def test_missing_scenario_file(capsys, tmp_path):
    code, _, err = run(capsys, "solve", "--scenario", str(tmp_path / "missing.json"))
    assert code == 2 and "IoError" in err


def test_invalid_scenario(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"cvss_version": "v2", "cap": 1, "esc": 1, "vulnerabilities": []}))
    code, _, err = run(capsys, "solve", "--scenario", str(path))
    assert code == 2 and "n >= 2" in err


def test_negative_cap_rejected(capsys):
    code, _, _ = run(capsys, "solve", "--fixture", "v2", "--cap", "-1")
    assert code == 2


def test_solver_error_exit_code(capsys, monkeypatch):
    from stackdec.errors import NoFeasibleAction

    def boom(*a, **k):
        raise NoFeasibleAction("forced")

    monkeypatch.setattr(cli, "solve_stackelberg", boom)
    code, _, err = run(capsys, "solve", "--fixture", "v2")
    assert code == 3 and "forced" in err


def test_usage_error_from_argparse(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["solve"])
    assert info.value.code == 2


def test_offline_fetch_then_solve(capsys, tmp_path, no_network):
    listing = tmp_path / "cves.txt"
    listing.write_text(nvd.fixture_dir().parent.joinpath("table1_cves.txt").read_text())
    scen = tmp_path / "scenario.json"
    code, out, _ = run(capsys, "fetch", "--cve-list", str(listing), "--cache", str(tmp_path / "cache"),
                       "--offline", "--scenario-out", str(scen))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "cve_id,status,source,v2_vector,v3_vector"
    assert all(",ok,fixture," in ln for ln in lines[1:])
    code, out, _ = run(capsys, "solve", "--scenario", str(scen))
    assert code == 0 and "defender_utility: " in out


def test_offline_fetch_partial_failure(capsys, tmp_path, no_network):
    listing = tmp_path / "cves.txt"
    listing.write_text("CVE-2014-0160,cyber\nCVE-1999-0001,physical\n")
    code, out, err = run(capsys, "fetch", "--cve-list", str(listing), "--cache", str(tmp_path / "c"), "--offline")
    assert code == 1
    assert "CVE-1999-0001,cache_miss" in out
