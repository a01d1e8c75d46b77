"""Command-line entry point: ``stackdec <command> ...``.

Exit codes: 0 success, 1 partial failure (fetch), 2 usage or validation
error, 3 internal solver error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .analysis import (
    PUBLISHED_BASELINE_UTILITIES,
    PUBLISHED_REMOVAL_UTILITIES,
    compare_baselines,
    compare_layers,
    most_critical_vulnerability,
    sweep,
)
from .errors import (
    CacheMiss,
    CvssError,
    GridTooLarge,
    MissingData,
    MissingVersion,
    NetworkError,
    NotFound,
    NvdError,
    RateLimited,
    ScenarioError,
    SolverError,
    StackdecError,
    TooFewActions,
)
from .nvd import FetchMode, NvdClient, fixture_dir, read_cve_list, vulnerability_from_record
from .payoff import build_payoff_matrices, build_profiles
from .scenario import (
    CvssVersion,
    Layer,
    Scenario,
    check_scenario,
    load_scenario,
    paper_fixture,
    restrict_layer,
    scenario_to_dict,
    validate,
    write_scenario,
)
from .solver import solve_stackelberg


class UsageError(StackdecError):
    pass


def fmt(x: float) -> str:
    """Four decimals, half-even, no negative zero."""
    if not math.isfinite(x):
        return str(x)
    text = str(Decimal(repr(float(x))).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))
    return "0.0000" if text == "-0.0000" else text


def fmt_strategy(xs: Sequence[float]) -> str:
    return ";".join(fmt(x) for x in xs)


def scenario_digest(s: Scenario) -> str:
    blob = json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def parse_range(spec: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a single number."""
    parts = spec.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad range {spec!r}; expected start:stop:step") from None
    if len(nums) == 1:
        return nums
    if len(nums) != 3:
        raise UsageError(f"bad range {spec!r}; expected start:stop:step")
    start, stop, step = nums
    if step <= 0:
        raise UsageError(f"range step must be positive in {spec!r}")
    if start > stop:
        raise UsageError(f"reversed range {spec!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(count)]


def _scenario(args) -> Scenario:
    if args.fixture:
        s = paper_fixture(args.fixture)
    else:
        s = load_scenario(args.scenario)
    changes = {}
    if getattr(args, "cap", None) is not None:
        changes["cap"] = args.cap
    if getattr(args, "esc", None) is not None:
        changes["esc"] = args.esc
    if changes:
        s = s.with_params(**changes)
        check_scenario(s)
    for warning in validate(s):
        print(f"warning: {warning}", file=sys.stderr)
    return s


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _report(command: str, s: Scenario, parameters: dict, results: dict) -> str:
    report = {
        "command": command,
        "scenario_digest": scenario_digest(s),
        "parameters": parameters,
        "results": results,
        "tool_version": __version__,
    }
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


# --- commands ----------------------------------------------------------------

def cmd_solve(args) -> int:
    s = _scenario(args)
    m = build_payoff_matrices(s)
    allowed = None if args.layer == "all" else restrict_layer(s, args.layer)
    sol = solve_stackelberg(m, allowed_defender=allowed)
    strategy = fmt_strategy(sol.defender_strategy)
    attacker = m.labels[sol.attacker_action]
    print(f"scenario: {scenario_digest(s)[:12]} ({s.cvss_version.value}, cap={fmt(s.cap)}, esc={fmt(s.esc)}, "
          f"layer={args.layer})")
    print(f"defender_strategy: {strategy}")
    print(f"attacker_action: {attacker}")
    print(f"defender_utility: {fmt(sol.defender_utility)}")
    print(f"attacker_utility: {fmt(sol.attacker_utility)}")
    if args.out:
        if args.format == "csv":
            text = _csv_text(
                ["labels", "defender_strategy", "attacker_action", "defender_utility", "attacker_utility"],
                [[";".join(m.labels), strategy, attacker, fmt(sol.defender_utility), fmt(sol.attacker_utility)]])
        else:
            text = _report("solve", s, {"cvss_version": s.cvss_version.value, "cap": s.cap, "esc": s.esc,
                                        "layer": args.layer}, {
                "labels": list(m.labels),
                "defender_strategy": [fmt(p) for p in sol.defender_strategy],
                "attacker_action": attacker,
                "defender_utility": fmt(sol.defender_utility),
                "attacker_utility": fmt(sol.attacker_utility),
                "per_action": [{"action": m.labels[a.action], "status": a.status.value,
                                "value": fmt(a.value)} for a in sol.per_action],
            })
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def _published_values(args, table) -> dict | None:
    if not args.compare_paper:
        return None
    if not args.fixture:
        raise UsageError("--compare-paper needs --fixture")
    return table[CvssVersion(args.fixture)]


def cmd_baselines(args) -> int:
    s = _scenario(args)
    rows = compare_baselines(build_payoff_matrices(s))
    published = _published_values(args, PUBLISHED_BASELINE_UTILITIES)
    header = ["method", "strategy", "defender_utility"]
    body = []
    for row in rows:
        line = [row.method, fmt_strategy(row.strategy), fmt(row.defender_utility)]
        if published is not None:
            line += [fmt(published[row.method]), fmt(row.defender_utility - published[row.method])]
        body.append(line)
    if published is not None:
        header += ["published_utility", "delta"]
    _emit(_csv_text(header, body), args.out)
    return 0


def cmd_critical(args) -> int:
    s = _scenario(args)
    report = most_critical_vulnerability(s)
    published = _published_values(args, PUBLISHED_REMOVAL_UTILITIES)
    header = ["removed_action", "defender_utility", "is_critical"]
    body = []
    for vid, u in report.removal_utilities.items():
        line = [vid, fmt(u), "true" if vid == report.critical_action else "false"]
        if published is not None:
            line += [fmt(published[vid]), fmt(u - published[vid])]
        body.append(line)
    if published is not None:
        header += ["published_utility", "delta"]
    _emit(_csv_text(header, body), args.out)
    return 0


def cmd_sweep(args) -> int:
    s = _scenario(args)
    caps, escs = parse_range(args.cap_range), parse_range(args.esc_range)
    rows = sweep(s, caps, escs, jobs=args.jobs)
    header = ["cvss_version", "cap", "esc", "defender_utility", "attacker_action", "strategy"]
    body = [[r.cvss_version, fmt(r.cap), fmt(r.esc), fmt(r.defender_utility), r.attacker_action,
             fmt_strategy(r.defender_strategy)] for r in rows]
    _emit(_csv_text(header, body), args.out)
    return 0


def cmd_compare_layers(args) -> int:
    s = _scenario(args)
    cmp = compare_layers(s)
    body = [["coordinated", fmt(cmp.utility_coordinated)],
            ["cyber_only", fmt(cmp.utility_cyber_only)],
            ["physical_only", fmt(cmp.utility_physical_only)]]
    _emit(_csv_text(["mode", "defender_utility"], body), args.out)
    return 0


def cmd_profiles(args) -> int:
    s = _scenario(args)
    profiles = build_profiles(s)
    body = [[v.id, v.cve_id, v.layer.value, fmt(p.exploit_prob), fmt(p.v_d_norm), fmt(p.v_a_norm),
             p.provenance.value] for v, p in zip(s.vulnerabilities, profiles)]
    _emit(_csv_text(["id", "cve", "layer", "exploit_prob", "v_d", "v_a", "provenance"], body), args.out)
    return 0


_FETCH_STATUS = (
    (NotFound, "not_found"),
    (RateLimited, "rate_limited"),
    (CacheMiss, "cache_miss"),
    (NetworkError, "network_error"),
    (MissingVersion, "no_cvss"),
)


def cmd_fetch(args) -> int:
    try:
        entries = read_cve_list(Path(args.cve_list).read_text(encoding="utf-8").splitlines())
    except OSError as exc:
        raise UsageError(f"cannot read CVE list {args.cve_list}: {exc.strerror or exc}") from exc
    except ValueError as exc:
        raise UsageError(f"bad CVE list {args.cve_list}: {exc}") from exc
    if not entries:
        raise UsageError("CVE list is empty")
    client = NvdClient(args.cache, fixtures=fixture_dir())
    mode = FetchMode.CACHE_ONLY if args.offline else FetchMode.NETWORK_THEN_CACHE
    rows, records, failed = [], [], False
    for cve_id, _ in entries:
        try:
            rec = client.fetch(cve_id, mode)
        except (NvdError, ScenarioError) as exc:
            status = next((label for kind, label in _FETCH_STATUS if isinstance(exc, kind)), "invalid")
            print(f"{cve_id}: {exc}", file=sys.stderr)
            rows.append([cve_id, status, "", "", ""])
            records.append(None)
            failed = True
            continue
        rows.append([rec.cve_id, "ok", rec.source.value, rec.v2_vector_string or "", rec.v3_vector_string or ""])
        records.append(rec)
    sys.stdout.write(_csv_text(["cve_id", "status", "source", "v2_vector", "v3_vector"], rows))

    if args.scenario_out:
        if failed:
            print("not writing scenario: some CVEs could not be fetched", file=sys.stderr)
            return 1
        if any(layer is None for _, layer in entries):
            raise UsageError("--scenario-out needs a layer for every CVE (CVE-ID,cyber|physical)")
        version = CvssVersion(args.cvss_version)
        vulns = tuple(vulnerability_from_record(rec, f"a{k + 1}", layer, version)
                      for k, (rec, (_, layer)) in enumerate(zip(records, entries)))
        s = Scenario(cvss_version=version, cap=args.cap, esc=args.esc, vulnerabilities=vulns)
        check_scenario(s)
        write_scenario(s, args.scenario_out)
    return 1 if failed else 0


# --- parser ------------------------------------------------------------------

def _add_scenario_args(p: argparse.ArgumentParser, params: bool = True) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="scenario JSON file")
    src.add_argument("--fixture", choices=["v2", "v3"], help="built-in reference scenario")
    if params:
        p.add_argument("--cap", type=float, help="capture reward override")
        p.add_argument("--esc", type=float, help="escape gain override")
    p.add_argument("--out", help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stackdec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="strong Stackelberg equilibrium")
    _add_scenario_args(p)
    p.add_argument("--layer", choices=["all", "cyber", "physical"], default="all")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("baselines", help="URS / GS / SG comparison")
    _add_scenario_args(p)
    p.add_argument("--compare-paper", action="store_true", help="append published reference values and deltas")
    p.set_defaults(func=cmd_baselines)

    p = sub.add_parser("critical", help="most critical vulnerability")
    _add_scenario_args(p)
    p.add_argument("--compare-paper", action="store_true", help="append published reference values and deltas")
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("sweep", help="Cap/Esc parameter grid")
    _add_scenario_args(p, params=False)
    p.add_argument("--cap", dest="cap_range", default="1:10:1", help="start:stop:step")
    p.add_argument("--esc", dest="esc_range", default="1:10:1", help="start:stop:step")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare-layers", help="coordinated vs single-layer deception")
    _add_scenario_args(p)
    p.set_defaults(func=cmd_compare_layers)

    p = sub.add_parser("profiles", help="exploit probabilities and normalized values")
    _add_scenario_args(p)
    p.set_defaults(func=cmd_profiles)

    p = sub.add_parser("fetch", help="fetch CVE records into the cache")
    p.add_argument("--cve-list", required=True, help="file of CVE-ID[,layer] lines")
    p.add_argument("--cache", required=True, help="cache directory")
    p.add_argument("--offline", action="store_true", help="never touch the network")
    p.add_argument("--scenario-out", help="also write a scenario built from the records")
    p.add_argument("--cvss-version", choices=["v2", "v3"], default="v2")
    p.add_argument("--cap", type=float, default=5.0)
    p.add_argument("--esc", type=float, default=5.0)
    p.set_defaults(func=cmd_fetch)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (StackdecError, CvssError, GridTooLarge, MissingData, TooFewActions, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
