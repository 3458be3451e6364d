"""Command-line front end.

Subcommands:
  run <file>       run a scenario file end to end
  preset <name>    run a packaged preset (list them with --list)
  table1           reproduce the published visibility table
  fit <csv>        fit a curve CSV (cos2 / dip / sbr models)
  tags2hist <file> fold a time-tag file into a cycle histogram

Exit codes: 0 success, 2 scenario/input parse error, 3 runtime error,
4 tolerance failure in table1.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .analysis import (
    AnalysisError,
    CountSummary,
    fit_cos2,
    fit_gaussian_dip,
    fit_sbr_model,
)
from .runner import run, table1_suite
from .scenario import ScenarioParseError, list_presets, load_preset, parse_scenario
from .timetags import TimeTagError, fold_histogram, read_stream

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_RUNTIME = 3
EXIT_TOLERANCE = 4


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--triggers", type=int, default=None,
                   help="override the trigger count per scan point")
    p.add_argument("--mode", choices=("analytic", "mc", "both"), default="analytic")
    p.add_argument("--out", type=Path, default=None, help="artifact directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1,
                   help="concurrent Monte Carlo trials")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homsim",
        description="HOM interference of weak coherent pulses from noisy "
                    "quantum memories: simulation and coincidence analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario", type=Path)
    _add_run_flags(p_run)

    p_preset = sub.add_parser("preset", help="run a packaged preset")
    p_preset.add_argument("name", nargs="?", default=None)
    p_preset.add_argument("--list", action="store_true", help="list presets")
    _add_run_flags(p_preset)

    p_table = sub.add_parser("table1", help="reproduce the visibility table")
    p_table.add_argument("--mode", choices=("analytic", "mc", "both"),
                         default="analytic")
    p_table.add_argument("--triggers", type=int, default=None)
    p_table.add_argument("--out", type=Path, default=None)
    p_table.add_argument("--workers", type=int, default=1)

    p_fit = sub.add_parser("fit", help="fit a curve CSV")
    p_fit.add_argument("csv", type=Path)
    p_fit.add_argument("--model", choices=("cos2", "dip", "sbr"), required=True)
    p_fit.add_argument("--out", type=Path, default=None)
    p_fit.add_argument("--format", choices=("csv", "json"), default="json")

    p_hist = sub.add_parser("tags2hist", help="fold a time-tag file")
    p_hist.add_argument("tags", type=Path)
    p_hist.add_argument("--channel", type=int, default=0)
    p_hist.add_argument("--bin-ns", type=float, default=50.0)
    p_hist.add_argument("--out", type=Path, default=None)
    return parser


def _apply_overrides(scenario, args):
    from dataclasses import replace
    if args.seed is not None:
        scenario = replace(scenario, master_seed=args.seed)
    if args.triggers is not None:
        scenario = replace(scenario, n_triggers=args.triggers)
    return scenario


def _cmd_run(args) -> int:
    scenario = parse_scenario(args.scenario)
    return _execute(scenario, args)


def _cmd_preset(args) -> int:
    if args.list or args.name is None:
        for name in list_presets():
            print(name)
        return EXIT_OK
    scenario = load_preset(args.name)
    return _execute(scenario, args)


def _execute(scenario, args) -> int:
    scenario = _apply_overrides(scenario, args)
    report = run(scenario, mode=args.mode, out_dir=args.out, fmt=args.format,
                 max_workers=args.workers)
    print(report.summary())
    if args.out is not None:
        print(f"artifacts written to {args.out}")
    return EXIT_OK


def _cmd_table1(args) -> int:
    report = table1_suite(mode=args.mode, n_triggers=args.triggers,
                          max_workers=args.workers)
    print(report.format_table())
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        rows = [{
            "config": r.row.config, "n": r.row.n_in, "dof": r.row.dof,
            "roi_width_us": r.row.roi_width_us, "sbr": r.row.sbr,
            "model_v": r.predicted_v, "eq1_v": r.eq1_v,
            "paper_v": r.row.paper_v, "paper_sigma": r.row.paper_sigma,
            "measured_v": r.measured_v, "measured_sigma": r.measured_sigma,
            "gated": r.row.gated, "within_3sigma": r.within_3sigma,
            "note": r.row.note,
        } for r in report.results]
        (args.out / "table1.json").write_text(json.dumps(rows, indent=2) + "\n")
        print(f"table written to {args.out / 'table1.json'}")
    if not report.passed:
        print("TOLERANCE FAILURE: a gated row is outside 3 sigma", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def _read_fit_csv(path: Path, model: str):
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise ScenarioParseError(f"{path}: no data rows")
    try:
        if model == "sbr":
            return [(float(r["sbr"]), float(r["visibility"]),
                     float(r.get("sigma", 0.0) or 0.0)) for r in rows]
        return [(float(r["control_value"]),
                 CountSummary(int(r["c1"]), int(r["c2"]), int(r["c12"]),
                              int(r["n_triggers"])))
                for r in rows]
    except (KeyError, ValueError) as exc:
        raise ScenarioParseError(f"{path}: bad fit input ({exc})")


def _cmd_fit(args) -> int:
    points = _read_fit_csv(args.csv, args.model)
    if args.model == "cos2":
        result = fit_cos2(points)
    elif args.model == "dip":
        result = fit_gaussian_dip(points)
    else:
        result = fit_sbr_model(points)
    text = result.to_json(indent=2, sort_keys=True)
    print(text)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"{args.csv.stem}_{args.model}_fit.json").write_text(text + "\n")
    return EXIT_OK


def _cmd_tags2hist(args) -> int:
    stream = read_stream(args.tags)
    hist = fold_histogram(stream, args.channel, args.bin_ns)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        path = args.out / f"{args.tags.stem}_ch{args.channel}_hist.csv"
        lines = ["bin_center_ns,counts"]
        lines += [f"{c!r},{int(k)}" for c, k in zip(hist.centers_ns, hist.counts)]
        path.write_text("\n".join(lines) + "\n")
        print(f"histogram written to {path}")
    else:
        occupied = int((hist.counts > 0).sum())
        print(f"{hist.total} tags on channel {args.channel}, "
              f"{occupied}/{hist.counts.size} bins occupied, "
              f"peak {int(hist.counts.max())} at "
              f"{hist.centers_ns[int(hist.counts.argmax())]:.1f} ns")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "preset": _cmd_preset,
    "table1": _cmd_table1,
    "fit": _cmd_fit,
    "tags2hist": _cmd_tags2hist,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ScenarioParseError, TimeTagError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (AnalysisError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
