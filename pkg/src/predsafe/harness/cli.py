"""Command line interface: ``predsafe {evaluate,cripple,gen-synthetic,rank}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..errors import PredsafeError
from .config import EvalConfig, load_config
from .evaluate import EvaluationRun, cripple_predictions, evaluate
from .ranking import rank_and_snr, write_histogram_csv, write_scenario_csv
from .scenario_io import dump_scenario, load_scenario
from .synthetic import generate_synthetic_corpus

log = logging.getLogger("predsafe")


def _scenario_files(target: str) -> list[Path]:
    p = Path(target)
    if p.is_dir():
        files = sorted(p.glob("*.json"))
        if not files:
            raise PredsafeError(f"no scenario files (*.json) in {p}")
        return files
    if not p.exists():
        raise PredsafeError(f"no such scenario file: {p}")
    return [p]


def _write_json(data, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _evaluate_file(args: tuple[str, EvalConfig]) -> dict:
    path, config = args
    scenario = load_scenario(path, config.grid)
    return evaluate(scenario, config).to_dict()


def cmd_evaluate(ns: argparse.Namespace) -> int:
    config = load_config(ns.config)
    if ns.keep_horizon is not None:
        config = replace(config, keep_horizon=ns.keep_horizon)
    files = _scenario_files(ns.scenario)
    jobs = [(str(f), config) for f in files]
    if ns.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            runs = list(pool.map(_evaluate_file, jobs))
    else:
        runs = [_evaluate_file(j) for j in jobs]
    _write_json({"config": config.to_dict(), "runs": runs}, ns.out)
    n_failed = sum(len(r["failed_frames"]) for r in runs)
    log.info("evaluated %d scenario(s), %d failed frame(s) -> %s", len(runs), n_failed, ns.out)
    return 0


def cmd_cripple(ns: argparse.Namespace) -> int:
    config = load_config(ns.config)
    files = _scenario_files(ns.scenario)
    out = Path(ns.out)
    if len(files) > 1 or Path(ns.scenario).is_dir():
        out.mkdir(parents=True, exist_ok=True)
    for f in files:
        sc = load_scenario(f, config.grid)
        sc = replace(sc, predictions=cripple_predictions(sc.predictions, ns.keep_horizon))
        dump_scenario(sc, out / f.name if out.is_dir() else out)
    log.info("crippled %d scenario(s) to %.3f s", len(files), ns.keep_horizon)
    return 0


def cmd_gen_synthetic(ns: argparse.Namespace) -> int:
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    for sc in generate_synthetic_corpus(ns.seed, ns.count):
        dump_scenario(sc, out / f"{sc.scenario_id}.json")
    log.info("wrote %d scenario(s) to %s", ns.count, out)
    return 0


def _load_runs(target: str) -> list[EvaluationRun]:
    p = Path(target)
    files = sorted(p.glob("*.json")) if p.is_dir() else [p]
    runs = []
    for f in files:
        with open(f) as fh:
            data = json.load(fh)
        entries = data["runs"] if "runs" in data else [data]
        runs.extend(EvaluationRun.from_dict(d) for d in entries)
    return runs


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def cmd_rank(ns: argparse.Namespace) -> int:
    runs = _load_runs(ns.runs)
    report = rank_and_snr(runs, top_ns=ns.top, flag=ns.flag, bin_width=ns.bin_width)
    _write_json(report.to_dict(), ns.out)
    if ns.csv:
        d = Path(ns.csv)
        d.mkdir(parents=True, exist_ok=True)
        write_histogram_csv(report, d / "histogram.csv")
        write_scenario_csv(report, d / "scenario_hits.csv")
    for n in ns.top:
        print(f"SNR@{n}: metric {report.snr_metric[n]:.3f}  L2 {report.snr_l2[n]:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="predsafe", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("evaluate", help="score scenarios frame by frame")
    e.add_argument("--scenario", required=True, help="scenario JSON file or directory of them")
    e.add_argument("--config", default=None, help="evaluation config JSON (defaults when omitted)")
    e.add_argument("--out", required=True, help="report JSON path")
    e.add_argument("--keep-horizon", type=float, default=None, help="cripple predictions before scoring")
    e.add_argument("--jobs", type=int, default=1, help="worker processes")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("cripple", help="truncate prediction horizons in scenario files")
    c.add_argument("--keep-horizon", type=float, required=True)
    c.add_argument("--scenario", required=True)
    c.add_argument("--out", required=True, help="output file, or directory for several inputs")
    c.add_argument("--config", default=None, help="needed only for direct prediction grids")
    c.set_defaults(func=cmd_cripple)

    g = sub.add_parser("gen-synthetic", help="write a deterministic synthetic corpus")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_synthetic)

    r = sub.add_parser("rank", help="rank actors across evaluation reports")
    r.add_argument("--runs", required=True, help="report JSON file or directory")
    r.add_argument("--top", type=_int_list, default=[10, 20, 50])
    r.add_argument("--out", required=True)
    r.add_argument("--csv", default=None, help="directory for the histogram and hit-table CSVs")
    r.add_argument("--flag", choices=("is_unsafe", "is_aoi"), default="is_unsafe")
    r.add_argument("--bin-width", type=int, default=10)
    r.set_defaults(func=cmd_rank)
    return p


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return ns.func(ns)
    except (PredsafeError, ValueError, KeyError, OSError) as exc:
        print(f"predsafe: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
