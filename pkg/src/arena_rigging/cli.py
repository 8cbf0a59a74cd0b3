"""Command line entry point: ``fit``, ``simulate``, ``sweep`` and ``filter``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, DataError, coerce_value, load_config
from .defense import filter_votes
from .harness import run_grid, run_simulation, write_outputs
from .ratings import EmptyVoteSetError, fit_bt, write_ratings
from .report import emit_report
from .votes import ParseError, VoteSet, filter_by_models, parse_battle_records, \
    read_canonical, write_canonical

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _read_votes(path: str) -> VoteSet:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    try:
        return parse_battle_records(data)
    except ParseError as first:
        # canonical a,b,outcome,seq lines are accepted as well
        try:
            return read_canonical(data.decode("utf-8"))
        except (ParseError, UnicodeDecodeError):
            raise DataError(f"{path}: {first}") from None


def _model_list(path: str) -> list[str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read model list {path}: {exc}") from exc
    return [line.strip() for line in text.replace(",", "\n").splitlines() if line.strip()]


def cmd_fit(args: argparse.Namespace) -> int:
    votes = _read_votes(args.dataset)
    if args.models:
        try:
            votes = filter_by_models(votes, _model_list(args.models))
        except KeyError as exc:
            raise DataError(str(exc)) from exc
    try:
        fit = fit_bt(votes)
    except EmptyVoteSetError as exc:
        raise DataError(str(exc)) from exc
    if args.out:
        with open(args.out, "w") as fh:
            write_ratings(fit, fh)
    else:
        write_ratings(fit, sys.stdout)
    if fit.n_components > 1:
        logging.warning("comparison graph has %d components; ranks across them are "
                        "unidentified", fit.n_components)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    report = run_simulation(cfg)
    if args.out:
        write_outputs(report, args.out)
    sys.stdout.write(emit_report(report, "table-text").decode())
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    values = [coerce_value(args.axis, v) for v in args.values.split(",")] if args.values else []
    reports = run_grid(cfg, args.axis, values, n_jobs=args.jobs)
    out = Path(args.out) if args.out else None
    for value, report in zip(values, reports):
        if out is not None:
            write_outputs(report, out / f"{args.axis}={value}")
        if report.ok:
            cell = f"{report.final_rank} ({report.rank_increase:+d})" \
                if report.rank_increase is not None else "-"
        else:
            cell = f"error: {report.error}"
        sys.stdout.write(f"{args.axis}={value}\t{cell}\n")
    if out is not None:
        summary = [r.to_dict() for r in reports]
        (out / "sweep.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_filter(args: argparse.Namespace) -> int:
    votes = _read_votes(args.dataset)
    hist = _read_votes(args.history) if args.history else votes
    missing = set(votes.names) - set(hist.names)
    if missing:
        raise DataError(f"models absent from the history: {sorted(missing)}")
    try:
        fit = fit_bt(hist)
    except EmptyVoteSetError as exc:
        raise DataError(str(exc)) from exc
    ratings = np.array([fit.scores[hist.index(n)] for n in votes.names])
    try:
        kept = filter_votes(votes, ratings, args.tau)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_canonical(kept, sys.stdout)
    logging.info("kept %d of %d votes", len(kept), len(votes))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="arena-rigging",
                                description="Vote rigging simulations on BT leaderboards.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit BT ratings to a battle dataset")
    f.add_argument("dataset")
    f.add_argument("--models", help="file listing the models to keep")
    f.add_argument("--out", help="write name,score,rank lines here")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="run one rigging simulation")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="directory for report.json, trajectory.csv, table.txt")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run one simulation per value of a config key")
    w.add_argument("--config", required=True)
    w.add_argument("--axis", required=True)
    w.add_argument("--values", required=True, help="comma-separated values")
    w.add_argument("--out", help="directory for per-cell outputs")
    w.add_argument("--jobs", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    r = sub.add_parser("filter", help="drop confident-underdog wins from a dataset")
    r.add_argument("--dataset", required=True)
    r.add_argument("--tau", type=float, required=True)
    r.add_argument("--history", help="votes used to fit the reference ratings "
                                     "(default: the dataset itself)")
    r.set_defaults(func=cmd_filter)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
