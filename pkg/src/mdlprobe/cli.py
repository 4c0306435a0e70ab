"""Command line interface.

Exit codes: 0 ok, 2 config/usage error, 3 data error, 4 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .data import dump_jsonl
from .errors import ConfigError, MDLError
from .experiment import deltas_between_reports, load_config, load_report, run_experiment
from .synthetic import GENERATORS


def _words(s: str) -> list[str]:
    return [w for w in s.split(",") if w]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mdlprobe",
        description="Block-wise prequential MDL of labels, compared across input transforms.",
        epilog="exit codes: 0 ok, 2 config or usage error, 3 data error, 4 internal invariant violation",
    )
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--out", default="mdl_out", help="output directory (default: mdl_out)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes; results do not depend on it")
    run.add_argument("--cap", type=int, default=None, help="override the dataset cap")

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    val.add_argument("--cap", type=int, default=None)

    delta = sub.add_parser("delta", help="paired per-condition deltas between two reports (A - B)")
    delta.add_argument("report_a")
    delta.add_argument("report_b")

    gen = sub.add_parser("gen", help="write a synthetic dataset as JSONL")
    gen.add_argument("task", choices=sorted(GENERATORS))
    gen.add_argument("--n", type=int, default=4096)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--vocab", type=int)
    gen.add_argument("--max-count", type=int)
    gen.add_argument("--length", type=int)
    gen.add_argument("--list-a", type=_words, help="comma-separated words")
    gen.add_argument("--list-b", type=_words, help="comma-separated words")
    gen.add_argument("--out", required=True, help="output JSONL path")
    return p


def _gen_kwargs(args) -> dict:
    kw = {"n": args.n, "seed": args.seed}
    optional = {"vocab": args.vocab, "max_count": args.max_count, "length": args.length,
                "list_a": args.list_a, "list_b": args.list_b}
    kw.update({k: v for k, v in optional.items() if v is not None})
    return kw


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("run", "validate"):
            cfg = load_config(args.config)
            if args.cap is not None:
                if args.cap < 1:
                    raise ConfigError("--cap must be >= 1")
                cfg = replace(cfg, cap=args.cap)
            if args.command == "validate":
                print(f"ok: {cfg.name} ({len(cfg.conditions)} conditions, "
                      f"{len(cfg.roster)} learners, {len(cfg.seeds)} seeds)")
                return 0
            if args.jobs < 1:
                raise ConfigError("--jobs must be >= 1")
            report = run_experiment(cfg, jobs=args.jobs)
            report.write(args.out)
            for d in report.data["deltas"]:
                se = "n/a" if d["delta_stderr"] is None else f"{d['delta_stderr']:.2f}"
                print(f"{d['a']} - {d['b']}: {d['delta_mean']:+.2f} bits (stderr {se}) {d['verdict']}")
            print(f"wrote {Path(args.out) / 'report.json'}")
            return 0
        if args.command == "delta":
            out = deltas_between_reports(load_report(args.report_a), load_report(args.report_b))
            print(json.dumps(out, indent=2, sort_keys=True))
            return 0
        if args.command == "gen":
            try:
                ds = GENERATORS[args.task](**_gen_kwargs(args))
            except TypeError as e:
                raise ConfigError(f"{args.task}: {e}") from None
            dump_jsonl(ds, args.out)
            print(f"wrote {len(ds)} examples to {args.out}")
            return 0
    except MDLError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    return 2
