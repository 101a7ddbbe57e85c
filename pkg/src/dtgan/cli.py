"""Command-line entry point: ``python -m dtgan <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import config as config_mod
from .datagen import write_samples_csv
from .experiments import regime_data, reproduce_tables, run_experiment, verify, write_table


def _load(path: str, seed: int | None) -> config_mod.ExperimentConfig:
    p = Path(path)
    if p.exists():
        cfg = config_mod.load(p)
    elif path in config_mod.CANNED:
        cfg = config_mod.canned(path)
    else:
        raise SystemExit(f"no config file {path!r} and no canned config of that name "
                         f"(canned: {', '.join(config_mod.CANNED)})")
    if seed is not None:
        cfg = config_mod.with_seeds(cfg, [seed])
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args.config, args.seed)
    out = Path(args.out) if args.out else cfg.output_dir()
    table = run_experiment(cfg, threads=args.threads, trajectory_dir=out / "trajectories")
    files = write_table(table, out, cfg.regime)
    config_mod.save(cfg, out / "config.toml")
    print(json.dumps(files, indent=2))
    return 0


def cmd_reproduce(args) -> int:
    seeds = None if args.seed is None else [args.seed]
    res = reproduce_tables(args.out, threads=args.threads, seeds=seeds)
    crit = res["summary"]["criteria"]
    for name, c in crit.items():
        print(f"{name}: {'PASS' if c['passed'] else 'FAIL'}  ({c['rule']})")
    return 0 if all(c["passed"] for c in crit.values()) else 1


def cmd_verify(args) -> int:
    kwargs = {} if args.seed is None else {"rate_seed": args.seed}
    report = verify(args.out, **kwargs)
    for name, r in report.items():
        if isinstance(r, dict):
            print(f"{name}: {'PASS' if r['passed'] else 'FAIL'}")
    return 0 if report["all_passed"] else 1


def cmd_dump(args) -> int:
    cfg = _load(args.config, args.seed)
    out = Path(args.out)
    written = []
    for p in cfg.params:
        for sd in cfg.seeds:
            x, _ = regime_data(cfg, p, sd)
            written.append(str(write_samples_csv(out / f"{cfg.regime}_p{p:g}_seed{sd}.csv", x)))
    print("\n".join(written))
    return 0


def build_parser() -> argparse.ArgumentParser:
    # shared flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="replace the config's seed list with this single seed")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="experiment cells run in parallel (default 1)")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    ap = argparse.ArgumentParser(prog="dtgan", description=__doc__, parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    run = add("run", help="run one experiment config")
    run.add_argument("config", help="TOML file, or a canned config name")
    run.add_argument("--out", default=None, help="output directory (default: from config)")
    run.set_defaults(func=cmd_run)

    rep = add("reproduce-tables", help="run the three table configs")
    rep.add_argument("out")
    rep.set_defaults(func=cmd_reproduce)

    ver = add("verify", help="run the oracle checks and write a JSON report")
    ver.add_argument("out")
    ver.set_defaults(func=cmd_verify)

    dump = add("dump-data", help="write the training samples of a config as CSV")
    dump.add_argument("config")
    dump.add_argument("out")
    dump.set_defaults(func=cmd_dump)
    return ap


DEFAULTS = {"seed": None, "threads": 1, "verbose": False}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for key, value in DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    if args.threads < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
