"""Command line entry point: ``pssmp-lab CONFIG [--suite] [--seed S] ...``.

Exit status is 0 when every verdict passes, 1 when any fails and 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import config, experiments, report
from .errors import ConfigError

log = logging.getLogger("pssmp_lab")


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pssmp-lab",
                                description="Run the pssMp verification experiments.")
    p.add_argument("config", help="key = value config file (may be empty in suite mode)")
    p.add_argument("--seed", type=int, help="override the seed of every experiment")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out-dir", help="output directory (overrides out_dir)")
    p.add_argument("--suite", action="store_true", help="run E1 to E10")
    p.add_argument("--only", help="comma separated subset of experiments in suite mode")
    p.add_argument("--validate", action="store_true",
                   help="print diagnostics and exit without sampling")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def _configs(args):
    raw = config.load(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    if args.suite:
        ids = args.only.split(",") if args.only else list(config.EXPERIMENTS)
        for e in ids:
            if e not in config.EXPERIMENTS:
                raise ConfigError("--only", f"unknown experiment {e!r}")
        return [config.build(raw, e, overrides, suite=True) for e in ids]
    return [config.build(raw, None, overrides)]


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s")
    if args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return 2
    try:
        cfgs = _configs(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    diags = [d for c in cfgs for d in experiments.validate(c)]
    if args.validate:
        for d in diags:
            print(d)
        return 1 if diags else 0
    if diags:
        for d in diags:
            print(f"config error: {d}", file=sys.stderr)
        return 2

    out_dir = cfgs[0].out_dir
    results, stamps = [], {}
    try:
        for cfg in cfgs:
            log.info("running %s ...", cfg.experiment)
            res = experiments.run(cfg, args.workers)
            report.write_result(res, out_dir)
            results.append(res)
            stamps[cfg.experiment] = dict(seed=cfg.seed, replicas=cfg.replicas,
                                          workers=args.workers)
            for v in res.verdicts:
                log.info("  %-28s %s  %s", v.name, "pass" if v.passed else "FAIL", v.detail)
            report.write_report(results, stamps, out_dir)
    except KeyboardInterrupt:
        report.write_report(results, stamps, out_dir, interrupted=True)
        print("interrupted; partial results written", file=sys.stderr)
        return 130
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
