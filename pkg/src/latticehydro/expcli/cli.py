"""Command line entry point.

Exit codes: 0 success, 2 validation error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..dispersion import check_conditions
from ..errors import LatticeHydroError
from .config import ConfigError, load_config
from .results import ResultsError, convergence, read_csv
from .runner import ConditionsFailed, build_model, run_experiment

log = logging.getLogger("latticehydro")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3


def _apply_overrides(cfg, args):
    if args.seed is not None:
        cfg.experiment.seed = args.seed
    if args.jobs is not None:
        if args.jobs < 1:
            raise ConfigError("--jobs", "must be >= 1")
        cfg.experiment.jobs = args.jobs
    if args.out is not None:
        cfg.output.directory = args.out
    return cfg


def cmd_run(args):
    cfg = _apply_overrides(load_config(args.config), args)
    table = run_experiment(cfg)
    outdir = Path(cfg.output.directory)
    if "csv" in cfg.output.formats:
        path = table.write(outdir / f"{cfg.experiment.id}.csv")
        print(f"wrote {path}")
    if "svg" in cfg.output.formats:
        from .plots import render_plots

        for p in render_plots(table, outdir, prefix=cfg.experiment.id):
            print(f"wrote {p}")
    eps_rows = {r.eps for r in table.of_kind("err") if r.eps is not None}
    if len(eps_rows) >= 2:
        print(convergence(table).text())
    tol = cfg.experiment.tol
    if tol is not None and eps_rows:
        last = min(eps_rows)
        worst = max(abs(complex(r.re, r.im)) for r in table.of_kind("err") if r.eps == last)
        if worst > tol:
            print(f"max err {worst:.3e} at eps={last:g} exceeds tol {tol:.3e}", file=sys.stderr)
            return EXIT_NUMERIC
    return EXIT_OK


def cmd_table(args):
    print(convergence(read_csv(args.csv)).text())
    return EXIT_OK


def cmd_plot(args):
    from .plots import render_plots

    table = read_csv(args.csv)
    outdir = Path(args.out) if args.out else Path(args.csv).parent
    paths = render_plots(table, outdir, prefix=Path(args.csv).stem)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_check(args):
    cfg = _apply_overrides(load_config(args.config), args)
    V, _ = build_model(cfg)
    report = check_conditions(V)
    for name, entry in report.entries.items():
        print(f"{name}: {entry.status}" + (f" ({entry.note})" if entry.note else ""))
    return EXIT_OK if report.all_passed else EXIT_NUMERIC


def build_parser():
    parser = argparse.ArgumentParser(prog="latticehydro", description="Harmonic crystal hydrodynamic-limit experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="override experiment.seed")
        p.add_argument("--jobs", type=int, default=None, help="worker threads for Monte Carlo")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("table", help="print the convergence table of a result CSV")
    p.add_argument("csv")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("plot", help="render SVG plots from a result CSV")
    p.add_argument("csv")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("check", help="check the model conditions of a config")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ResultsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConditionsFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LatticeHydroError as exc:
        code = EXIT_VALIDATION if isinstance(exc, ValueError) else EXIT_NUMERIC
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
