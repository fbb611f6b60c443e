"""Command-line front end: ``irsec {pdf,capacity,optimize,sweep}``.

Exit codes: 0 success, 2 configuration error, 3 optimizer stall,
4 numerical failure.  Diagnostics go to stderr as a single line.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import os
import sys
from typing import Iterable, Sequence

import numpy as np

from .capacity import db_to_linear
from .eigenpdf import support_bound
from .errors import ConfigError, DomainError, IrsecError, NumericalError
from .experiment import ExperimentConfig, Scenario, load_config, sweep_values
from .montecarlo import THREADS_ENV
from .optimizer import optimize_multistart
from .svg import line_chart

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STALL = 3
EXIT_NUMERIC = 4

_AXIS_LABELS = {
    "N": "Number of IRS elements N",
    "d_spacing": "Element spacing (wavelengths)",
    "kappa_min": "Minimum amplitude kappa_min",
    "xi": "Amplitude steepness xi",
    "snr": "SNR (dB)",
}


def fmt(value: float) -> str:
    return "{:.12g}".format(float(value))


def _u64(text: str) -> int:
    try:
        val = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return val


def _positive(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return val


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"irsec: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration (defaults apply when omitted)")
    common.add_argument("--seed", type=_u64, help="override mc.seed")
    common.add_argument("--trials", type=_positive, help="override mc.trials")
    common.add_argument("--out", help="CSV output path (stdout when omitted)")

    parser = _Parser(prog="irsec", description="Ergodic capacity of IRS-assisted MIMO links.",
                     epilog=f"Set {THREADS_ENV} to choose the Monte-Carlo thread count.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("pdf", parents=[common], help="marginal eigenvalue density on a grid")
    sub.add_parser("capacity", parents=[common], help="analytic and Monte-Carlo capacity per SNR")
    opt = sub.add_parser("optimize", parents=[common], help="optimize IRS phases, emit the trace")
    opt.add_argument("--phases-out", help="path for the optimized phases (default: derived from --out)")
    sw = sub.add_parser("sweep", parents=[common], help="capacity curves along one parameter")
    sw.add_argument("--svg", help="also write an SVG line chart")
    return parser


@contextlib.contextmanager
def _sink(path: str | None):
    if path is None:
        yield sys.stdout
        return
    buf = io.StringIO()
    yield buf
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _write_csv(path: str | None, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with _sink(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else fmt(c) for c in row])


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.trials is not None:
        cfg = cfg.replace(trials=args.trials)
    return cfg


def _first_snr(cfg: ExperimentConfig) -> float:
    return float(db_to_linear(cfg.snr_db[0]))


def cmd_pdf(cfg: ExperimentConfig, args) -> int:
    pdf = Scenario(cfg, _first_snr(cfg)).pdf()
    if cfg.pdf_grid:
        grid = np.asarray(cfg.pdf_grid)
    else:
        u = np.linspace(0.0, support_bound(pdf, 1e-12), 401)[1:]
        grid = u * u
    dens = pdf.density(grid)
    _write_csv(args.out, ("lambda", "density"), zip(grid, dens))
    return EXIT_OK


def cmd_capacity(cfg: ExperimentConfig, args) -> int:
    rows = []
    for snr_db, snr in zip(cfg.snr_db, cfg.snr_linear()):
        scen = Scenario(cfg, float(snr))
        analytic = scen.capacity()
        mc = scen.mc_capacity()
        rows.append((snr_db, analytic, mc.mean, mc.half_width_99, abs(analytic - mc.mean)))
    _write_csv(args.out, ("snr_db", "ec_analytic", "ec_mc_mean", "ec_mc_ci99", "gap"), rows)
    return EXIT_OK


def _phases_path(args) -> str | None:
    if args.phases_out:
        return args.phases_out
    if args.out:
        root, _ = os.path.splitext(args.out)
        return root + ".phases.csv"
    return None


def cmd_optimize(cfg: ExperimentConfig, args) -> int:
    scen = Scenario(cfg, _first_snr(cfg))
    if scen.problem is None:
        raise ConfigError("optimize needs a physical system; remove the 'ensemble' override")
    start = "random" if cfg.phases == "optimized" else cfg.phases
    initial = scen.phases(start)
    phases, trace, _ = optimize_multistart(scen.problem, cfg.optimizer, cfg.starts, cfg.seed, initial)
    rows = [(r.iteration, r.objective, r.grad_norm, r.step) for r in trace.records]
    _write_csv(args.out, ("iteration", "objective", "grad_norm", "step"), rows)
    path = _phases_path(args)
    if path is not None:
        _write_csv(path, ("element", "phase"), ((str(i), p) for i, p in enumerate(phases.phases)))
    if trace.stalled:
        sys.stderr.write(f"irsec: line search stalled at iteration {trace.records[-1].iteration}\n")
        return EXIT_STALL
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    if cfg.ensemble is not None:
        raise ConfigError("sweep needs a physical system; remove the 'ensemble' override")
    results = [(v, sweep_values(cfg, v)) for v in cfg.sweep_values]
    rows = [(v, name, vals[name]) for v, vals in results for name in cfg.sweep_series]
    _write_csv(args.out, ("axis_value", "series", "ec"), rows)
    if args.svg:
        xs = [v for v, _ in results]
        series = {name: [vals[name] for _, vals in results] for name in cfg.sweep_series}
        doc = line_chart(xs, series, _AXIS_LABELS[cfg.sweep_axis], "Ergodic capacity (bit/s/Hz)")
        with open(args.svg, "w", encoding="utf-8", newline="") as fh:
            fh.write(doc)
    return EXIT_OK


_COMMANDS = {"pdf": cmd_pdf, "capacity": cmd_capacity, "optimize": cmd_optimize, "sweep": cmd_sweep}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return _COMMANDS[args.command](cfg, args)
    except (ConfigError, DomainError) as exc:
        sys.stderr.write(f"irsec: config error: {exc}\n")
        return EXIT_CONFIG
    except NumericalError as exc:
        sys.stderr.write(f"irsec: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (IrsecError, ArithmeticError, FloatingPointError) as exc:
        sys.stderr.write(f"irsec: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except OSError as exc:
        sys.stderr.write(f"irsec: cannot write output: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
