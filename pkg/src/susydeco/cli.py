"""Command-line entry point: ``susydeco <verb> [options]``.

Exit status: 0 success, 2 bad config or input, 3 numerical contract
violated (norm loss, box truncation, convergence order outside its
window), 4 methods disagree beyond the configured tolerance.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import commands
from .commands import DeviationExceeded, Table, fmt
from .config import ConfigError, ModelConfig, ScenarioConfig, load_config
from .dsl import ExpressionSource, ParseError, parse_superpotential
from .grid import NumericalContractError
from .potential import PotentialError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_DEVIATION = 4

SPECTRUM_FLOOR = -1e-9


def table_to_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def to_json(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        write_atomic(out, text)


def _scenario_config(args) -> ScenarioConfig:
    if args.config is None and args.superpotential is None:
        raise ConfigError("give --config PATH or --superpotential EXPR", None, "cli")
    cfg = load_config(args.config) if args.config else None
    if args.superpotential is not None:
        try:
            poly = parse_superpotential(ExpressionSource(args.superpotential, "--superpotential"))
        except ParseError as exc:
            raise ConfigError(f"--superpotential: {exc.diagnostic.message} "
                              f"(offset {exc.position})", None, "cli") from None
        if cfg is None:
            cfg = ScenarioConfig(ModelConfig(W=args.superpotential, polynomial=poly),
                                 source="--superpotential")
        else:
            cfg = replace(cfg, model=replace(cfg.model, W=args.superpotential, polynomial=poly))
    return cfg


def _out_path(args, cfg: ScenarioConfig) -> str | None:
    return args.out if args.out is not None else cfg.output.path


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{flag} expects comma-separated numbers, got {text!r}", None,
                          "cli") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{flag} expects finite numbers", None, "cli")
    return vals


def _log(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


# --- verbs ------------------------------------------------------------------------

def run_potentials(args) -> int:
    cfg = _scenario_config(args)
    sc = commands.resolve(cfg)
    _emit(table_to_csv(commands.cmd_potentials(sc)), _out_path(args, cfg))
    return EXIT_OK


def run_wavepackets(args) -> int:
    cfg = _scenario_config(args)
    sc = commands.resolve(cfg)
    if args.times is not None:
        times = _parse_floats(args.times, "--times")
    else:
        if sc.omega_ref is None:
            raise ConfigError("--periods needs a stable equilibrium in both channels", None, "cli")
        period = 2.0 * math.pi / sc.omega_ref
        times = [p * period for p in _parse_floats(args.periods, "--periods")]
    table = commands.cmd_wavepackets(sc, times, args.source)
    _emit(table_to_csv(table), _out_path(args, cfg))
    return EXIT_OK


def run_decoherence(args) -> int:
    cfg = _scenario_config(args)
    sc = commands.resolve(cfg)
    table, summary = commands.cmd_decoherence(sc)
    out = _out_path(args, cfg)
    _emit(table_to_csv(table), out)
    summary_path = args.summary
    if summary_path is None and out is not None:
        summary_path = str(Path(out).with_suffix(".json"))
    if summary_path is not None:
        write_atomic(summary_path, to_json(summary))
    for key, entry in summary["methods"].items():
        _log(args, f"{key}: min |D| = {entry['min_abs_D']:.6g} at t = {entry['t_at_min']:.6g}")
    _log(args, f"max deviation (literal formula excluded): {summary['max_deviation']:.3e}")
    if summary["max_deviation"] > cfg.output.tolerance:
        _log(args, f"error: deviation exceeds tolerance {cfg.output.tolerance:.3e}")
        return EXIT_DEVIATION
    return EXIT_OK


def run_compare(args) -> int:
    cfg = _scenario_config(args)
    sc = commands.resolve(cfg)
    code = EXIT_OK
    try:
        report = commands.cmd_compare(sc)
    except DeviationExceeded as exc:
        report = exc.report
        _log(args, f"error: {exc}")
        code = EXIT_DEVIATION
    _emit(to_json(report), args.out)
    for key, dev in report["deviations"].items():
        _log(args, f"{key}: max |dD| = {dev['max_abs_diff']:.3e}, "
                   f"max d|D| = {dev['max_magnitude_diff']:.3e}")
    return code


def run_susy_check(args) -> int:
    cfg = _scenario_config(args)
    sc = commands.resolve(cfg)
    report = commands.cmd_susy_check(sc, args.halvings, args.n_base, args.half_width)
    _emit(to_json(report), args.out)
    for row in report["residuals"]:
        order = row["order"]
        shown = order if isinstance(order, str) else f"{order:.3f}"
        _log(args, f"{row['name']}: order {shown}")
    if not report["ok"]:
        _log(args, "error: convergence order outside "
                   f"[{report['order_window'][0]}, {report['order_window'][1]}]")
        return EXIT_NUMERICAL
    return EXIT_OK


def run_spectrum(args) -> int:
    cfg = _scenario_config(args)
    sc = commands.resolve(cfg)
    table = commands.cmd_spectrum(sc, args.k)
    _emit(table_to_csv(table), _out_path(args, cfg))
    lowest = min(min(table.column("E_plus")), min(table.column("E_minus")))
    if not sc.clamp and lowest < SPECTRUM_FLOOR:
        # H = 2Q^2 >= 0 holds for the operator; the 3-point stencil shifts a zero mode
        # down by about (dx^2/24)<p^4>, so this is reported rather than fatal
        _log(args, f"warning: eigenvalue {lowest:.3e} below {SPECTRUM_FLOOR:g} "
                   f"(stencil error at dx = {sc.grid.dx:.3g}?)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario file")
    common.add_argument("--superpotential", metavar="EXPR",
                        help='polynomial W(x), e.g. "0.35*x^2"; overrides [model].W')
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--quiet", action="store_true", help="no progress on stderr")

    p = argparse.ArgumentParser(prog="susydeco", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("potentials", parents=[common], help="V+-, and harmonic models, on the grid")
    s.set_defaults(func=run_potentials)

    s = sub.add_parser("wavepackets", parents=[common], help="channel densities at given times")
    when = s.add_mutually_exclusive_group(required=True)
    when.add_argument("--times", help="comma-separated absolute times")
    when.add_argument("--periods", help="comma-separated times in oscillation periods")
    s.add_argument("--source", choices=("analytic", "grid"), default="analytic")
    s.set_defaults(func=run_wavepackets)

    s = sub.add_parser("decoherence", parents=[common], help="D(t) per configured method")
    s.add_argument("--summary", metavar="PATH",
                   help="JSON summary (default: --out with a .json suffix)")
    s.set_defaults(func=run_decoherence)

    s = sub.add_parser("susy-check", parents=[common], help="supercharge algebra convergence")
    s.add_argument("--halvings", type=int, default=1)
    s.add_argument("--n-base", type=int, default=256)
    s.add_argument("--half-width", type=float, default=None,
                   help="box half-width (default: the scenario grid)")
    s.set_defaults(func=run_susy_check)

    s = sub.add_parser("spectrum", parents=[common], help="lowest eigenvalues of H+ and H-")
    s.add_argument("--k", type=int, default=6)
    s.set_defaults(func=run_spectrum)

    s = sub.add_parser("compare", parents=[common], help="all applicable methods, deviations")
    s.set_defaults(func=run_compare)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        # downstream closed early (e.g. `| head`); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except NumericalContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, PotentialError, ParseError, ValueError) as exc:
        # remaining ValueErrors are rejected inputs (e.g. a packet narrower than dx)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
