"""Command-line interface: ingest, analyze, simulate, compare, sweep.

Each failure class maps to a fixed exit code and a single machine-parseable
line on stderr (`specdist: error code=<n> kind=<Type> msg="..."`):

    0  success
    1  unexpected internal error
    2  usage error (bad flags or arguments)
    3  input file missing or unreadable
    4  format or schema error (bad header, misaligned metric grids)
    5  invalid configuration or parameter values
    6  degenerate data (too few channels, zero variance, empty spectra)

Log verbosity is controlled only by the SPECDIST_LOG environment variable
(DEBUG, INFO, WARNING, ...).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from . import pipeline
from .errors import (
    AlignmentError,
    AnalysisError,
    ConfigurationError,
    DegenerateFitError,
    DegenerateSpectrumError,
    DimensionError,
    FormatError,
    InvalidWindowError,
    OutOfRangeError,
    SpecdistError,
    TransformError,
    UndefinedCorrelationError,
)
from .ingest import (
    ResampleGrid,
    build_panel,
    market_series,
    read_panel_csv,
    read_ticks,
    write_panel_csv,
)
from .simulator import SimConfig, load_sim_config, run_simulation

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_CONFIG = 5
EXIT_DATA = 6

_ERROR_CODES: tuple[tuple[type, int], ...] = (
    (FormatError, EXIT_FORMAT),
    (AlignmentError, EXIT_FORMAT),
    (DimensionError, EXIT_FORMAT),
    (ConfigurationError, EXIT_CONFIG),
    (InvalidWindowError, EXIT_CONFIG),
    (AnalysisError, EXIT_DATA),
    (DegenerateSpectrumError, EXIT_DATA),
    (TransformError, EXIT_DATA),
    (UndefinedCorrelationError, EXIT_DATA),
    (DegenerateFitError, EXIT_DATA),
    (OutOfRangeError, EXIT_DATA),
)


def _exit_code(exc: Exception) -> int:
    for kind, code in _ERROR_CODES:
        if isinstance(exc, kind):
            return code
    if isinstance(exc, (FileNotFoundError, PermissionError, IsADirectoryError)):
        return EXIT_IO
    if isinstance(exc, (ValueError, KeyError)):
        return EXIT_CONFIG
    return EXIT_INTERNAL


def _fail(exc: Exception) -> int:
    code = _exit_code(exc)
    kind = type(exc).__name__
    msg = str(exc).replace('"', "'")
    print(f'specdist: error code={code} kind={kind} msg="{msg}"', file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specdist",
        description="Spectral-distance analytics for multi-channel market series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="tick CSV -> activity/rate panel CSVs")
    p.add_argument("ticks", help="tick CSV file (gzip accepted by .gz extension)")
    p.add_argument("--side", choices=("ask", "bid"), default="ask")
    p.add_argument("--dt", type=float, default=1.0, help="bucket width in minutes")
    p.add_argument("--activity-out", help="write the quotation-frequency panel here")
    p.add_argument("--rates-out", help="write the best-rate panel here")
    p.add_argument(
        "--rates-transform", choices=("raw", "log-return"), default="raw",
        help="transform applied to the best-rate panel",
    )
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("analyze", help="panel CSV -> windowed metrics CSV")
    p.add_argument("panel", help="panel CSV (`time,<channel>,...`)")
    p.add_argument("--out", required=True, help="metrics CSV destination")
    p.add_argument("--window", type=int, default=128, help="window width in samples")
    p.add_argument("--stride", type=int, default=None, help="samples between window starts")
    p.add_argument("--transform", choices=("raw", "log-return"), default="raw")
    p.add_argument("--channels", help="comma-separated channel subset")
    p.add_argument("--weights", help="comma-separated mixture weights (default uniform)")
    p.add_argument("--floor", type=float, default=1e-12, help="KL probability floor")
    p.add_argument("--dump-spectra", help="also write per-window spectra here")
    p.add_argument("--dump-kl", help="also write per-window KL matrices here")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("simulate", help="agent-based model -> panel CSVs")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--rates-out", help="write the simulated rate panel here")
    p.add_argument("--activity-out", help="write the simulated activity panel here")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int, help="recorded steps after warm-up")
    p.add_argument("--warmup", type=int)
    p.add_argument("--agents", type=int)
    p.add_argument("--commodities", type=int)
    p.add_argument("--ma-span", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--sigma-xi", type=float)
    p.add_argument("--sigma-s", type=float)
    p.add_argument("--theta-buy", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--theta-sell", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--a-range", type=float, nargs=2, metavar=("A1", "A2"))
    p.add_argument("--resample-params", action="store_true", default=None,
                   help="redraw agent parameters every step")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("compare", help="two metrics CSVs -> correlation and slope")
    p.add_argument("left", help="metrics CSV providing the x series")
    p.add_argument("right", help="metrics CSV providing the y series")
    p.add_argument("--field-a", choices=("js", "mean_kl"), default="js",
                   help="column of LEFT to use")
    p.add_argument("--field-b", choices=("js", "mean_kl"), default="js",
                   help="column of RIGHT to use")
    p.add_argument("--fit", choices=("origin", "affine"), default="origin")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("sweep", help="parameter-entropy sweep -> (H_a, mean JS) table")
    p.add_argument("--ha", required=True,
                   help="comma-separated parameter-entropy values, e.g. -1,0,1")
    p.add_argument("--seeds", type=int, default=3, help="seeds averaged per value")
    p.add_argument("--center", type=float,
                   help="center of the swept sensitivity range")
    p.add_argument("--steps", type=int, help="recorded steps per run")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--agents", type=int)
    p.add_argument("--commodities", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--window", type=int, default=128)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--out", help="write the table as CSV instead of stdout")
    p.set_defaults(func=_cmd_sweep)

    return parser


def _cmd_ingest(args: argparse.Namespace) -> int:
    if not (args.activity_out or args.rates_out):
        raise ConfigurationError("nothing to do: pass --activity-out and/or --rates-out")
    parsed = read_ticks(args.ticks)
    if parsed.malformed:
        print(
            f"specdist: warning {parsed.malformed} malformed row(s) skipped",
            file=sys.stderr,
        )
        for problem in parsed.problems:
            print(f"specdist: warning   {problem}", file=sys.stderr)
    if not parsed.records:
        raise AnalysisError("no valid ticks to resample")
    grid = ResampleGrid.covering(parsed.records, dt=args.dt)
    series = market_series(parsed.records, grid, args.side)
    if args.activity_out:
        panel = build_panel(series, "activity", "raw")
        meta = {"side": args.side, "dt": repr(args.dt), "transform": "raw"}
        write_panel_csv(panel, args.activity_out, meta)
    if args.rates_out:
        panel = build_panel(series, "rate", args.rates_transform)
        meta = {"side": args.side, "dt": repr(args.dt), "transform": args.rates_transform}
        write_panel_csv(panel, args.rates_out, meta)
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:
    panel = read_panel_csv(args.panel)
    channels = tuple(args.channels.split(",")) if args.channels else None
    weights = (
        tuple(float(w) for w in args.weights.split(",")) if args.weights else None
    )
    cfg = pipeline.AnalysisConfig(
        width=args.window,
        stride=args.stride,
        channels=channels,
        transform=args.transform,
        weights=weights,
        kl_floor=args.floor,
    )
    result = pipeline.analyze(panel, cfg, keep_spectra=bool(args.dump_spectra))
    pipeline.write_metrics_csv(result, args.out)
    if args.dump_spectra:
        pipeline.write_spectra_csv(result, args.dump_spectra)
    if args.dump_kl:
        pipeline.write_kl_csv(result, args.dump_kl)
    return EXIT_OK


_SIM_OVERRIDES = {
    "seed": "seed",
    "steps": "horizon",
    "warmup": "warmup",
    "agents": "n_agents",
    "commodities": "n_commodities",
    "ma_span": "ma_span",
    "gamma": "gamma",
    "sigma_xi": "sigma_xi",
    "sigma_s": "sigma_s",
    "resample_params": "resample_params",
}


def _sim_config(args: argparse.Namespace) -> SimConfig:
    cfg = load_sim_config(args.config) if args.config else SimConfig()
    overrides = {}
    for arg_name, field_name in _SIM_OVERRIDES.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            overrides[field_name] = value
    if getattr(args, "theta_buy", None) is not None:
        overrides["theta_buy_range"] = tuple(args.theta_buy)
    if getattr(args, "theta_sell", None) is not None:
        overrides["theta_sell_range"] = tuple(args.theta_sell)
    if getattr(args, "a_range", None) is not None:
        overrides["a_range"] = tuple(args.a_range)
    return replace(cfg, **overrides)


def _cmd_simulate(args: argparse.Namespace) -> int:
    if not (args.rates_out or args.activity_out):
        raise ConfigurationError("nothing to do: pass --rates-out and/or --activity-out")
    cfg = _sim_config(args)
    rates, activity = run_simulation(cfg)
    meta = {
        "source": "simulate",
        "seed": str(cfg.seed),
        "steps": str(cfg.horizon),
        "transform": "raw",
    }
    if args.rates_out:
        write_panel_csv(rates, args.rates_out, meta)
    if args.activity_out:
        write_panel_csv(activity, args.activity_out, meta)
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace) -> int:
    left = pipeline.read_metrics_csv(args.left)
    right = pipeline.read_metrics_csv(args.right)
    pipeline.check_comparable(left, right)
    report = pipeline.compare_metric_series(
        left.series(args.field_a), right.series(args.field_b), fit=args.fit
    )
    line = f"C={report.correlation!r} slope={report.slope!r}"
    if report.intercept is not None:
        line += f" intercept={report.intercept!r}"
    print(line)
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    try:
        h_a_values = [float(v) for v in args.ha.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"bad --ha list: {exc}") from None
    if not h_a_values:
        raise ConfigurationError("--ha needs at least one value")
    base = SimConfig()
    overrides = {}
    for arg_name, field_name in (
        ("seed", "seed"),
        ("steps", "horizon"),
        ("agents", "n_agents"),
        ("commodities", "n_commodities"),
        ("gamma", "gamma"),
    ):
        value = getattr(args, arg_name, None)
        if value is not None:
            overrides[field_name] = value
    base = replace(base, **overrides)
    analysis = pipeline.AnalysisConfig(width=args.window, stride=args.stride)
    points = pipeline.entropy_sweep(
        h_a_values, base, analysis, seeds=args.seeds, center=args.center
    )
    if args.out:
        pipeline.write_sweep_csv(points, args.out)
    else:
        print("h_a,a1,a2,mean_js")
        for p in points:
            print(f"{p.h_a!r},{p.a_range[0]!r},{p.a_range[1]!r},{p.mean_js!r}")
    return EXIT_OK


def main(argv=None) -> int:
    level = os.environ.get("SPECDIST_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except SpecdistError as exc:
        return _fail(exc)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(exc)
    except Exception as exc:  # pragma: no cover - last-resort guard
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
