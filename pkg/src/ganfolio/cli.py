"""Command-line pipeline: ingest, train, simulate, backtest, report.

Every command is deterministic given its config and seed; re-running
overwrites outputs byte-identically (artifacts carry no timestamps).
Exit codes: 0 success, 2 validation error, 3 numeric fault.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .backtest import run_experiment
from .config import RunConfig, load_run_config, write_effective_config
from .errors import GanfolioError, NumericFault, ValidationError
from .gan import load_bundle, save_bundle, simulate_paths, train
from .marketdata import load_price_csv, split_train_test
from .reporting import (read_csv_columns, svg_line_chart, svg_scatter,
                        svg_stacked_weights, write_overlay_csv, write_scatter_csv,
                        write_training_log_csv, write_value_series_csv, write_weights_csv)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        return args.handler(args)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericFault as err:
        print(f"numeric fault: {err}", file=sys.stderr)
        return 3
    except GanfolioError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ganfolio",
        description="Adversarial market-scenario generation and max-Sharpe backtesting")
    parser.add_argument("--version", action="version", version=f"ganfolio {__version__}")
    sub = parser.add_subparsers(dest="command")
    parser.set_defaults(command=None)

    p = sub.add_parser("ingest", help="validate a price CSV and print a summary")
    p.add_argument("--data", required=True, help="price CSV path")
    p.add_argument("--tickers", default=None, help="comma-separated ticker subset/order")
    p.set_defaults(handler=_cmd_ingest)

    p = sub.add_parser("train", help="train a model and persist the bundle")
    _add_config_arguments(p, ("data", "tickers", "split_date", "model", "h", "f", "m",
                              "epochs", "lambda1", "lambda2", "lr", "beta1", "beta2",
                              "seed", "regime", "allow_forward_bias", "out"))
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("simulate", help="draw synthetic paths from a trained bundle")
    _add_config_arguments(p, ("data", "tickers", "split_date", "bundle", "n_draws",
                              "seed", "jobs", "out"))
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("backtest", help="backtest a model (and the Markowitz baseline)")
    _add_config_arguments(p, ("data", "tickers", "split_date", "model", "bundle", "h",
                              "eta", "n_draws", "seed", "r_f", "allow_forward_bias",
                              "jobs", "out"))
    p.set_defaults(handler=_cmd_backtest)

    p = sub.add_parser("report", help="render SVG plots from a backtest run directory")
    p.add_argument("--run", required=True, help="directory produced by `ganfolio backtest`")
    p.set_defaults(handler=_cmd_report)
    return parser


def _add_config_arguments(parser: argparse.ArgumentParser, keys) -> None:
    parser.add_argument("--config", default=None, help="key=value config file")
    for key in keys:
        flag = "--" + key.replace("_", "-")
        if key == "allow_forward_bias":
            parser.add_argument(flag, action="store_const", const=True, default=None,
                                dest=key, help="acknowledge the eavesdrop regime's look-ahead")
        else:
            kind = RunConfig.__dataclass_fields__[key].type
            caster = {"int": int, "float": float}.get(kind, str)
            parser.add_argument(flag, type=caster, default=None, dest=key)


def _config_from_args(args) -> RunConfig:
    overrides = {key: getattr(args, key) for key in RunConfig.__dataclass_fields__
                 if hasattr(args, key)}
    return load_run_config(args.config, overrides)


def _load_frames(config: RunConfig):
    if not config.data:
        raise ValidationError("no data file configured (set data= or --data)")
    frame = load_price_csv(config.data, config.ticker_list())
    if not config.split_date:
        return frame, None, frame
    train_frame, test_frame = split_train_test(frame, config.split_date)
    return frame, train_frame, test_frame


def _require_out(config: RunConfig) -> Path:
    if not config.out:
        raise ValidationError("no output directory configured (set out= or --out)")
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_ingest(args) -> int:
    tickers = None
    if args.tickers:
        tickers = [t.strip() for t in args.tickers.split(",") if t.strip()]
    frame = load_price_csv(args.data, tickers)
    print(f"tickers ({frame.n_assets}): {', '.join(frame.tickers)}")
    print(f"days: {frame.day_count} ({frame.dates[0]} .. {frame.dates[-1]})")
    print(f"price range: {frame.prices.min():.6g} .. {frame.prices.max():.6g}")
    return 0


def _cmd_train(args) -> int:
    config = _config_from_args(args)
    out = _require_out(config)
    _, train_frame, _ = _load_frames(config)
    if train_frame is None:
        raise ValidationError("training needs split_date= so a training segment exists")
    bundle = train(train_frame, config.train_config())
    save_bundle(out / "bundle.gfa", bundle)
    write_training_log_csv(out / "training_log.csv", bundle.training_log)
    write_effective_config(config, out / "config.effective")
    print(f"trained {config.model} on {train_frame.day_count} days "
          f"({len(bundle.training_log)} epochs); bundle at {out / 'bundle.gfa'}")
    return 0


def _cmd_simulate(args) -> int:
    config = _config_from_args(args)
    out = _require_out(config)
    if not config.bundle:
        raise ValidationError("simulate needs bundle= (path to a trained archive)")
    bundle = load_bundle(config.bundle)
    _, _, test_frame = _load_frames(config)
    paths = simulate_paths(bundle, test_frame, config.n_draws, config.seed, n_jobs=config.jobs)
    # .npy + JSON sidecar rather than .npz: zip archives embed timestamps,
    # which would break byte-identical re-runs
    np.save(out / "paths.npy", paths)
    (out / "paths_meta.json").write_text(json.dumps(
        {"tickers": list(test_frame.tickers), "dates": list(test_frame.dates),
         "n_draws": config.n_draws, "seed": config.seed},
        sort_keys=True, indent=1) + "\n")
    write_overlay_csv(out / "overlay.csv", test_frame, paths)
    write_effective_config(config, out / "config.effective")
    print(f"simulated {config.n_draws} paths over {test_frame.day_count} days; "
          f"outputs in {out}")
    return 0


def _cmd_backtest(args) -> int:
    config = _config_from_args(args)
    out = _require_out(config)
    _, _, test_frame = _load_frames(config)
    results = {}
    if config.model != "markowitz":
        if not config.bundle:
            raise ValidationError("backtest needs bundle= for GAN models "
                                  "(or model=markowitz for the baseline alone)")
        bundle = load_bundle(config.bundle)
        if bundle.config.resolved_regime == "eavesdrop" and not config.allow_forward_bias:
            raise ValidationError(
                "bundle was trained with the eavesdrop regime; re-run with "
                "--allow-forward-bias to backtest this forward-biased diagnostic")
        results[config.model] = run_experiment(bundle, test_frame, config.eta,
                                               n_draws=config.n_draws, seed=config.seed,
                                               r_f=config.r_f, n_jobs=config.jobs)
        h = bundle.config.h
    else:
        h = config.h
    results["markowitz"] = run_experiment("markowitz", test_frame, config.eta,
                                          r_f=config.r_f, h=h)

    write_value_series_csv(out / "value_series.csv",
                           next(iter(results.values())).dates,
                           {name: r.value_series for name, r in results.items()})
    for name, result in results.items():
        write_weights_csv(out / f"weights_{name}.csv", result.schedule,
                          test_frame.dates, test_frame.tickers)
        if result.draw_scatter is not None:
            write_scatter_csv(out / "scatter.csv", result.draw_scatter)
    write_effective_config(config, out / "config.effective")
    for name, result in results.items():
        flag = " (degenerate)" if result.sharpe_degenerate else ""
        print(f"{name}: final value {result.value_series[-1]:.4f}, "
              f"annual return {result.annual_return:.4f}, "
              f"annual Sharpe {result.annual_sharpe:.4f}{flag}")
    return 0


def _cmd_report(args) -> int:
    run_dir = Path(args.run)
    if not run_dir.is_dir():
        raise ValidationError(f"run directory not found: {run_dir}")
    produced = []

    values_csv = run_dir / "value_series.csv"
    if values_csv.exists():
        columns = read_csv_columns(values_csv)
        series = {name: np.array([float(x) for x in column])
                  for name, column in columns.items() if name != "date"}
        svg_line_chart(run_dir / "value_series.svg", series, "Portfolio value (unit start)")
        produced.append("value_series.svg")

    scatter_csv = run_dir / "scatter.csv"
    if scatter_csv.exists():
        columns = read_csv_columns(scatter_csv)
        points = np.column_stack([[float(x) for x in columns["annual_return"]],
                                  [float(x) for x in columns["annual_sharpe"]]])
        svg_scatter(run_dir / "scatter.svg", points, "Per-draw annual return vs Sharpe ratio")
        produced.append("scatter.svg")

    for weights_csv in sorted(run_dir.glob("weights_*.csv")):
        name = weights_csv.stem.removeprefix("weights_")
        schedule, tickers = _schedule_from_weights_csv(weights_csv)
        svg_stacked_weights(run_dir / f"{weights_csv.stem}.svg", schedule, tickers,
                            f"Weights over time: {name}")
        produced.append(f"{weights_csv.stem}.svg")

    if not produced:
        raise ValidationError(f"{run_dir}: no backtest CSVs found to render")
    print(f"wrote {', '.join(produced)} in {run_dir}")
    return 0


def _schedule_from_weights_csv(path):
    from .backtest import WeightSchedule

    columns = read_csv_columns(path)
    dates = columns["date"]
    tickers = []
    for t in columns["ticker"]:
        if t not in tickers:
            tickers.append(t)
    unique_dates = []
    for d in dates:
        if d not in unique_dates:
            unique_dates.append(d)
    weights = np.empty((len(unique_dates), len(tickers)))
    for date, ticker, weight in zip(dates, columns["ticker"], columns["weight"]):
        weights[unique_dates.index(date), tickers.index(ticker)] = float(weight)
    # synthetic evenly spaced indices; the plot only needs order and values
    indices = tuple(range(1, len(unique_dates) + 1))
    return WeightSchedule(indices, weights), tickers


if __name__ == "__main__":
    sys.exit(main())
