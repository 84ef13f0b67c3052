"""Command-line entry point.

Every subcommand writes its outputs plus ``run-manifest.json`` under
``--out-dir``. A manifest (or any JSON object keyed by option names) can be
passed back with ``--config``; flags given on the command line override it.

Exit status: 0 on success, 1 when a stage fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import checkpoint as ckpt
from .arima import ArimaOrder
from .errors import ClockBiasError
from .evaluation import (
    DAY,
    DOMAINS,
    SplitSpec,
    compare_frames,
    forecast_report,
    plot_data_to_csv,
    reports_to_csv,
    split_by_duration,
    to_domain,
)
from .forecasters import NeuralForecaster, make_forecaster
from .ingest import (
    PRESETS,
    SynthConfig,
    generate_synthetic_clock,
    parse_clock_csv,
    parse_rinex_clk,
    preset,
    series_to_csv,
    to_csv,
)
from .neural.networks import DEFAULT_WINDOW
from .neural.training import TrainConfig
from .series import UniformSeries, resample_uniform, single_difference, standardize

log = logging.getLogger("clockbias")

MANIFEST = "run-manifest.json"
# options that never belong in a manifest
_TRANSIENT = {"config", "command", "verbose", "out_dir"}


class StageError(Exception):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(message)


# ----------------------------------------------------------------- parser


def _add_source(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data source (exactly one)")
    g.add_argument("--csv", help="clock CSV with header epoch_s,bias_s")
    g.add_argument("--rinex", help="RINEX 3.x clock file")
    g.add_argument("--sat", help="satellite id for --rinex, e.g. E08")
    g.add_argument("--synth", help=f"synthetic preset ({', '.join(sorted(PRESETS))}) or JSON spec path")
    g.add_argument("--step", type=float, help="resampling step in seconds (default: smallest interval)")


def _add_model_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model options")
    g.add_argument("--tiny", action="store_true", default=None,
                   help="test-scale architecture (LSTM 32/16, dense 16/8/4/1)")
    g.add_argument("--window", type=int, help=f"input window length (default {DEFAULT_WINDOW})")
    g.add_argument("--epochs", type=int, help="maximum epochs (default 10)")
    g.add_argument("--lr", type=float, help="Adam learning rate (default 0.001)")
    g.add_argument("--patience", type=int, help="early-stopping patience (default 3)")
    g.add_argument("--batch-size", type=int, help="mini-batch size (default 32)")
    g.add_argument("--val-fraction", type=float, help="validation fraction (default 0.1)")
    g.add_argument("--clip-norm", type=float, help="global gradient-norm clip, 0 disables (default 5)")
    g.add_argument("--no-standardize", action="store_true", default=None,
                   help="train neural models on unscaled values")
    g.add_argument("--arima-order", help="p,d,q or 'auto' for an AIC search (default 1,1,1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clockbias", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"clockbias {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    parser.commands = {}

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        parser.commands[name] = p
        p.add_argument("--config", help="JSON config or run manifest; flags override it")
        p.add_argument("--out-dir", default=None, help="output directory (default: current)")
        p.add_argument("--seed", type=int, help="seed for every random draw")
        p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        return p

    p = command("synth", "write a synthetic clock-bias CSV")
    p.add_argument("--preset", help="preset name (default 'default')")
    p.add_argument("--spec", help="JSON file with synthetic clock parameters")

    p = command("preprocess", "single-difference and resample a clock series")
    _add_source(p)
    p.add_argument("--standardize", action="store_true", default=None,
                   help="also standardise the resampled differences")

    p = command("train", "fit one model on the training span and write a checkpoint")
    _add_source(p)
    p.add_argument("--model", help="lstm, rnn, mlp or arima (default lstm)")
    p.add_argument("--train-days", type=float, help="training span in days (default 4)")
    _add_model_options(p)

    p = command("predict", "closed-loop forecast from a checkpoint")
    p.add_argument("--checkpoint", help="checkpoint JSON")
    p.add_argument("--horizon", type=int, help="number of steps to forecast")
    _add_source(p)

    p = command("evaluate", "score a checkpoint on the span after its training data")
    p.add_argument("--checkpoint", help="checkpoint JSON")
    p.add_argument("--frame", type=float, help="time frame in days (default: whole series)")
    p.add_argument("--domain", choices=DOMAINS, help="difference (default) or restored bias")
    p.add_argument("--figures", action="store_true", default=None, help="also render PNG figures")
    _add_source(p)

    p = command("compare", "train every model and tabulate RMSE/MAE/MAPE per time frame")
    _add_source(p)
    p.add_argument("--frames", help="comma-separated frame lengths in days (default 7,14,21,31)")
    p.add_argument("--train-days", type=float, help="training span in days (default 4)")
    p.add_argument("--models", help="comma-separated models (default lstm,rnn,mlp,arima)")
    p.add_argument("--domain", choices=DOMAINS, help="difference (default) or restored bias")
    p.add_argument("--workers", type=int, help="models evaluated concurrently (default 1)")
    p.add_argument("--figures", action="store_true", default=None, help="also render PNG figures")
    _add_model_options(p)

    p = command("inspect", "print a checkpoint's architecture summary")
    p.add_argument("--checkpoint", help="checkpoint JSON")
    return parser


DEFAULTS = {
    "out_dir": ".",
    "preset": "default",
    "model": "lstm",
    "train_days": 4.0,
    "frames": "7,14,21,31",
    "models": "lstm,rnn,mlp,arima",
    "domain": "difference",
    "workers": 1,
    "tiny": False,
    "window": DEFAULT_WINDOW,
    "no_standardize": False,
    "standardize": False,
    "figures": False,
    "arima_order": "1,1,1",
}


def _load_config(path: str) -> tuple[str | None, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise StageError("config", f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise StageError("config", "config must be a JSON object")
    command = doc.get("command")
    if "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]
    return command, {k.replace("-", "_"): v for k, v in doc.items()}


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise SystemExit(2)
    file_values = {}
    if args.config:
        manifest_command, file_values = _load_config(args.config)
        if manifest_command and manifest_command != args.command:
            parser.commands[args.command].error(f"config was written by '{manifest_command}', not '{args.command}'")
    for key, value in {**DEFAULTS, **file_values}.items():
        if key in _TRANSIENT - {"out_dir"}:
            continue
        if getattr(args, key, None) is None and (hasattr(args, key) or key in file_values):
            setattr(args, key, value)
    if args.out_dir is None:
        args.out_dir = file_values.get("out_dir", DEFAULTS["out_dir"])
    args._parser = parser.commands[args.command]
    return args


def _usage(args, message: str):
    args._parser.error(message)


def _require_seed(args):
    if args.seed is None:
        _usage(args, f"--seed is required for '{args.command}'")


# ------------------------------------------------------------- data stage


def load_series(args):
    sources = [s for s in ("csv", "rinex", "synth") if getattr(args, s, None)]
    if len(sources) != 1:
        _usage(args, "give exactly one data source: --csv, --rinex (with --sat) or --synth")
    try:
        if args.csv:
            return parse_clock_csv(Path(args.csv).read_text())
        if args.rinex:
            if not args.sat:
                _usage(args, "--rinex needs --sat")
            return parse_rinex_clk(Path(args.rinex).read_text(), args.sat)
        return generate_synthetic_clock(synth_config(args.synth, args.seed))
    except OSError as exc:
        raise StageError("ingest", str(exc)) from exc


def synth_config(name_or_path: str, seed: int | None) -> SynthConfig:
    if name_or_path in PRESETS:
        return preset(name_or_path, seed)
    try:
        data = json.loads(Path(name_or_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise StageError("ingest", f"{name_or_path!r} is neither a preset nor a readable JSON spec") from exc
    config = SynthConfig.from_dict(data)
    if seed is not None and "seed" not in data:
        config = SynthConfig.from_dict({**config.to_dict(), "seed": seed})
    return config


def prepare(args):
    """Raw series -> (uniform difference series, first raw bias)."""
    series = load_series(args)
    diff = single_difference(series)
    u = resample_uniform(diff.as_series(), args.step)
    log.info("%d raw samples -> %d differences on a %g s grid", len(series), len(u), u.step)
    return u, diff.base_value


# -------------------------------------------------------------- commands


def _train_config(args) -> TrainConfig:
    cfg = TrainConfig(seed=args.seed)
    overrides = {
        "max_epochs": args.epochs, "learning_rate": args.lr, "patience": args.patience,
        "batch_size": args.batch_size, "validation_fraction": args.val_fraction,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if args.clip_norm is not None:
        cfg.clip_norm = args.clip_norm or None
    TrainConfig(**cfg.to_dict())  # re-validate
    return cfg


def _forecaster_options(args) -> dict:
    order = None if str(args.arima_order).lower() == "auto" else ArimaOrder.parse(str(args.arima_order))
    return {
        "profile": "tiny" if args.tiny else "full",
        "seed": args.seed,
        "window_len": int(args.window),
        "config": _train_config(args),
        "standardize": not args.no_standardize,
        "arima_order": order,
    }


def cmd_synth(args, out: Path) -> list[str]:
    if args.spec:
        config = synth_config(args.spec, args.seed)
    else:
        config = preset(args.preset, args.seed)
    series = generate_synthetic_clock(config)
    (out / "synth.csv").write_text(series_to_csv(series))
    return ["synth.csv"]


def cmd_preprocess(args, out: Path) -> list[str]:
    u, _ = prepare(args)
    (out / "preprocessed.csv").write_text(u.to_csv())
    files = ["preprocessed.csv"]
    if args.standardize:
        scaled, params = standardize(u)
        (out / "standardized.csv").write_text(scaled.to_csv())
        (out / "scale.csv").write_text(f"mean,std\n{params.mean!r},{params.std!r}\n")
        files += ["standardized.csv", "scale.csv"]
    return files


def cmd_train(args, out: Path) -> list[str]:
    _require_seed(args)
    u, base = prepare(args)
    train_duration = float(args.train_days) * DAY
    n_train = int(np.count_nonzero(u.epochs < u.start_epoch + train_duration))
    if n_train >= len(u):
        raise StageError("split", "training span covers the whole series")
    train = UniformSeries(u.start_epoch, u.step, u.values[:n_train])
    forecaster = make_forecaster(args.model, **_forecaster_options(args))
    forecaster.fit(train)
    meta = {"start_epoch": u.start_epoch, "step": u.step, "train_duration": train_duration,
            "train_end_epoch": train.end_epoch, "base_value": base,
            "train_anchor": base + float(np.sum(train.values))}
    ckpt.save(out / "checkpoint.json", forecaster, meta)
    files = ["checkpoint.json"]
    if isinstance(forecaster, NeuralForecaster) and forecaster.history is not None:
        (out / "history.csv").write_text(forecaster.history.to_csv())
        files.append("history.csv")
    return files


def _load_checkpoint(args):
    if not args.checkpoint:
        _usage(args, "--checkpoint is required")
    try:
        return ckpt.load(args.checkpoint)
    except OSError as exc:
        raise StageError("checkpoint", str(exc)) from exc


def cmd_predict(args, out: Path) -> list[str]:
    forecaster, meta = _load_checkpoint(args)
    if args.horizon is None or args.horizon < 1:
        _usage(args, "--horizon must be a positive integer")
    has_source = any(getattr(args, s, None) for s in ("csv", "rinex", "synth"))
    if has_source and isinstance(forecaster, NeuralForecaster):
        u, _ = prepare(args)
        pred = forecaster.forecast(args.horizon, seed_window=u.values[-forecaster.window_len:])
        start, step = u.end_epoch, u.step
    else:
        pred = forecaster.forecast(args.horizon)
        start, step = meta.get("train_end_epoch", 0.0), meta.get("step", 600.0)
    epochs = start + np.arange(args.horizon) * step
    text = to_csv(epochs, pred).replace("epoch_s,bias_s", "epoch_s,prediction_s", 1)
    (out / "forecast.csv").write_text(text)
    return ["forecast.csv"]


def cmd_evaluate(args, out: Path) -> list[str]:
    forecaster, meta = _load_checkpoint(args)
    u, base = prepare(args)
    train_days = meta.get("train_duration", 4 * DAY) / DAY
    frame = args.frame if args.frame is not None else (u.end_epoch - u.start_epoch) / DAY
    train, test = split_by_duration(u, SplitSpec.days(train_days, frame))
    if isinstance(forecaster, NeuralForecaster) and forecaster.net is not None:
        pred = forecaster.forecast(len(test), seed_window=train.values[-forecaster.window_len:])
    else:
        pred = forecaster.forecast(len(test))
    anchor = base + float(np.sum(train.values))
    t = to_domain(test.values, args.domain, anchor)
    p = to_domain(pred, args.domain, anchor)
    report = forecast_report(forecaster.name, frame, t, p, test.epochs)
    (out / "metrics.csv").write_text(reports_to_csv([report]))
    (out / "plot_data.csv").write_text(plot_data_to_csv([report]))
    files = ["metrics.csv", "plot_data.csv"]
    if args.figures:
        from . import plots

        plots.plot_forecast(test.epochs, t, p, out / "forecast.png", forecaster.name)
        plots.plot_error_series([report], out / "errors.png")
        files += ["forecast.png", "errors.png"]
    return files


def cmd_compare(args, out: Path) -> list[str]:
    _require_seed(args)
    try:
        frames = [float(f) for f in str(args.frames).split(",") if f.strip()]
    except ValueError:
        _usage(args, "--frames must be comma-separated numbers")
    models = [m.strip().lower() for m in str(args.models).split(",") if m.strip()]
    unknown = set(models) - {"lstm", "rnn", "mlp", "arima", "persistence"}
    if unknown or not frames:
        _usage(args, f"bad --models/--frames: {sorted(unknown)}")
    u, base = prepare(args)
    reports = compare_frames(u, frames, float(args.train_days), models, domain=args.domain,
                             base_value=base, workers=int(args.workers), **_forecaster_options(args))
    for r in reports:
        if not r.ok:
            print(f"warning: {r.model} @ {r.time_frame:g} d failed: {r.error}", file=sys.stderr)
    (out / "report.csv").write_text(reports_to_csv(reports))
    files = ["report.csv"]
    for frame in frames:
        name = f"plot_data_{frame:g}d.csv"
        (out / name).write_text(plot_data_to_csv([r for r in reports if r.time_frame == frame]))
        files.append(name)
    if args.figures:
        from . import plots

        plots.plot_rmse_table(reports, out / "rmse.png")
        files.append("rmse.png")
        for frame in frames:
            name = f"errors_{frame:g}d.png"
            plots.plot_error_series([r for r in reports if r.time_frame == frame], out / name,
                                    title=f"prediction error, {frame:g} days")
            files.append(name)
    return files


def cmd_inspect(args, out: Path) -> list[str]:
    if not args.checkpoint:
        _usage(args, "--checkpoint is required")
    try:
        doc = json.loads(Path(args.checkpoint).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise StageError("checkpoint", str(exc)) from exc
    ckpt.forecaster_from_dict(doc)  # validates
    print(ckpt.summary(doc))
    return []


COMMANDS = {
    "synth": cmd_synth, "preprocess": cmd_preprocess, "train": cmd_train,
    "predict": cmd_predict, "evaluate": cmd_evaluate, "compare": cmd_compare,
    "inspect": cmd_inspect,
}


def write_manifest(args, out: Path, files: list[str]) -> None:
    config = {k: v for k, v in sorted(vars(args).items())
              if not k.startswith("_") and k not in _TRANSIENT}
    manifest = {"command": args.command, "config": config, "seed": args.seed,
                "toolkit_version": __version__, "outputs": files}
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except StageError as exc:
        print(f"error [{exc.stage}] {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out_dir)
    try:
        if args.command != "inspect":
            out.mkdir(parents=True, exist_ok=True)
        files = COMMANDS[args.command](args, out)
        if args.command != "inspect":
            write_manifest(args, out, files)
    except ClockBiasError as exc:
        print(f"error [{exc.stage}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"error [{exc.stage}] {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error [{args.command}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
