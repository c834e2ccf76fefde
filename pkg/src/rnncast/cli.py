"""Command-line pipeline: generate / train / evaluate / plot / run.

One experiment = one JSON config (every field of ExperimentConfig, same
names). CLI flags override config fields; a missing config file just means
all defaults. The `run` subcommand chains the four stages and writes a
manifest listing every artifact it produced:

    out/
      dataset.csv               the data actually used (wide CSV)
      lstm_f1.tsfc ...          one checkpoint per (model, horizon)
      loss_lstm_f1.csv ...      per-epoch training loss
      report_lstm_f1.{csv,txt}  per-series scores + mean/sd rows
      summary.csv               all (model, horizon, series) rows in one table
      plot_<series>_<model>_f<h>.{svg,csv}
      manifest.json

Exit codes: 0 success, 2 usage/config/data error, 3 numeric failure during
training.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, svgchart
from .dataprep import (ParseError, PartitionSpec, Series, denormalize,
                       gen_activities, gen_random_walk, load_csv, make_windows,
                       normalize, save_csv)
from .evalkit import (PersistenceBaseline, SeriesResult, aggregate, evaluate,
                      report_to_csv, report_to_text)
from .numkit import NumericError, Rng
from .training import TrainConfig, load_checkpoint, save_checkpoint, train


class ConfigError(ValueError):
    """Bad configuration, flags, or input data (exit code 2)."""


MODEL_CHOICES = ("lstm", "gru", "baseline")
GENERATOR_PARAMS = {
    "activities": ("n_series", "length", "samples_per_day", "high_level",
                   "low_level", "noise_sd", "amplitude_jitter"),
    "random-walk": ("n_series", "length", "start", "step_sd"),
}


@dataclass
class ExperimentConfig:
    """Everything one experiment needs; serializes 1:1 to/from JSON."""

    dataset: dict = field(default_factory=lambda: {"kind": "activities"})
    window: int = 60
    horizons: list = field(default_factory=lambda: [1, 20])
    test_len: int = 251
    models: list = field(default_factory=lambda: list(MODEL_CHOICES))
    train_series_index: int = 0
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    units: int = 128
    shuffle: bool = True
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    grad_clip: float | None = None
    out_dir: str = "out"
    report_units: str = "normalized"
    fit_bounds_on_train: bool = False
    plot_points: int = 100
    plot_stride: int = 20

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        kind = self.dataset.get("kind")
        if kind in GENERATOR_PARAMS:
            extra = set(self.dataset) - {"kind"} - set(GENERATOR_PARAMS[kind])
            if extra:
                raise ConfigError(
                    f"unknown {kind} generator parameters: {sorted(extra)}")
        elif kind == "csv":
            if "path" not in self.dataset:
                raise ConfigError("csv dataset needs a 'path' entry")
        else:
            raise ConfigError(
                f"dataset kind must be one of activities, random-walk, csv; "
                f"got {kind!r}")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if not self.horizons or any(h < 1 for h in self.horizons):
            raise ConfigError(f"horizons must all be >= 1, got {self.horizons}")
        if len(set(self.horizons)) != len(self.horizons):
            raise ConfigError(f"duplicate horizons: {self.horizons}")
        bad = [m for m in self.models if m not in MODEL_CHOICES]
        if bad or not self.models:
            raise ConfigError(
                f"models must be a non-empty subset of {MODEL_CHOICES}, "
                f"got {self.models}")
        if self.train_series_index < 0:
            raise ConfigError(
                f"train_series_index must be >= 0, got {self.train_series_index}")
        if self.report_units not in ("normalized", "raw"):
            raise ConfigError(
                f"report_units must be 'normalized' or 'raw', got "
                f"{self.report_units!r}")
        if self.plot_points < 1 or self.plot_stride < 1:
            raise ConfigError("plot_points and plot_stride must be >= 1")

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           seed=self.seed, units=self.units, shuffle=self.shuffle,
                           learning_rate=self.learning_rate, beta1=self.beta1,
                           beta2=self.beta2, eps=self.eps,
                           grad_clip=self.grad_clip)


@dataclass
class RunManifest:
    """Index of every artifact a `run` produced, written as manifest.json."""

    version: str
    seed: int
    config: dict
    out_dir: str
    dataset_csv: str
    checkpoints: dict
    loss_histories: dict
    reports: dict
    plots: list
    timings_seconds: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def generate_series(config: ExperimentConfig) -> list[Series]:
    """Materialize the configured dataset (generator or CSV)."""
    spec = dict(config.dataset)
    kind = spec.pop("kind")
    if kind == "csv":
        path = spec.pop("path")
        return load_csv(path, date_column=bool(spec.pop("date_column", False)))
    rng = Rng(config.seed)
    if kind == "activities":
        return gen_activities(rng, **spec)
    return gen_random_walk(rng, **spec)


def _normalized(config: ExperimentConfig, series: Series) -> Series:
    fit_len = len(series) - config.test_len if config.fit_bounds_on_train else None
    return normalize(series, fit_len=fit_len, degenerate_to_half=True)


def _pair_name(model: str, horizon: int) -> str:
    return f"{model}_f{horizon}"


def _say(quiet: bool, message: str) -> None:
    if not quiet:
        print(message)


# ---------------------------------------------------------------------------
# Stages. Each returns the relative paths it wrote, for the manifest.
# ---------------------------------------------------------------------------

def stage_generate(config: ExperimentConfig, quiet: bool) -> dict:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series = generate_series(config)
    path = out / "dataset.csv"
    save_csv(path, series)
    _say(quiet, f"wrote {len(series)} series x {len(series[0])} samples to {path}")
    return {"dataset_csv": "dataset.csv"}


def stage_train(config: ExperimentConfig, quiet: bool) -> dict:
    series = generate_series(config)
    if config.train_series_index >= len(series):
        raise ConfigError(
            f"train_series_index {config.train_series_index} out of range: "
            f"dataset has {len(series)} series")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    source = _normalized(config, series[config.train_series_index])

    checkpoints = {}
    losses = {}
    for model in config.models:
        if model == "baseline":
            continue  # nothing to fit
        for horizon in config.horizons:
            name = _pair_name(model, horizon)
            spec = PartitionSpec(config.window, horizon, config.test_len)
            dataset = make_windows(source, spec, "train")
            _say(quiet, f"training {name} on {source.name!r} "
                        f"({len(dataset)} windows, {config.epochs} epochs)")
            every = max(1, config.epochs // 10)

            def report(epoch, loss):
                if not quiet and (epoch + 1) % every == 0:
                    print(f"  {name} epoch {epoch + 1}/{config.epochs} "
                          f"loss {loss:.6f}")

            checkpoint, history = train(model, dataset, config.train_config(),
                                        progress=report)
            cp_path = out / f"{name}.tsfc"
            save_checkpoint(checkpoint, cp_path)
            loss_path = out / f"loss_{name}.csv"
            with open(loss_path, "w", encoding="utf-8") as fh:
                fh.write("epoch,loss\n")
                for e, loss in enumerate(history, start=1):
                    fh.write(f"{e},{loss!r}\n")
            checkpoints[name] = cp_path.name
            losses[name] = loss_path.name
    return {"checkpoints": checkpoints, "loss_histories": losses}


def _forecaster_for(config: ExperimentConfig, model: str, horizon: int):
    """Baseline is built on the spot; networks come from checkpoints."""
    if model == "baseline":
        return PersistenceBaseline(config.window, horizon)
    path = Path(config.out_dir) / f"{_pair_name(model, horizon)}.tsfc"
    if not path.exists():
        raise ConfigError(
            f"no checkpoint for {model} at horizon {horizon}: expected {path} "
            f"(run the train stage first)")
    checkpoint = load_checkpoint(path)
    if checkpoint.model.window != config.window:
        raise ConfigError(
            f"checkpoint {path} was trained with window="
            f"{checkpoint.model.window}, config says {config.window}")
    if checkpoint.model.horizon != horizon:
        raise ConfigError(
            f"checkpoint {path} was trained for horizon="
            f"{checkpoint.model.horizon}, config says {horizon}")
    return checkpoint.model


def stage_evaluate(config: ExperimentConfig, quiet: bool) -> dict:
    series = generate_series(config)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    normalized_flag = config.report_units == "normalized"

    reports = {}
    summary_rows = []
    for model in config.models:
        for horizon in config.horizons:
            name = _pair_name(model, horizon)
            forecaster = _forecaster_for(config, model, horizon)
            spec = PartitionSpec(config.window, horizon, config.test_len)
            rows = []
            for s in series:
                _, r, d = evaluate(forecaster, _normalized(config, s), spec,
                                   normalized=normalized_flag)
                rows.append(SeriesResult(s.name, r, d))
                summary_rows.append((model, horizon, s.name, r, d))
            report = aggregate(rows, model=model, horizon=horizon)
            summary_rows.append((model, horizon, "mean", report.mean_rmse,
                                 report.mean_da))
            summary_rows.append((model, horizon, "sd", report.sd_rmse,
                                 report.sd_da))
            csv_path = out / f"report_{name}.csv"
            txt_path = out / f"report_{name}.txt"
            csv_path.write_text(report_to_csv(report), encoding="utf-8")
            txt_path.write_text(report_to_text(report), encoding="utf-8")
            reports[name] = [csv_path.name, txt_path.name]
            _say(quiet, f"{name}: mean RMSE {report.mean_rmse:.6f} "
                        f"(sd {report.sd_rmse:.6f}), mean DA {report.mean_da:.4f} "
                        f"(sd {report.sd_da:.4f})")

    summary_path = out / "summary.csv"
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("model,horizon,series,rmse,da\n")
        for model, horizon, sname, r, d in summary_rows:
            fh.write(f"{model},{horizon},{sname},{r!r},{d!r}\n")
    reports["summary"] = [summary_path.name]
    return {"reports": reports}


def _plot_one(config: ExperimentConfig, series: Series, model: str,
              horizon: int, out: Path) -> list[str]:
    forecaster = _forecaster_for(config, model, horizon)
    spec = PartitionSpec(config.window, horizon, config.test_len)
    source = _normalized(config, series)
    forecasts, _, _ = evaluate(forecaster, source, spec, normalized=True)

    # Plot in raw units when the series has a real range, else as-is.
    if source.raw_max is not None and source.raw_max > source.raw_min:
        bounds = (source.raw_min, source.raw_max)
        predicted = denormalize(forecasts.predicted, bounds)
        actual_all = series.values
    else:
        predicted = forecasts.predicted
        actual_all = source.values

    q = len(series)
    span = min(config.plot_points, config.test_len)
    test_start = q - config.test_len
    days = np.arange(span)
    actual = actual_all[test_start:test_start + span]

    title = f"{series.name} - {model}, {horizon} step(s) ahead"
    curves = [("actual", days, actual)]
    csv_lines = []
    if horizon == 1:
        curves.append(("predicted", days, predicted[:span, 0]))
        csv_lines.append("day,actual,predicted")
        for d in range(span):
            csv_lines.append(f"{d},{float(actual[d])!r},{float(predicted[d, 0])!r}")
    else:
        label = "forecast"
        csv_lines.append("day,step,actual,predicted")
        for start in range(0, span - horizon + 1, config.plot_stride):
            fan_days = np.arange(start, start + horizon)
            curves.append((label, fan_days, predicted[start]))
            label = ""  # one legend entry covers every fan
            for k in range(horizon):
                d = start + k
                csv_lines.append(
                    f"{d},{k + 1},{float(actual[d])!r},{float(predicted[start, k])!r}")

    svg = svgchart.line_chart(curves, title=title, x_label="test day",
                              y_label="value")
    base = f"plot_{series.name}_{_pair_name(model, horizon)}"
    (out / f"{base}.svg").write_text(svg, encoding="utf-8")
    (out / f"{base}.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    return [f"{base}.svg", f"{base}.csv"]


def stage_plot(config: ExperimentConfig, quiet: bool) -> dict:
    series = generate_series(config)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plots = []
    for model in config.models:
        for horizon in config.horizons:
            for s in series:
                plots.extend(_plot_one(config, s, model, horizon, out))
    _say(quiet, f"wrote {len(plots)} plot files to {out}")
    return {"plots": plots}


def stage_run(config: ExperimentConfig, quiet: bool) -> dict:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timings = {}
    artifacts = {}
    t_total = time.perf_counter()
    for name, stage in (("generate", stage_generate), ("train", stage_train),
                        ("evaluate", stage_evaluate), ("plot", stage_plot)):
        t0 = time.perf_counter()
        try:
            artifacts.update(stage(config, quiet))
        except (ConfigError, ValueError, OSError) as exc:
            raise type(exc)(f"{name} stage failed: {exc}") from exc
        except NumericError as exc:
            raise NumericError(f"{name} stage failed: {exc}") from exc
        timings[name] = round(time.perf_counter() - t0, 3)
    timings["total"] = round(time.perf_counter() - t_total, 3)

    manifest = RunManifest(
        version=__version__,
        seed=config.seed,
        config=config.to_dict(),
        out_dir=str(out),
        dataset_csv=artifacts["dataset_csv"],
        checkpoints=artifacts.get("checkpoints", {}),
        loss_histories=artifacts.get("loss_histories", {}),
        reports=artifacts.get("reports", {}),
        plots=artifacts.get("plots", []),
        timings_seconds=timings,
    )
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    _say(quiet, f"run complete in {timings['total']:.1f}s; manifest at "
                f"{out / 'manifest.json'}")
    return {"manifest": "manifest.json", **artifacts}


# ---------------------------------------------------------------------------
# Argument parsing.
# ---------------------------------------------------------------------------

def _int_list(text: str) -> list:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}")


def _str_list(text: str) -> list:
    return [part.strip() for part in text.split(",") if part.strip()]


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON experiment config to start from")
    parser.add_argument("--seed", type=int, help="master RNG seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    parser.add_argument("--dataset", choices=("activities", "random-walk"),
                        help="use a generator as the data source")
    parser.add_argument("--data", help="use a CSV file as the data source")
    parser.add_argument("--date-column", action="store_true",
                        help="first CSV column is a date/label to skip")
    parser.add_argument("--length", type=int, help="generator series length")
    parser.add_argument("--series", type=int, help="generator series count")
    parser.add_argument("--window", type=int, help="input window length")
    parser.add_argument("--horizons", type=_int_list,
                        help="comma-separated forecast horizons, e.g. 1,20")
    parser.add_argument("--test-len", type=int, help="held-out tail length")
    parser.add_argument("--models", type=_str_list,
                        help="comma-separated subset of lstm,gru,baseline")
    parser.add_argument("--train-series-index", type=int,
                        help="which series to train on")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--units", type=int)
    parser.add_argument("--learning-rate", type=float)
    parser.add_argument("--grad-clip", type=float)
    parser.add_argument("--no-shuffle", action="store_true",
                        help="keep sample order fixed across epochs")
    parser.add_argument("--report-units", choices=("normalized", "raw"))
    parser.add_argument("--fit-bounds-on-train", action="store_true",
                        help="fit normalization bounds on the training region only")
    parser.add_argument("--plot-points", type=int)
    parser.add_argument("--plot-stride", type=int,
                        help="origin spacing for multi-step forecast fans")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rnncast",
        description="Recurrent-network time-series forecasting experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    gen.add_argument("kind", choices=("activities", "random-walk"))
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default="dataset.csv", help="output CSV path")
    gen.add_argument("--quiet", action="store_true")
    gen.add_argument("--series", type=int, help="number of series")
    gen.add_argument("--length", type=int, help="samples per series")
    gen.add_argument("--samples-per-day", type=int)
    gen.add_argument("--high", type=float, help="high-activity level")
    gen.add_argument("--low", type=float, help="low-activity level")
    gen.add_argument("--noise-sd", type=float)
    gen.add_argument("--jitter", type=float, help="per-day amplitude jitter")
    gen.add_argument("--start", type=float, help="random-walk start value")
    gen.add_argument("--step-sd", type=float, help="random-walk step spread")

    for name, help_text in (("train", "fit models, write checkpoints"),
                            ("evaluate", "score models on every series"),
                            ("plot", "write SVG/CSV forecast charts"),
                            ("run", "generate, train, evaluate, and plot")):
        _common_flags(sub.add_parser(name, help=help_text))
    return parser


def _config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: not valid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object")
    config = ExperimentConfig.from_dict(data)

    if args.data is not None and args.dataset is not None:
        raise ConfigError("--data and --dataset are mutually exclusive")
    if args.data is not None:
        config.dataset = {"kind": "csv", "path": args.data}
        if args.date_column:
            config.dataset["date_column"] = True
    elif args.dataset is not None:
        config.dataset = {"kind": args.dataset}
    if config.dataset.get("kind") in GENERATOR_PARAMS:
        if args.length is not None:
            config.dataset["length"] = args.length
        if args.series is not None:
            config.dataset["n_series"] = args.series
    elif args.length is not None or args.series is not None:
        raise ConfigError("--length/--series only apply to generated datasets")

    simple = {"seed": "seed", "out": "out_dir", "window": "window",
              "horizons": "horizons", "test_len": "test_len", "models": "models",
              "train_series_index": "train_series_index", "epochs": "epochs",
              "batch_size": "batch_size", "units": "units",
              "learning_rate": "learning_rate", "grad_clip": "grad_clip",
              "report_units": "report_units", "plot_points": "plot_points",
              "plot_stride": "plot_stride"}
    for arg_name, field_name in simple.items():
        value = getattr(args, arg_name)
        if value is not None:
            setattr(config, field_name, value)
    if args.no_shuffle:
        config.shuffle = False
    if args.fit_bounds_on_train:
        config.fit_bounds_on_train = True
    config.validate()
    return config


def _run_generate(args) -> int:
    params = {}
    if args.series is not None:
        params["n_series"] = args.series
    if args.length is not None:
        params["length"] = args.length
    rng = Rng(args.seed)
    if args.kind == "activities":
        for arg_name, param in (("samples_per_day", "samples_per_day"),
                                ("high", "high_level"), ("low", "low_level"),
                                ("noise_sd", "noise_sd"), ("jitter", "amplitude_jitter")):
            value = getattr(args, arg_name)
            if value is not None:
                params[param] = value
        series = gen_activities(rng, **params)
    else:
        if args.start is not None:
            params["start"] = args.start
        if args.step_sd is not None:
            params["step_sd"] = args.step_sd
        series = gen_random_walk(rng, **params)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    save_csv(out, series)
    _say(args.quiet, f"wrote {len(series)} series x {len(series[0])} samples to {out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "generate":
            return _run_generate(args)
        config = _config_from_args(args)
        stage = {"train": stage_train, "evaluate": stage_evaluate,
                 "plot": stage_plot, "run": stage_run}[args.command]
        stage(config, args.quiet)
        return 0
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
