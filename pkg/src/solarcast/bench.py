"""Season x horizon x model experiment harness.

:func:`run_experiment` turns an :class:`ExperimentSpec` into a
:class:`ResultTable`; :func:`emit_table` renders it in the comparative
table layout (one block per season, one row per metric and horizon, one
column per model) and :func:`emit_plot_data` writes plot-ready CSVs.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import statistics
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import SolarcastError
from .expansion import ExpansionConfig
from .metrics import EvalReport, evaluate, rmse
from .models import (
    DEFAULT_EPOCHS,
    DEFAULT_LR,
    TrainOutcome,
    eelm_train,
    measure_tt,
    elm_train,
    flnn_train,
    predict,
)
from .series import (
    PatternSet,
    Resolution,
    ScaleParams,
    Season,
    TimeSeries,
    apply_scale,
    fit_scale,
    generate_synthetic,
    make_patterns,
    parse_csv,
    season_series,
    split_patterns,
    training_prefix,
)

log = logging.getLogger(__name__)

MODELS = ("FLNN", "ELM", "EELM")
SEASON_ORDER = (Season.SUMMER, Season.RAINY, Season.WINTER)
HORIZON_ORDER = (Resolution.FIVE_MINUTE, Resolution.ONE_HOUR)

HORIZON_LABELS = {Resolution.FIVE_MINUTE: "5 min.", Resolution.ONE_HOUR: "1 hour"}
# (row label, EvalReport field, decimals)
TABLE_ROWS = (
    ("RMSE (p.u)", "rmse", 4),
    ("MAE (p.u)", "mae", 4),
    ("SMAPE (%)", "smape", 2),
    ("CC2", "cc2", 4),
    ("TT (sec)", "training_time", 2),
)
TT_LABEL = "TT (sec)"


# ---------------------------------------------------------------------------
# Experiment description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSource:
    seed: int = 7
    days: int = 120

    def describe(self) -> dict:
        return {"synthetic": {"seed": self.seed, "days": self.days}}


@dataclass(frozen=True)
class CsvSource:
    path: Path
    resolution: Resolution = Resolution.FIVE_MINUTE

    def describe(self) -> dict:
        return {"csv": str(self.path), "resolution": self.resolution.label}


DataSource = Union[SyntheticSource, CsvSource]


@dataclass(frozen=True)
class Hyperparams:
    n: int = 5
    m: int = 1
    order_p: int = 1
    L_sweep: tuple = (10, 20, 40, 80)
    lr: float = DEFAULT_LR
    epochs: int = DEFAULT_EPOCHS
    train_fraction: float = 0.8
    ridge_lambda: float = 0.0
    seed: int = 7
    # "train" fits min/max on the training prefix only, "global" on the whole season
    scale_on: str = "train"
    elm_trials: int = 1
    repeat: int = 1

    def __post_init__(self):
        if self.scale_on not in ("train", "global"):
            raise ValueError(f"scale_on must be 'train' or 'global', got {self.scale_on!r}")
        if not self.L_sweep:
            raise ValueError("L_sweep must contain at least one hidden-layer size")
        if self.elm_trials < 1 or self.repeat < 1:
            raise ValueError("elm_trials and repeat must be >= 1")

    @property
    def expansion(self) -> ExpansionConfig:
        return ExpansionConfig(self.order_p, True, self.n)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["L_sweep"] = list(self.L_sweep)
        return d


@dataclass(frozen=True)
class ExperimentSpec:
    data_source: DataSource = field(default_factory=SyntheticSource)
    seasons: tuple = SEASON_ORDER
    horizons: tuple = HORIZON_ORDER
    models: tuple = MODELS
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    output_dir: Optional[Path] = None

    def __post_init__(self):
        seasons = tuple(Season.parse(s) for s in self.seasons)
        horizons = tuple(Resolution.parse(h) for h in self.horizons)
        models = tuple(_model_name(m) for m in self.models)
        if not seasons or not horizons or not models:
            raise ValueError("seasons, horizons and models must all be nonempty")
        for name, seq in (("seasons", seasons), ("horizons", horizons), ("models", models)):
            if len(set(seq)) != len(seq):
                raise ValueError(f"duplicate entries in {name}")
        object.__setattr__(self, "seasons", seasons)
        object.__setattr__(self, "horizons", horizons)
        object.__setattr__(self, "models", models)
        if isinstance(self.data_source, CsvSource) and not Path(self.data_source.path).exists():
            raise FileNotFoundError(f"data file not found: {self.data_source.path}")
        if self.output_dir is not None:
            object.__setattr__(self, "output_dir", Path(self.output_dir))

    @classmethod
    def from_dict(cls, d: dict, base_dir: Optional[Path] = None) -> "ExperimentSpec":
        src = d.get("data_source", {"synthetic": {}})
        if isinstance(src, str):
            src = {"csv": src}
        if "csv" in src:
            path = Path(src["csv"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            source: DataSource = CsvSource(path, Resolution.parse(src.get("resolution", "5min")))
        else:
            syn = src.get("synthetic") or {}
            source = SyntheticSource(int(syn.get("seed", 7)), int(syn.get("days", 120)))
        hp = dict(d.get("hyperparams", {}))
        if "L_sweep" in hp:
            hp["L_sweep"] = tuple(int(L) for L in hp["L_sweep"])
        out = d.get("output_dir")
        if out is not None and base_dir is not None and not Path(out).is_absolute():
            out = base_dir / out
        return cls(
            data_source=source,
            seasons=tuple(d.get("seasons", SEASON_ORDER)),
            horizons=tuple(d.get("horizons", HORIZON_ORDER)),
            models=tuple(d.get("models", MODELS)),
            hyperparams=Hyperparams(**hp),
            output_dir=out,
        )

    @classmethod
    def load(cls, path: "str | Path") -> "ExperimentSpec":
        """Read a ``.toml`` or ``.json`` spec file; relative paths resolve against it."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"spec file not found: {path}")
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            with path.open("rb") as fh:
                d = tomllib.load(fh)
        else:
            d = json.loads(path.read_text(encoding="utf-8"))
        return cls.from_dict(d, base_dir=path.parent)

    def to_dict(self) -> dict:
        return {
            "data_source": self.data_source.describe(),
            "seasons": [s.value for s in self.seasons],
            "horizons": [h.label for h in self.horizons],
            "models": list(self.models),
            "hyperparams": self.hyperparams.to_dict(),
        }


def _model_name(m: str) -> str:
    key = str(m).strip().upper()
    if key not in MODELS:
        raise ValueError(f"unknown model {m!r}; choose from {', '.join(MODELS)}")
    return key


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Cell:
    season: Season
    horizon: Resolution
    model: str
    report: EvalReport
    config: dict
    scale: ScaleParams
    target_times: np.ndarray
    targets: np.ndarray
    predictions: np.ndarray
    spread: Optional[dict] = None

    @property
    def key(self) -> tuple:
        return (self.season, self.horizon, self.model)

    @property
    def trace_name(self) -> str:
        return f"trace_{self.season.value.lower()}_{self.horizon.label}_{self.model.lower()}.csv"

    def to_dict(self) -> dict:
        r = self.report
        d = {
            "season": self.season.value,
            "horizon": self.horizon.label,
            "model": self.model,
            "rmse": r.rmse,
            "mae": r.mae,
            "smape": r.smape,
            "cc2": r.cc2,
            "n_points": r.n_points,
            "training_time": round(r.training_time, 6),
            "rmse_mw": r.rmse * self.scale.span,
            "mae_mw": r.mae * self.scale.span,
            "scale": self.scale.to_dict(),
            "config": self.config,
        }
        if self.spread is not None:
            d["spread"] = self.spread
        return d


@dataclass(eq=False)
class ResultTable:
    cells: list
    spec: Optional[ExperimentSpec] = None

    def __post_init__(self):
        keys = [c.key for c in self.cells]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (season, horizon, model) cells")
        self.cells = sorted(self.cells, key=_cell_order)

    def __len__(self) -> int:
        return len(self.cells)

    def get(self, season, horizon, model) -> Cell:
        key = (Season.parse(season), Resolution.parse(horizon), _model_name(model))
        for c in self.cells:
            if c.key == key:
                return c
        raise KeyError(key)

    @property
    def seasons(self) -> list:
        return [s for s in SEASON_ORDER if any(c.season is s for c in self.cells)]

    @property
    def horizons(self) -> list:
        return [h for h in HORIZON_ORDER if any(c.horizon is h for c in self.cells)]

    @property
    def models(self) -> list:
        return [m for m in MODELS if any(c.model == m for c in self.cells)]


def _cell_order(c: Cell) -> tuple:
    return (SEASON_ORDER.index(c.season), HORIZON_ORDER.index(c.horizon), MODELS.index(c.model))


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Prepared:
    series: TimeSeries
    scale: ScaleParams
    train: PatternSet
    test: PatternSet


def _tag(exc: Exception, season: Season, horizon: Resolution, model: str) -> Exception:
    exc.cell = (season.value, horizon.label, model)
    exc.args = (f"[{season.value}, {horizon.label}, {model}] {exc}",)
    return exc


def prepare(raw: TimeSeries, season: Season, horizon: Resolution, hp: Hyperparams) -> Prepared:
    """Season window, optional hourly averaging, scaling and chronological split."""
    ts = season_series(raw, season, horizon)
    if hp.scale_on == "train":
        sp = fit_scale(training_prefix(ts, hp.n, hp.m, hp.train_fraction))
    else:
        sp = fit_scale(ts)
    ps = make_patterns(apply_scale(ts, sp), hp.n, hp.m)
    train, test = split_patterns(ps, hp.train_fraction)
    return Prepared(ts, sp, train, test)


def load_source(source: DataSource, season: Season) -> TimeSeries:
    if isinstance(source, SyntheticSource):
        return generate_synthetic(source.days, season, source.seed)
    return parse_csv(source.path, source.resolution)


def _timed(train_fn, repeat: int) -> TrainOutcome:
    outcomes = [train_fn() for _ in range(repeat)]
    out = outcomes[-1]
    if repeat > 1:
        out.training_time = statistics.median(o.training_time for o in outcomes)
    return out


def _fit_elm(prep: Prepared, hp: Hyperparams, seed: int):
    """Best test-RMSE hidden size for one seed; returns (outcome, predictions, L)."""
    best = None
    for L in hp.L_sweep:
        out = elm_train(prep.train, L, seed, hp.ridge_lambda)
        O = predict(out.state, prep.test.inputs)
        err = rmse(prep.test.targets, O)
        if best is None or err < best[0]:
            best = (err, L, out, O)
    _, L, out, O = best
    if hp.repeat > 1:
        out = _timed(lambda: elm_train(prep.train, L, seed, hp.ridge_lambda), hp.repeat)
    return out, O, L


def run_cell(prep: Prepared, season: Season, horizon: Resolution, model: str, hp: Hyperparams) -> Cell:
    cfg = hp.expansion
    spread = None
    if model == "FLNN":
        out = _timed(lambda: flnn_train(prep.train, cfg, hp.lr, hp.epochs, hp.seed), hp.repeat)
        O = predict(out.state, prep.test.inputs)
        config = {"order_p": hp.order_p, "lr": hp.lr, "epochs": out.state.epochs, "seed": hp.seed}
    elif model == "EELM":
        out = _timed(lambda: eelm_train(prep.train, cfg, hp.ridge_lambda), hp.repeat)
        O = predict(out.state, prep.test.inputs)
        config = {"order_p": hp.order_p, "ridge_lambda": hp.ridge_lambda}
    else:
        trials = [_fit_elm(prep, hp, hp.seed + k) for k in range(hp.elm_trials)]
        out, O, L = trials[0]
        config = {"hidden_count": L, "seed": hp.seed, "L_sweep": list(hp.L_sweep), "ridge_lambda": hp.ridge_lambda}
        if hp.elm_trials > 1:
            reports = [evaluate(prep.test.targets, o, t.training_time) for t, o, _ in trials]
            fields = ("rmse", "mae", "smape", "cc2", "training_time")
            mean = {f: float(np.mean([getattr(r, f) for r in reports])) for f in fields}
            spread = {f: float(np.std([getattr(r, f) for r in reports])) for f in fields}
            spread["trials"] = hp.elm_trials
            spread["hidden_counts"] = [L_k for _, _, L_k in trials]
            report = EvalReport(n_points=reports[0].n_points, **mean)
            config["seeds"] = [hp.seed + k for k in range(hp.elm_trials)]
            return Cell(season, horizon, model, report, config, prep.scale,
                        prep.test.target_times, prep.test.targets, O, spread)
    report = evaluate(prep.test.targets, O, out.training_time)
    config["training_rmse"] = out.training_rmse
    return Cell(season, horizon, model, report, config, prep.scale,
                prep.test.target_times, prep.test.targets, O, spread)


def run_experiment(spec: ExperimentSpec, write: bool = True, fmt: str = "markdown") -> ResultTable:
    """Run every requested cell; writes tables and traces when ``write`` and
    ``spec.output_dir`` are set."""
    hp = spec.hyperparams
    cells = []
    shared_raw = None
    for season in spec.seasons:
        if isinstance(spec.data_source, CsvSource):
            if shared_raw is None:
                shared_raw = load_source(spec.data_source, season)
            raw = shared_raw
        else:
            raw = load_source(spec.data_source, season)
        for horizon in spec.horizons:
            try:
                prep = prepare(raw, season, horizon, hp)
            except SolarcastError as exc:
                raise _tag(exc, season, horizon, "all models") from None
            log.info("%s %s: %d train / %d test patterns", season.value, horizon.label, prep.train.S, prep.test.S)
            for model in spec.models:
                try:
                    cells.append(run_cell(prep, season, horizon, model, hp))
                except SolarcastError as exc:
                    raise _tag(exc, season, horizon, model) from None
    rt = ResultTable(cells, spec)
    if write and spec.output_dir is not None:
        write_results(rt, spec.output_dir, fmt)
    return rt


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["cells"],
    "properties": {
        "spec": {"type": "object"},
        "cells": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": [
                    "season", "horizon", "model", "rmse", "mae", "smape", "cc2",
                    "n_points", "training_time", "config",
                ],
                "properties": {
                    "season": {"enum": [s.value for s in Season]},
                    "horizon": {"enum": [h.label for h in Resolution]},
                    "model": {"enum": list(MODELS)},
                    "rmse": {"type": "number", "minimum": 0},
                    "mae": {"type": "number", "minimum": 0},
                    "smape": {"type": "number"},
                    "cc2": {"type": "number", "minimum": 0, "maximum": 1},
                    "n_points": {"type": "integer", "minimum": 1},
                    "training_time": {"type": "number", "minimum": 0},
                    "rmse_mw": {"type": "number", "minimum": 0},
                    "mae_mw": {"type": "number", "minimum": 0},
                    "scale": {
                        "type": "object",
                        "required": ["x_min", "x_max"],
                        "properties": {"x_min": {"type": "number"}, "x_max": {"type": "number"}},
                    },
                    "config": {"type": "object"},
                    "spread": {"type": "object"},
                },
            },
        },
    },
}


def _fmt(cell: Cell, attr: str, decimals: int) -> str:
    text = f"{getattr(cell.report, attr):.{decimals}f}"
    if cell.spread is not None and attr in cell.spread:
        text += f" ± {cell.spread[attr]:.{decimals}f}"
    return text


def _table_rows(rt: ResultTable):
    """Yield (season, index label, horizon label, {model: text}) in layout order."""
    lookup = {c.key: c for c in rt.cells}
    for season in rt.seasons:
        for label, attr, decimals in TABLE_ROWS:
            for horizon in rt.horizons:
                vals = {}
                for model in rt.models:
                    c = lookup.get((season, horizon, model))
                    vals[model] = "" if c is None else _fmt(c, attr, decimals)
                if any(vals.values()):
                    yield season, label, HORIZON_LABELS[horizon], vals


def emit_table(rt: ResultTable, fmt: str = "markdown") -> str:
    if not rt.cells:
        raise ValueError("result table is empty")
    fmt = {"md": "markdown"}.get(fmt, fmt)
    models = rt.models
    if fmt == "markdown":
        out = []
        current = None
        for season, label, horizon, vals in _table_rows(rt):
            if season is not current:
                if current is not None:
                    out.append("")
                out += [
                    f"### {season.value.upper()} SEASON",
                    "",
                    "| Performance Index | Time Horizon | " + " | ".join(models) + " |",
                    "|---|---|" + "---|" * len(models),
                ]
                current = season
            out.append(f"| {label} | {horizon} | " + " | ".join(vals[m] for m in models) + " |")
        return "\n".join(out) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["season", "performance_index", "time_horizon", *models])
        for season, label, horizon, vals in _table_rows(rt):
            w.writerow([season.value, label, horizon, *(vals[m] for m in models)])
        return buf.getvalue()
    if fmt == "json":
        doc = {"cells": [c.to_dict() for c in rt.cells]}
        if rt.spec is not None:
            doc = {"spec": rt.spec.to_dict(), **doc}
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError(f"unknown table format {fmt!r}; choose markdown, csv or json")


def trace_rows(times, targets: np.ndarray, predictions: np.ndarray):
    stamps = np.asarray(times).astype("datetime64[m]").astype(str) if times is not None else [""] * len(targets)
    for t, d, o in zip(stamps, targets.tolist(), predictions.tolist()):
        yield [t, *map(repr, d), *map(repr, o)]


def trace_header(m: int) -> list:
    if m == 1:
        return ["timestamp", "target", "prediction"]
    return ["timestamp", *(f"target_{k}" for k in range(1, m + 1)), *(f"prediction_{k}" for k in range(1, m + 1))]


def emit_plot_data(rt: ResultTable, out_dir: "str | Path") -> list:
    """Write ``rmse_bars.csv`` plus one trace CSV per cell; returns the paths."""
    if not rt.cells:
        raise ValueError("result table is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    bars = out_dir / "rmse_bars.csv"
    with bars.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["season", "horizon", "model", "rmse"])
        for c in rt.cells:
            w.writerow([c.season.value, c.horizon.label, c.model, repr(c.report.rmse)])
    paths.append(bars)
    for c in rt.cells:
        path = out_dir / c.trace_name
        paths.append(write_trace(path, c.target_times, c.targets, c.predictions))
    return paths


def write_trace(path: "str | Path", times, targets, predictions) -> Path:
    """Write (timestamp, target, prediction) rows with round-trip exact floats."""
    path = Path(path)
    targets = np.asarray(targets, dtype=np.float64).reshape(len(targets), -1)
    predictions = np.asarray(predictions, dtype=np.float64).reshape(targets.shape)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(targets.shape[1]))
        w.writerows(trace_rows(times, targets, predictions))
    return path


def read_trace(path: "str | Path") -> tuple:
    """Load a trace CSV back into (timestamps, targets, predictions) arrays."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    m = (len(header) - 1) // 2
    times = np.array([r[0] for r in body], dtype="datetime64[m]")
    vals = np.array([[float(v) for v in r[1:]] for r in body]).reshape(len(body), 2 * m)
    return times, vals[:, :m], vals[:, m:]


TABLE_SUFFIX = {"markdown": "md", "csv": "csv", "json": "json"}


def write_results(rt: ResultTable, out_dir: "str | Path", fmt: str = "markdown") -> list:
    fmt = {"md": "markdown"}.get(fmt, fmt)
    out_dir = Path(out_dir)
    paths = emit_plot_data(rt, out_dir)
    table = out_dir / f"table.{TABLE_SUFFIX[fmt]}"
    table.write_text(emit_table(rt, fmt), encoding="utf-8")
    results = out_dir / "results.json"
    if fmt != "json":
        results.write_text(emit_table(rt, "json"), encoding="utf-8")
        paths.append(results)
    paths.append(table)
    return paths


def without_tt(text: str, fmt: str = "markdown") -> str:
    """Strip training-time content, the only run-to-run varying output."""
    fmt = {"md": "markdown"}.get(fmt, fmt)
    if fmt == "json":
        doc = json.loads(text)
        for c in doc["cells"]:
            c.pop("training_time", None)
            if "spread" in c:
                c["spread"].pop("training_time", None)
        return json.dumps(doc, indent=2)
    return "\n".join(line for line in text.splitlines() if TT_LABEL not in line)


__all__: Sequence[str] = (
    "Cell",
    "CsvSource",
    "ExperimentSpec",
    "Hyperparams",
    "RESULT_SCHEMA",
    "ResultTable",
    "SyntheticSource",
    "emit_plot_data",
    "emit_table",
    "measure_tt",
    "prepare",
    "read_trace",
    "run_experiment",
    "without_tt",
    "write_results",
    "write_trace",
)
