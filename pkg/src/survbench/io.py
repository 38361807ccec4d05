"""File formats: dataset and prediction CSVs, YAML run configs and reports.

Dataset CSV: header row, ``time``, ``event`` (0/1), then feature columns.
Prediction CSV: first row is the time grid, each further row one subject's
survival values on it. Floats are written with ``repr`` so that they
round-trip exactly and emissions are byte-stable.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .core import SurvivalDataset, SurvivalPredictionMatrix, TimeGrid, validate_dataset
from .exceptions import AllRowsDropped, ConfigError, MissingColumn, UnparseableValue
from .harness import METRIC_FIELDS, BenchmarkReport, ModelSpec, NestedCVPlan, metric_values
from .metrics import DEFAULT_QUANTILES
from .synthetic import KINDS, GeneratorSpec

__all__ = [
    "CsvSchema",
    "DatasetEntry",
    "AblationConfig",
    "RunConfig",
    "ingest_csv",
    "write_dataset_csv",
    "read_prediction_csv",
    "write_prediction_csv",
    "load_config",
    "parse_config",
    "emit_report",
    "emit_ablation",
    "report_tables",
]

_MISSING = {"", "na", "nan", "null", "none"}


@dataclass(frozen=True)
class CsvSchema:
    """Column roles for :func:`ingest_csv`.

    ``numeric=None`` takes every column not named elsewhere as numeric.
    ``event_coding`` maps raw event strings to booleans; the default accepts
    only ``0`` and ``1``.
    """

    time_col: str = "time"
    event_col: str = "event"
    numeric: tuple | None = None
    categorical: tuple = ()
    event_coding: dict = field(default_factory=lambda: {"0": False, "1": True})
    standardize: bool = False


def _fmt(x) -> str:
    return repr(float(x))


def _parse_float(text, row, col):
    try:
        v = float(text)
    except ValueError:
        raise UnparseableValue(row, col, text) from None
    if not math.isfinite(v):
        raise UnparseableValue(row, col, text)
    return v


def ingest_csv(path, schema: CsvSchema | None = None, return_names: bool = False):
    """Read a dataset CSV into a :class:`SurvivalDataset`.

    Categorical columns are one-hot encoded over their sorted levels with the
    first level dropped, appended after the numeric columns. Rows with a
    missing value are dropped with a warning listing their (1-based data)
    row numbers. With ``schema.standardize`` numeric columns are scaled to
    zero mean and unit variance on the whole file; the benchmark harness
    instead standardises per training fold.
    """
    schema = schema or CsvSchema()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise AllRowsDropped(f"{path} is empty") from None
        body = [r for r in reader if r]
    named = [schema.time_col, schema.event_col, *schema.categorical]
    numeric = list(schema.numeric) if schema.numeric is not None else [h for h in header if h not in named]
    for col in [*named, *numeric]:
        if col not in header:
            raise MissingColumn(col)
    pos = {h: i for i, h in enumerate(header)}
    used = [schema.time_col, schema.event_col, *numeric, *schema.categorical]
    coding = {str(k).strip(): bool(v) for k, v in schema.event_coding.items()}

    kept, dropped = [], []
    for r, raw in enumerate(body, start=1):
        cells = {c: (raw[pos[c]].strip() if pos[c] < len(raw) else "") for c in used}
        if any(cells[c].lower() in _MISSING for c in used):
            dropped.append(r)
            continue
        ev = cells[schema.event_col]
        if ev not in coding:
            try:
                key = repr(float(ev)).removesuffix(".0")
            except ValueError:
                key = None
            if key not in coding:
                raise UnparseableValue(r, schema.event_col, ev)
            ev = key
        kept.append((r, _parse_float(cells[schema.time_col], r, schema.time_col), coding[ev],
                     [_parse_float(cells[c], r, c) for c in numeric], [cells[c] for c in schema.categorical]))
    if dropped:
        warnings.warn(f"dropped rows with missing values: {dropped}", stacklevel=2)
    if not kept:
        raise AllRowsDropped(f"no complete rows in {path}")

    times = np.array([k[1] for k in kept])
    events = np.array([k[2] for k in kept], dtype=bool)
    X = np.array([k[3] for k in kept], dtype=float).reshape(len(kept), len(numeric))
    if schema.standardize and X.shape[1]:
        sd = X.std(axis=0)
        X = (X - X.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
    names = list(numeric)
    blocks = [X]
    for j, col in enumerate(schema.categorical):
        values = [k[4][j] for k in kept]
        for level in sorted(set(values))[1:]:
            blocks.append(np.array([[v == level] for v in values], dtype=float))
            names.append(f"{col}={level}")
    d = SurvivalDataset(np.hstack(blocks), times, events)
    validate_dataset(d)
    return (d, names) if return_names else d


def write_dataset_csv(d: SurvivalDataset, path, feature_names=None) -> None:
    names = list(feature_names) if feature_names is not None else [f"x{j + 1}" for j in range(d.p)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "event", *names])
        for i in range(d.n):
            w.writerow([_fmt(d.times[i]), int(d.events[i]), *(_fmt(v) for v in d.features[i])])


def write_prediction_csv(pred: SurvivalPredictionMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([_fmt(t) for t in pred.grid.knots])
        for row in pred.surv:
            w.writerow([_fmt(v) for v in row])


def read_prediction_csv(path) -> SurvivalPredictionMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise ConfigError(f"{path} needs a grid row and at least one prediction row")
    parsed = [[_parse_float(v, r, c) for c, v in enumerate(row)] for r, row in enumerate(rows)]
    width = len(parsed[0])
    if any(len(row) != width for row in parsed):
        raise ConfigError(f"{path}: every row must have {width} values")
    return SurvivalPredictionMatrix.from_survival(TimeGrid(np.array(parsed[0])), np.array(parsed[1:]))


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    generator: GeneratorSpec | None = None
    csv: str | None = None
    schema: CsvSchema | None = None

    def load(self) -> SurvivalDataset:
        if self.generator is not None:
            from .synthetic import generate

            return generate(self.generator)[0]
        return ingest_csv(self.csv, self.schema)


@dataclass(frozen=True)
class AblationConfig:
    pool: GeneratorSpec
    sizes: tuple = (300, 600, 1200, 2400)
    holdout: int = 2000
    censored_fraction: float = 0.30
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple
    methods: tuple
    plan: NestedCVPlan
    quantiles: tuple = DEFAULT_QUANTILES
    n_jobs: int = 1
    ablation: AblationConfig | None = None


def _keys(section: dict, where: str, allowed, required=()):
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(map(str, unknown))}")
    missing = [k for k in required if k not in section]
    if missing:
        raise ConfigError(f"missing key(s) in {where}: {', '.join(missing)}")


def _generator(g: dict, where: str, seed: int) -> GeneratorSpec:
    _keys(g, where, ("kind", "n", "seed", "censoring"), ("kind", "n"))
    if g["kind"] not in KINDS:
        raise ConfigError(f"{where}.kind must be one of {KINDS}")
    return GeneratorSpec(g["kind"], int(g["n"]), int(g.get("seed", seed)), float(g.get("censoring", 0.3)))


def parse_config(data, base_dir=".") -> RunConfig:
    """Validate a parsed config mapping; unknown keys raise :class:`ConfigError`."""
    if data is None:
        data = {}
    _keys(data, "config", ("seed", "n_jobs", "quantiles", "plan", "datasets", "methods", "ablation"))
    seed = int(data.get("seed", 0))
    try:
        plan_raw = data.get("plan", {}) or {}
        _keys(plan_raw, "plan", ("outer_folds", "inner_folds", "inner_repeats", "shuffle_seed", "grid_knots"))
        plan = NestedCVPlan(**{"shuffle_seed": seed, **plan_raw})

        datasets = []
        for i, ds in enumerate(data.get("datasets", []) or []):
            where = f"datasets[{i}]"
            _keys(ds, where, ("name", "generator", "csv", "schema"), ("name",))
            if ("generator" in ds) == ("csv" in ds):
                raise ConfigError(f"{where} needs exactly one of 'generator' or 'csv'")
            if "generator" in ds:
                datasets.append(DatasetEntry(str(ds["name"]), generator=_generator(ds["generator"], where, seed)))
            else:
                sc = ds.get("schema", {}) or {}
                _keys(sc, f"{where}.schema", ("time_col", "event_col", "numeric", "categorical",
                                              "event_coding", "standardize"))
                sc = dict(sc)
                for key in ("numeric", "categorical"):
                    if sc.get(key) is not None:
                        sc[key] = tuple(sc[key])
                if "event_coding" in sc:
                    sc["event_coding"] = {str(k): bool(v) for k, v in sc["event_coding"].items()}
                path = Path(base_dir) / ds["csv"]
                datasets.append(DatasetEntry(str(ds["name"]), csv=str(path), schema=CsvSchema(**sc)))
        names = [d.name for d in datasets]
        if len(set(names)) != len(names):
            raise ConfigError("dataset names must be unique")

        methods = []
        for i, m in enumerate(data.get("methods", []) or []):
            if isinstance(m, str):
                m = {"method": m}
            _keys(m, f"methods[{i}]", ("method", "grid"), ("method",))
            methods.append(ModelSpec(m["method"], dict(m.get("grid") or {})))

        ablation = None
        if data.get("ablation") is not None:
            a = data["ablation"]
            _keys(a, "ablation", ("pool", "sizes", "holdout", "censored_fraction", "seed"), ("pool",))
            ablation = AblationConfig(
                _generator(a["pool"], "ablation.pool", seed),
                tuple(int(s) for s in a.get("sizes", (300, 600, 1200, 2400))),
                int(a.get("holdout", 2000)),
                float(a.get("censored_fraction", 0.30)),
                int(a.get("seed", seed)),
            )
        qs = tuple(float(q) for q in data.get("quantiles", DEFAULT_QUANTILES))
        if not qs or not all(0 < q < 1 for q in qs):
            raise ConfigError("quantiles must lie strictly between 0 and 1")
        return RunConfig(tuple(datasets), tuple(methods), plan, qs, int(data.get("n_jobs", 1)), ablation)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return parse_config(data, Path(path).parent)


# ---------------------------------------------------------------- reports


def _clean(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    if isinstance(v, (np.floating, np.integer)):
        return _clean(v.item())
    return v


def report_tables(report: BenchmarkReport) -> dict:
    """Plain-row tables of a benchmark report, keyed by table name."""
    long_rows, timing, selected = [], [], []
    for r in report.rows:
        values = metric_values(r.metrics) if r.metrics is not None else {}
        for name in METRIC_FIELDS:
            long_rows.append({"dataset": r.dataset, "method": r.method, "fold": r.fold, "metric": name,
                              "value": values.get(name, float("nan"))})
        timing.append({"dataset": r.dataset, "method": r.method, "fold": r.fold, "n_train": r.n_train,
                       "n_fits": r.n_fits, "select_seconds": r.select_seconds, "fit_seconds": r.fit_seconds,
                       "predict_seconds": r.predict_seconds})
        selected.append({"dataset": r.dataset, "method": r.method, "fold": r.fold,
                         "params": json.dumps(r.params, sort_keys=True), "error": r.error or ""})
    corr = [{"pair": k, "pearson": v} for k, v in sorted(report.correlations().items())]
    return {"metrics_long": long_rows, "aggregate": report.aggregates(), "selected": selected,
            "correlations": corr, "timing": timing}


def _write_table(rows, path: Path, fmt: str) -> Path:
    path = path.with_suffix("." + fmt)
    if fmt == "json":
        text = json.dumps([{k: _clean(v) for k, v in row.items()} for row in rows], indent=2, sort_keys=True)
        path.write_text(text + "\n", encoding="utf-8")
        return path
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if rows:
            cols = list(rows[0])
            w.writerow(cols)
            for row in rows:
                w.writerow([_fmt(row[c]) if isinstance(row[c], float) else row[c] for c in cols])
    return path


def emit_report(report: BenchmarkReport, fmt: str, out_dir) -> list[Path]:
    """Write the report tables as ``csv`` or ``json`` files into ``out_dir``.

    Every table except ``timing`` is byte-identical across reruns with the
    same seeds.
    """
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown report format {fmt!r}")
    if not report.rows:
        raise ConfigError("report is empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [_write_table(rows, out / name, fmt) for name, rows in report_tables(report).items()]


def emit_ablation(rows, fmt: str, out_dir) -> list[Path]:
    """Write the method-by-size ablation table plus its timings."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = [{"dataset": r.dataset, "method": r.method, "size": r.size, "antolini": r.antolini,
              "harrell_avg": r.harrell_avg, "params": json.dumps(r.params, sort_keys=True),
              "error": r.error or ""} for r in rows]
    timing = [{"dataset": r.dataset, "method": r.method, "size": r.size, "seconds": r.seconds} for r in rows]
    return [_write_table(table, out / "ablation", fmt), _write_table(timing, out / "ablation_timing", fmt)]


def save_report_json(report: BenchmarkReport, path) -> None:
    data = report.to_dict()
    Path(path).write_text(json.dumps(_deep_clean(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_report_json(path) -> BenchmarkReport:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return BenchmarkReport.from_dict(_deep_nan(data))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot read report {path}: {exc}") from exc


def _deep_clean(obj):
    if isinstance(obj, dict):
        return {k: _deep_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_deep_clean(v) for v in obj]
    return _clean(obj)


_FLOAT_LISTS = ("harrell_per_quartile", "brier_per_quantile", "auroc_per_quantile", "eval_times")
_FLOAT_KEYS = ("harrell_quartile_avg", "antolini", "brier_avg", "brier_rescaled", "auroc_avg")


def _deep_nan(data):
    for row in data.get("rows", []):
        m = row.get("metrics")
        if m:
            for k in _FLOAT_KEYS:
                if m.get(k) is None:
                    m[k] = float("nan")
            for k in _FLOAT_LISTS:
                m[k] = [float("nan") if v is None else v for v in m.get(k, [])]
    return data
