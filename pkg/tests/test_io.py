import csv
import json
import math

import numpy as np
import pytest

from survbench.core import SurvivalPredictionMatrix, TimeGrid
from survbench.exceptions import AllRowsDropped, ConfigError, MissingColumn, UnparseableValue
from survbench.harness import ModelSpec, NestedCVPlan, run_benchmark
from survbench.io import (
    CsvSchema,
    emit_report,
    ingest_csv,
    load_config,
    load_report_json,
    parse_config,
    read_prediction_csv,
    save_report_json,
    write_dataset_csv,
    write_prediction_csv,
)
from survbench.synthetic import GeneratorSpec, generate


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestIngest:
    def test_one_hot_first_level_dropped(self, tmp_path):
        p = write(tmp_path / "a.csv", "time,event,age,stage\n1.5,1,60,b\n2,0,55,a\n3,1,70,c\n")
        d, names = ingest_csv(p, CsvSchema(categorical=("stage",)), return_names=True)
        assert names == ["age", "stage=b", "stage=c"]
        assert d.features.tolist() == [[60, 1, 0], [55, 0, 0], [70, 0, 1]]

    def test_event_coding_strict(self, tmp_path):
        p = write(tmp_path / "a.csv", "time,event,x\n1,2,0.1\n2,1,0.2\n")
        with pytest.raises(UnparseableValue) as exc:
            ingest_csv(p)
        assert exc.value.row == 1
        d = ingest_csv(p, CsvSchema(event_coding={"1": False, "2": True}))
        assert d.events.tolist() == [True, False]

    def test_missing_rows_dropped_with_numbers(self, tmp_path):
        p = write(tmp_path / "a.csv", "time,event,x\n1,1,0.1\n2,1,\n3,0,NA\n4,1,0.4\n")
        with pytest.warns(UserWarning, match=r"\[2, 3\]"):
            d = ingest_csv(p)
        assert d.times.tolist() == [1, 4]

    def test_all_rows_dropped(self, tmp_path):
        p = write(tmp_path / "a.csv", "time,event,x\n1,1,\n")
        with pytest.warns(UserWarning), pytest.raises(AllRowsDropped):
            ingest_csv(p)

    def test_missing_column_and_garbage(self, tmp_path):
        with pytest.raises(MissingColumn):
            ingest_csv(write(tmp_path / "a.csv", "t,event,x\n1,1,0\n"))
        with pytest.raises(UnparseableValue):
            ingest_csv(write(tmp_path / "b.csv", "time,event,x\n1,1,abc\n"))

    def test_standardize_option(self, tmp_path):
        p = write(tmp_path / "a.csv", "time,event,x\n1,1,1\n2,1,3\n")
        assert ingest_csv(p, CsvSchema(standardize=True)).features.ravel().tolist() == [-1, 1]

    @pytest.mark.parametrize("kind", ["linph", "nonph"])
    def test_synthetic_round_trip(self, tmp_path, kind):
        d, _ = generate(GeneratorSpec(kind, 300, 1))
        write_dataset_csv(d, tmp_path / "d.csv")
        assert ingest_csv(tmp_path / "d.csv").equals(d)


def test_prediction_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    surv = -np.sort(-rng.random((5, 4)), axis=1)
    pred = SurvivalPredictionMatrix.from_survival(TimeGrid(np.array([0.5, 1, 2, 4])), surv)
    write_prediction_csv(pred, tmp_path / "p.csv")
    back = read_prediction_csv(tmp_path / "p.csv")
    assert np.array_equal(back.surv, surv) and np.array_equal(back.grid.knots, pred.grid.knots)


def test_prediction_csv_rejects_ragged(tmp_path):
    with pytest.raises(ConfigError):
        read_prediction_csv(write(tmp_path / "p.csv", "1,2\n0.9\n"))


class TestConfig:
    def test_full_config(self, tmp_path):
        write(tmp_path / "c.yaml", """
seed: 4
quantiles: [0.25, 0.5, 0.75]
plan: {outer_folds: 3, inner_folds: 5, inner_repeats: 2}
datasets:
  - name: a
    generator: {kind: linph, n: 300, censoring: 0.3}
  - name: b
    csv: data.csv
    schema: {categorical: [stage], event_coding: {"1": true, "0": false}}
methods:
  - coxph
  - method: rsf
    grid: {n_trees: [10], mtry: [sqrt]}
ablation:
  pool: {kind: nonph, n: 2000}
  sizes: [300, 600]
  holdout: 500
""")
        cfg = load_config(tmp_path / "c.yaml")
        assert cfg.plan.shuffle_seed == 4
        assert cfg.datasets[0].generator == GeneratorSpec("linph", 300, 4, 0.3)
        assert cfg.datasets[1].csv == str(tmp_path / "data.csv")
        assert [m.method for m in cfg.methods] == ["coxph", "rsf"]
        assert cfg.ablation.sizes == (300, 600) and cfg.ablation.pool.n == 2000

    @pytest.mark.parametrize("text", [
        "bogus: 1",
        "plan: {outer_folds: 3, inner: 2}",
        "datasets: [{name: a, generator: {kind: linph, n: 10, colour: red}}]",
        "datasets: [{name: a}]",
        "methods: [{method: coxph, grid: {ridge_eps: [-1]}}]",
        "methods: [{method: coxph, extra: 1}]",
        "plan: {outer_folds: 1}",
        "quantiles: [0, 0.5]",
    ])
    def test_errors(self, tmp_path, text):
        with pytest.raises(ConfigError):
            load_config(write(tmp_path / "c.yaml", text))

    def test_invalid_yaml(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write(tmp_path / "c.yaml", "a: [1, 2"))

    def test_empty_is_defaults(self):
        assert parse_config(None).plan == NestedCVPlan()


@pytest.fixture(scope="module")
def small_report():
    d = generate(GeneratorSpec("nonph", 300, 0))[0]
    return run_benchmark([("nonph", d)], [ModelSpec("coxph")], NestedCVPlan())


class TestEmit:
    def test_long_rows(self, small_report, tmp_path):
        emit_report(small_report, "csv", tmp_path)
        with open(tmp_path / "metrics_long.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 21
        assert list(rows[0]) == ["dataset", "method", "fold", "metric", "value"]

    def test_json_and_csv_agree(self, small_report, tmp_path):
        emit_report(small_report, "csv", tmp_path)
        emit_report(small_report, "json", tmp_path)
        for name in ("metrics_long", "aggregate", "timing", "selected", "correlations"):
            with open(tmp_path / f"{name}.csv") as fh:
                c = list(csv.DictReader(fh))
            j = json.loads((tmp_path / f"{name}.json").read_text())
            assert len(c) == len(j)
            for rc, rj in zip(c, j):
                for key, val in rj.items():
                    if isinstance(val, float) or val is None:
                        f = float(rc[key])
                        assert (val is None and math.isnan(f)) or f == val
                    else:
                        assert str(val) == rc[key]

    def test_byte_identical_reemission(self, small_report, tmp_path):
        for fmt in ("csv", "json"):
            a = emit_report(small_report, fmt, tmp_path / "a")
            b = emit_report(small_report, fmt, tmp_path / "b")
            for x, y in zip(a, b):
                assert x.read_bytes() == y.read_bytes()

    def test_report_json_round_trip(self, small_report, tmp_path):
        save_report_json(small_report, tmp_path / "r.json")
        back = load_report_json(tmp_path / "r.json")
        assert back.to_dict() == small_report.to_dict()

    def test_bad_format(self, small_report, tmp_path):
        with pytest.raises(ConfigError):
            emit_report(small_report, "xml", tmp_path)
