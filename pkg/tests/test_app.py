import json

import numpy as np
import pandas as pd
import pytest

from gdfcv import Family
from gdfcv.app import (DatasetSpec, ExperimentConfig, ModelSpec,
                       default_rounds, ingest_csv, run)


class TestConfig:
    def test_round_trip(self):
        cfg = ExperimentConfig(
            task="compare",
            dataset=DatasetSpec(family="bernoulli", n=120, seed=4),
            models=[ModelSpec("glm"), ModelSpec("spline",
                                                {"basis_size": 8})],
            k=30, rounds=25, replicates=3, repeats=5, seed=11,
            compat_eq11=True)
        again = ExperimentConfig.from_dict(cfg.to_dict())
        assert again == cfg
        # and the dict itself survives a JSON round trip
        assert ExperimentConfig.from_dict(
            json.loads(json.dumps(cfg.to_dict()))) == cfg

    def test_unknown_task(self):
        with pytest.raises(ValueError, match="unknown task"):
            ExperimentConfig(task="frobnicate")

    def test_unknown_model(self):
        cfg = ExperimentConfig(models=[ModelSpec("xgboost")])
        with pytest.raises(ValueError, match="unknown model"):
            cfg.models[0].build()

    def test_default_rounds(self):
        assert default_rounds(250, 250) == 20
        assert default_rounds(250, 10) == 200
        assert default_rounds(100, 1) == 800


class TestIngestCsv:
    def test_reads_covariates_in_file_order(self, tmp_path):
        path = tmp_path / "d.csv"
        pd.DataFrame({"a": [1.0, 2, 3], "y": [0.1, 0.2, 0.3],
                      "b": [4.0, 5, 6]}).to_csv(path, index=False)
        data = ingest_csv(str(path), "y", Family.GAUSSIAN)
        assert data.X.shape == (3, 2)
        assert np.array_equal(data.X[:, 0], [1, 2, 3])
        assert np.array_equal(data.X[:, 1], [4, 5, 6])

    def test_missing_values_reported_with_location(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,y\n1,0.5\n,0.25\n3,\n")
        with pytest.raises(ValueError, match=r"\(1, 'a'\)"):
            ingest_csv(str(path), "y", Family.GAUSSIAN)

    def test_missing_response_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1,2\n3,4\n5,6\n")
        with pytest.raises(ValueError, match="response column"):
            ingest_csv(str(path), "y", Family.GAUSSIAN)

    def test_bernoulli_rejects_noninteger_response(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,y\n1,0\n2,1\n3,0.5\n")
        with pytest.raises(ValueError, match="only 0 and 1"):
            ingest_csv(str(path), "y", Family.BERNOULLI)


def _small_gdf_config(**kw):
    base = dict(task="gdf",
                dataset={"kind": "simulate", "family": "gaussian",
                         "n": 60, "seed": 2},
                models=[{"name": "glm"}],
                rounds=20, replicates=3, seed=5, workers=1)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


class TestRun:
    def test_gdf_task_record(self, tmp_path):
        record = run(_small_gdf_config(), out_dir=str(tmp_path))
        g = record["results"]["glm"]["gdf"]
        assert g["n"] == 3
        assert 10 < g["mean"] < 25
        assert record["partial"] is False
        assert record["total_model_evals"] > 0
        saved = json.loads((tmp_path / "run.json").read_text())
        assert saved["results"]["glm"]["gdf"]["mean"] == pytest.approx(g["mean"])
        frame = pd.read_csv(tmp_path / "results.csv")
        assert list(frame.columns) == ["task", "model", "parameter",
                                       "replicate", "value"]
        assert (frame["parameter"] == "gdf").sum() == 3

    def test_cv_task(self):
        cfg = ExperimentConfig.from_dict(
            dict(task="cv", dataset={"n": 60, "seed": 2},
                 models=[{"name": "glm"}], repeats=4, folds=5,
                 seed=5, workers=1))
        record = run(cfg)
        res = record["results"]["glm"]
        assert res["p_hat"]["n"] == 4
        assert res["cv_deviance"]["mean"] == pytest.approx(
            -2 * res["ell_cv"]["mean"])
        assert res["fold_evals"] == 20

    def test_compare_task_emits_weights(self):
        cfg = ExperimentConfig.from_dict(
            dict(task="compare", dataset={"n": 60, "seed": 2},
                 models=[{"name": "glm"},
                         {"name": "spline", "params": {"basis_size": 8}}],
                 rounds=20, replicates=2, repeats=3, folds=5,
                 seed=5, workers=1))
        record = run(cfg)
        comp = record["results"]["comparison"]
        assert [c["model"] for c in comp] == ["glm", "spline"]
        assert sum(c["w_aic"] for c in comp) == pytest.approx(1.0)
        assert sum(c["w_cv"] for c in comp) == pytest.approx(1.0)

    def test_sweep_k_task(self):
        cfg = ExperimentConfig.from_dict(
            dict(task="sweep-k", dataset={"n": 60, "seed": 2},
                 models=[{"name": "glm"}], k_values=[30, 60],
                 rounds=20, replicates=2, seed=5, workers=1))
        record = run(cfg)
        res = record["results"]["glm"]
        assert set(res) == {"k=30", "k=60"}

    def test_worker_count_does_not_change_results(self, tmp_path):
        rec1 = run(_small_gdf_config(workers=1), out_dir=str(tmp_path / "a"))
        rec4 = run(_small_gdf_config(workers=4), out_dir=str(tmp_path / "b"))
        assert rec1["results"]["glm"]["gdf"]["values"] == \
            rec4["results"]["glm"]["gdf"]["values"]
        assert (tmp_path / "a" / "results.csv").read_bytes() == \
            (tmp_path / "b" / "results.csv").read_bytes()

    def test_partial_record_flushed_on_failure(self, tmp_path):
        cfg = _small_gdf_config(
            models=[{"name": "glm"}, {"name": "glm", "params":
                    {"mode": "bogus"}}])
        with pytest.raises(ValueError):
            run(cfg, out_dir=str(tmp_path))
        saved = json.loads((tmp_path / "run.json").read_text())
        assert saved["partial"] is True
        assert "glm" in saved["results"]
