import json

import numpy as np
import pytest

from rtimpute import errors
from rtimpute.population import (
    PopulationCharacteristics,
    draw_local_sample,
    estimate_characteristics,
    ingest_csv,
    load_characteristics,
    pool_datasets,
    save_characteristics,
    write_csv,
)
from rtimpute.schema import Schema, Variable

from conftest import make_dataset


class TestEstimate:
    def test_single_column_hand_value(self):
        # sample variance of (1,2,3) = (1+0+1)/2 = 1
        ds = make_dataset({"x1": [1.0, 2.0, 3.0]})
        pc = estimate_characteristics(ds, ["x1"])
        assert pc.mu.tolist() == [2.0]
        assert pc.sigma.tolist() == [[1.0]]
        assert pc.n == 3

    def test_constant_column(self):
        ds = make_dataset({"x1": [5.0, 5.0, 5.0]})
        with pytest.raises(errors.ZeroVariance):
            estimate_characteristics(ds, ["x1"])

    def test_perfectly_correlated_pair(self):
        ds = make_dataset({"x1": [0.0, 1.0], "x2": [0.0, 1.0], "time": [1.0, 2.0]})
        pc = estimate_characteristics(ds, ["x1", "x2"])
        assert np.array_equal(pc.sigma, [[0.5, 0.5], [0.5, 0.5]])

    def test_outcome_rejected(self):
        ds = make_dataset({"x1": [1.0, 2.0, 3.0]})
        with pytest.raises(errors.OutcomeIncluded):
            estimate_characteristics(ds, ["x1", "time"])

    def test_permutation_invariance(self, rng):
        ds = make_dataset({"x1": rng.normal(size=30), "x2": rng.normal(size=30)})
        perm = rng.permutation(30)
        shuffled = ds.take(perm)
        a = estimate_characteristics(ds, ["x1", "x2"])
        b = estimate_characteristics(shuffled, ["x1", "x2"])
        assert np.allclose(a.mu, b.mu, rtol=0, atol=1e-15)
        assert np.allclose(a.sigma, b.sigma, rtol=0, atol=1e-14)

    def test_psd_quadratic_form(self, rng):
        x = rng.normal(size=(40, 6)) @ rng.normal(size=(6, 6))
        cols = {f"x{i + 1}": x[:, i] for i in range(6)}
        pc = estimate_characteristics(make_dataset(cols), [f"x{i + 1}" for i in range(6)])
        for _ in range(100):
            v = rng.normal(size=6)
            v /= np.linalg.norm(v)
            assert v @ pc.sigma @ v >= -1e-10

    def test_too_few_rows(self):
        ds = make_dataset({"x1": [1.0]})
        with pytest.raises(ValueError):
            estimate_characteristics(ds, ["x1"])


class TestPool:
    def test_concatenation_length(self, rng):
        a = make_dataset({"x1": rng.normal(size=3)}, row_prefix="a")
        b = make_dataset({"x1": rng.normal(size=2)}, row_prefix="b")
        assert pool_datasets(a, b).n == 5

    def test_pool_preserves_row_ids_and_order(self, rng):
        a = make_dataset({"x1": rng.normal(size=3)}, row_prefix="a")
        b = make_dataset({"x1": rng.normal(size=2)}, row_prefix="b")
        pooled = pool_datasets(a, b)
        assert pooled.row_ids == ("a0", "a1", "a2", "b0", "b1")

    def test_drops_unshared_auxiliary(self, rng):
        local = make_dataset(
            {"x1": rng.normal(size=4), "a1": rng.normal(size=4)}, row_prefix="l"
        )
        external = make_dataset({"x1": rng.normal(size=4)}, row_prefix="e")
        pooled = pool_datasets(external, local)
        assert "a1" not in pooled.schema
        assert "x1" in pooled.schema

    def test_estimate_after_pool_equals_manual_concat(self, rng):
        xa, xb = rng.normal(size=5), rng.normal(size=4)
        a = make_dataset({"x1": xa}, row_prefix="a")
        b = make_dataset({"x1": xb}, row_prefix="b")
        pc = estimate_characteristics(pool_datasets(a, b), ["x1"])
        both = np.concatenate([xa, xb])
        assert pc.mu[0] == both.mean()
        assert pc.sigma[0, 0] == np.cov(both, ddof=1)

    def test_no_common_predictors(self, rng):
        a = make_dataset({"x1": rng.normal(size=3)})
        b = make_dataset({"x2": rng.normal(size=3)})
        with pytest.raises(errors.SchemaMismatch):
            pool_datasets(a, b)

    def test_pool_with_empty_is_identity(self, rng):
        from rtimpute.schema import Dataset

        a = make_dataset({"x1": rng.normal(size=4)}, row_prefix="a")
        empty = Dataset(a.schema, np.empty((0, len(a.schema.names))), [])
        pooled = pool_datasets(a, empty)
        assert pooled.row_ids == a.row_ids
        assert np.array_equal(pooled.values, a.values)


class TestDrawSample:
    def test_remainder_count(self, rng):
        ds = make_dataset({"x1": rng.normal(size=10)})
        sample, rem = draw_local_sample(ds, 9, seed=1)
        assert sample.n == 9 and rem.n == 1

    def test_deterministic(self, rng):
        ds = make_dataset({"x1": rng.normal(size=20)})
        s1, _ = draw_local_sample(ds, 7, seed=42)
        s2, _ = draw_local_sample(ds, 7, seed=42)
        assert s1.row_ids == s2.row_ids

    def test_partition(self, rng):
        ds = make_dataset({"x1": rng.normal(size=25)})
        sample, rem = draw_local_sample(ds, 10, seed=3)
        assert set(sample.row_ids) | set(rem.row_ids) == set(ds.row_ids)
        assert set(sample.row_ids) & set(rem.row_ids) == set()

    def test_too_large(self, rng):
        ds = make_dataset({"x1": rng.normal(size=5)})
        with pytest.raises(errors.SampleTooLarge):
            draw_local_sample(ds, 5, seed=0)


class TestPersistence:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        cols = {f"x{i + 1}": rng.normal(size=9) for i in range(3)}
        pc = estimate_characteristics(make_dataset(cols), list(cols))
        path = tmp_path / "pc.json"
        save_characteristics(pc, path)
        back = load_characteristics(path)
        assert back.variables == pc.variables
        assert back.n == pc.n
        assert np.array_equal(back.mu, pc.mu)
        assert np.array_equal(back.sigma, pc.sigma)

    def test_dimension_mismatch(self, tmp_path):
        doc = {"version": 1, "variables": ["a", "b"], "mu": [0.0, 0.0],
               "sigma": [1.0, 0.0, 0.0, 1.0, 0.0, 0.0], "n": 5}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(errors.DimensionMismatch):
            load_characteristics(path)

    def test_nan_mu_rejected(self, tmp_path):
        doc = {"version": 1, "variables": ["a"], "mu": [float("nan")],
               "sigma": [1.0], "n": 5}
        path = tmp_path / "nan.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(errors.FormatError):
            load_characteristics(path)

    def test_asymmetric_sigma_rejected(self):
        with pytest.raises(errors.FormatError):
            PopulationCharacteristics(
                ("a", "b"), np.zeros(2), np.array([[1.0, 0.5], [0.3, 1.0]]), 5
            )

    def test_garbage_file(self, tmp_path):
        path = tmp_path / "garbage.json"
        path.write_text("{not json")
        with pytest.raises(errors.FormatError):
            load_characteristics(path)


class TestCsv:
    def schema(self):
        return Schema(
            [
                Variable("x1", "continuous", "predictor"),
                Variable("b1", "binary", "predictor"),
                Variable("time", "continuous", "outcome_time"),
                Variable("status", "binary", "outcome_status"),
            ]
        )

    def test_well_formed(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,b1,time,status\n1.5,0,10,1\n2.5,1,20,0\n")
        ds = ingest_csv(path, self.schema())
        assert ds.n == 2
        assert ds.column("x1").tolist() == [1.5, 2.5]

    def test_empty_cell(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,b1,time,status\n1.5,,10,1\n")
        with pytest.raises(errors.MissingCell, match="b1"):
            ingest_csv(path, self.schema())

    def test_bad_binary(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,b1,time,status\n1.5,2,10,1\n")
        with pytest.raises(errors.ParseError):
            ingest_csv(path, self.schema())

    def test_unknown_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,b1,zzz,time,status\n1.5,0,9,10,1\n")
        with pytest.raises(errors.UnknownColumn):
            ingest_csv(path, self.schema())

    def test_round_trip(self, tmp_path, rng):
        ds = make_dataset(
            {"x1": rng.normal(size=6), "time": rng.uniform(1, 9, 6),
             "status": (rng.random(6) < 0.5).astype(float)}
        )
        path = tmp_path / "rt.csv"
        write_csv(ds, path)
        back = ingest_csv(path, ds.schema)
        assert np.array_equal(back.values, ds.values)
