import json

import numpy as np
import pytest

from src.data import DatasetError, feature_stats, load_dataset, minmax_scale, split_kfold
from src.data.dataset import encode_rows
from src.bench.fixtures import builtin_dataset


def _write(tmp_path, csv_text, columns):
    csv = tmp_path / "d.csv"
    csv.write_text(csv_text, encoding="utf-8")
    schema = tmp_path / "d.schema.json"
    schema.write_text(json.dumps({"columns": columns}), encoding="utf-8")
    return str(csv), str(schema)


def test_minmax_scaling_and_constant_column(tmp_path):
    csv, schema = _write(
        tmp_path,
        "a,b,label\n2,5,x\n4,5,y\n6,5,x\n",
        [{"name": "a"}, {"name": "b"}, {"name": "label", "label": True}],
    )
    ds = load_dataset(csv, schema)
    assert ds.name == "d"
    np.testing.assert_allclose(ds.X[:, 0], [0.0, 0.5, 1.0])
    # zero-range guard
    np.testing.assert_allclose(ds.X[:, 1], [0.0, 0.0, 0.0])
    assert ds.classes == ("x", "y")
    assert ds.y.tolist() == [0, 1, 0]


def test_one_hot_encoding(tmp_path):
    csv, schema = _write(
        tmp_path,
        "flag,label\nyes,a\nno,b\n",
        [{"name": "flag", "kind": "categorical", "categories": ["yes", "no"]}, {"name": "label", "label": True}],
    )
    ds = load_dataset(csv, schema)
    np.testing.assert_array_equal(ds.X, [[1.0, 0.0], [0.0, 1.0]])
    assert ds.space.decode(ds.X[1])[0] == {"flag": "no"}


@pytest.mark.parametrize(
    "csv_text,columns,fragment",
    [
        ("a,label\n1,x\n2,y\n", [{"name": "a"}, {"name": "zz"}, {"name": "label", "label": True}], "missing columns"),
        ("a,label\n1,x\nfoo,y\n", [{"name": "a"}, {"name": "label", "label": True}], "non-numeric"),
        (
            "c,label\nred,x\nblue,y\n",
            [{"name": "c", "kind": "categorical", "categories": ["red", "green"]}, {"name": "label", "label": True}],
            "unknown categories",
        ),
        ("a,label\n1,x\n2,x\n", [{"name": "a"}, {"name": "label", "label": True}], "at least 2 classes"),
    ],
)
def test_load_errors(tmp_path, csv_text, columns, fragment):
    csv, schema = _write(tmp_path, csv_text, columns)
    with pytest.raises(DatasetError) as exc:
        load_dataset(csv, schema)
    assert fragment in str(exc.value)


def test_missing_file_is_dataset_error(tmp_path):
    _, schema = _write(tmp_path, "a,label\n1,x\n", [{"name": "a"}, {"name": "label", "label": True}])
    with pytest.raises(DatasetError):
        load_dataset(str(tmp_path / "absent.csv"), schema)


def test_feature_stats_examples():
    s = feature_stats(np.array([[0.0, 7.0, 1.0], [1.0, 7.0, 2.0], [0.0, 7.0, 3.0], [1.0, 7.0, 4.0]]))
    assert s.mean[0] == pytest.approx(0.5)
    assert s.std[0] == pytest.approx(0.5)
    assert s.std[1] == 0.0
    assert s.mean[2] == pytest.approx(2.5)
    assert s.std[2] == pytest.approx(1.1180339887, abs=1e-9)
    with pytest.raises(DatasetError):
        feature_stats(np.array([[1.0, 2.0]]))


def test_kfold_partition_and_stratification():
    ds, _ = builtin_dataset("two_gaussian", n=100, seed=0)
    plan = split_kfold(ds, 5, seed=11)
    assert plan.stratified
    seen = []
    for fold, train_idx, test_idx in plan.folds():
        assert test_idx.size == 20
        assert np.intersect1d(train_idx, test_idx).size == 0
        # 50/50 balance -> 10 per class in every fold
        assert np.bincount(ds.y[test_idx]).tolist() == [10, 10]
        seen.extend(test_idx.tolist())
    assert sorted(seen) == list(range(100))
    again = split_kfold(ds, 5, seed=11)
    np.testing.assert_array_equal(plan.assignments, again.assignments)


def test_kfold_errors():
    ds, _ = builtin_dataset("two_gaussian", n=20, seed=0)
    with pytest.raises(DatasetError):
        split_kfold(ds, 1, seed=0)
    with pytest.raises(DatasetError):
        split_kfold(ds, 21, seed=0)


def test_split_uses_training_scaling():
    ds, _ = builtin_dataset("two_gaussian", n=60, seed=1)
    train, test = ds.split(np.arange(40), np.arange(40, 60))
    assert train.X[:, 0].min() == 0.0 and train.X[:, 0].max() == 1.0
    np.testing.assert_array_equal(test.scaling.lo, train.scaling.lo)
    np.testing.assert_array_equal(test.scaling.hi, train.scaling.hi)


def test_sameness_rule(continuous_space):
    space = continuous_space(2)
    std = np.array([1.0, 1.0])
    q = np.array([0.0, 0.0])
    assert space.changed_features(q, np.array([0.1, 0.5]), std) == [1]
    assert space.changed_features(q, np.array([0.2, 0.0]), std) == []


def test_minmax_scaling_is_idempotent():
    rng = np.random.default_rng(0)
    raw = np.column_stack([rng.normal(5.0, 3.0, 40), rng.random(40) * 100.0, np.full(40, 7.0)])
    once = minmax_scale(raw, raw.min(axis=0), raw.max(axis=0))
    twice = minmax_scale(once, once.min(axis=0), once.max(axis=0))
    np.testing.assert_array_equal(once, twice)
    assert once[:, :2].min() == 0.0 and once[:, :2].max() == 1.0


def test_one_hot_round_trip_over_every_row():
    ds, _ = builtin_dataset("two_gaussian", n=120, seed=2)
    space = ds.space
    decoded = space.decode(ds.X)
    assert len(decoded) == len(ds)
    for r, row in enumerate(decoded):
        for i, f in enumerate(space.schema):
            if space.is_categorical(i):
                assert f.categories.index(row[f.name]) == int(ds.raw[r, i])
                assert ds.X[r, space.slices[i]].sum() == 1.0
            else:
                assert row[f.name] == ds.X[r, space.column_of(i)]
    np.testing.assert_array_equal(encode_rows(ds.raw, space, ds.scaling), ds.X)


@pytest.mark.parametrize("seed", range(8))
def test_kfold_partitions_for_any_k_and_size(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 150))
    k = int(rng.integers(2, 11))
    ds, _ = builtin_dataset("two_gaussian", n=n, seed=seed)
    plan = split_kfold(ds, k, seed=seed)
    counts = np.zeros(len(ds), dtype=int)
    for fold, train_idx, test_idx in plan.folds():
        assert test_idx.size > 0
        assert np.intersect1d(train_idx, test_idx).size == 0
        np.testing.assert_array_equal(np.union1d(train_idx, test_idx), np.arange(len(ds)))
        counts[test_idx] += 1
    assert np.all(counts == 1)
    assert sorted(set(plan.assignments.tolist())) == list(range(k))
