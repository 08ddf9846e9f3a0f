import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plfsma.core import numerics
from plfsma.core.errors import ConfigurationError, ContractViolation, DataFormatError
from plfsma.data.ingest import (
    ColumnTransform,
    Dataset,
    apply_standardization,
    invert_response,
    mspe,
    read_dataset,
    split,
    standardize,
    write_dataset,
)
from plfsma.estimation.fpca import CurveSet


def _dataset(n=12, p=2, grid_size=5, y=None):
    stream = numerics.random_stream(n)
    grid = np.linspace(0.0, 1.0, grid_size)
    return Dataset(
        y=np.arange(1.0, n + 1) if y is None else y,
        z=stream.standard_normal((n, p)),
        z_names=tuple(f"x{j}" for j in range(p)),
        curves=CurveSet(grid, stream.standard_normal((n, grid_size))),
    )


def _write(tmp_path, scalars, response, curves):
    paths = [tmp_path / "s.csv", tmp_path / "y.csv", tmp_path / "c.csv"]
    for path, text in zip(paths, [scalars, response, curves]):
        path.write_text(text)
    return paths


def test_round_trip(tmp_path, synthetic_dataset):
    paths = [tmp_path / "s.csv", tmp_path / "y.csv", tmp_path / "c.csv"]
    write_dataset(synthetic_dataset, *paths)
    loaded = read_dataset(*paths)
    assert loaded.z_names == synthetic_dataset.z_names
    assert np.array_equal(loaded.y, synthetic_dataset.y)
    assert np.array_equal(loaded.z, synthetic_dataset.z)
    assert np.array_equal(loaded.curves.grid, synthetic_dataset.curves.grid)
    assert np.array_equal(loaded.curves.obs, synthetic_dataset.curves.obs)


def test_rewrite_is_byte_identical(tmp_path, synthetic_dataset):
    first = [tmp_path / "s.csv", tmp_path / "y.csv", tmp_path / "c.csv"]
    second = [tmp_path / "s2.csv", tmp_path / "y2.csv", tmp_path / "c2.csv"]
    write_dataset(synthetic_dataset, *first)
    write_dataset(read_dataset(*first), *second)
    assert [a.read_bytes() == b.read_bytes() for a, b in zip(first, second)] == [True] * 3


def test_full_precision_values_parse_exactly(tmp_path):
    values = [0.1 + 0.2, 1.0 / 3.0, -2.718281828459045, 6.02214076e23, 5e-324]
    paths = _write(
        tmp_path,
        "a\n" + "".join(f"{v!r}\n" for v in values),
        "y\n" + "".join(f" {v!r}\n" for v in values),
        "t:0,t:1\n" + "".join(f"{v!r},{-v!r}\n" for v in values),
    )
    ds = read_dataset(*paths)
    assert ds.z[:, 0].tolist() == values
    assert ds.y.tolist() == values
    assert ds.curves.obs[:, 1].tolist() == [-v for v in values]


def test_reads_small_files(tmp_path):
    paths = _write(
        tmp_path,
        "a,b\n1,2\n3,4\n5,6\n",
        "y\n0.5\n1.5\n2.5\n",
        "t:0,t:0.5,t:1,t:1.5\n1,2,3,4\n2,3,4,5\n3,4,5,6\n",
    )
    ds = read_dataset(*paths)
    assert ds.z_names == ("a", "b")
    assert ds.curves.grid.tolist() == [0.0, 0.5, 1.0, 1.5]
    assert ds.y.tolist() == [0.5, 1.5, 2.5]


def test_drops_incomplete_rows(tmp_path):
    paths = _write(
        tmp_path,
        "a,b\n1,2\n,5\n3,4\n",
        "y\n1\n2\n3\n",
        "t:0,t:1,t:2,t:3\n1,2,3,4\n2,3,4,5\n3,4,,6\n",
    )
    ds = read_dataset(*paths)
    assert ds.n == 1
    assert ds.y.tolist() == [1.0]


def test_non_numeric_cell_names_location(tmp_path):
    paths = _write(tmp_path, "a,b\n1,2\n3,oops\n", "y\n1\n2\n", "t:0,t:1,t:2,t:3\n1,2,3,4\n1,2,3,4\n")
    with pytest.raises(DataFormatError, match="row 2.*'b'"):
        read_dataset(*paths)


def test_row_count_mismatch(tmp_path):
    paths = _write(tmp_path, "a\n1\n2\n", "y\n1\n", "t:0,t:1,t:2,t:3\n1,2,3,4\n1,2,3,4\n")
    with pytest.raises(DataFormatError, match="row counts differ"):
        read_dataset(*paths)


@pytest.mark.parametrize("header", ["t:0,t:1,x,t:3", "t:0,t:1,t:1,t:3", "t:0,t:one,t:2,t:3"])
def test_bad_curve_header(tmp_path, header):
    paths = _write(tmp_path, "a\n1\n", "y\n1\n", f"{header}\n1,2,3,4\n")
    with pytest.raises(DataFormatError):
        read_dataset(*paths)


def test_response_header(tmp_path):
    paths = _write(tmp_path, "a\n1\n", "target\n1\n", "t:0,t:1,t:2,t:3\n1,2,3,4\n")
    with pytest.raises(DataFormatError, match="headed 'y'"):
        read_dataset(*paths)


def test_missing_file(tmp_path):
    with pytest.raises(DataFormatError):
        read_dataset(tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv")


def test_standardize_columns():
    ds = standardize(_dataset(), "all", "standardize")
    assert np.allclose(ds.z.mean(axis=0), 0.0)
    assert np.allclose(ds.z.std(axis=0, ddof=1), 1.0)
    assert ds.y.mean() == pytest.approx(0.0)
    assert set(ds.transforms) == {"x0", "x1", "y"}


def test_standardize_selected_columns_only():
    original = _dataset()
    ds = standardize(original, ["x1"])
    assert np.array_equal(ds.z[:, 0], original.z[:, 0])
    assert "y" not in ds.transforms


def test_standardize_errors():
    with pytest.raises(ConfigurationError, match="unknown scalar"):
        standardize(_dataset(), ["nope"])
    with pytest.raises(ConfigurationError, match="not positive"):
        standardize(_dataset(y=np.linspace(-1.0, 1.0, 12)), None, "log-center")
    constant = _dataset()
    constant.z[:, 0] = 2.0
    with pytest.raises(ConfigurationError, match="zero variance"):
        standardize(constant, ["x0"])


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(0.1, 1e3), min_size=3, max_size=30, unique=True),
    st.sampled_from(["center", "standardize", "log-center"]),
)
def test_response_transform_round_trip(values, how):
    y = np.asarray(values)
    ds = _dataset(n=y.size, y=y)
    transformed = standardize(ds, "all", how)
    restored = invert_response(transformed.y, transformed.transforms["y"])
    assert np.allclose(restored, y, rtol=1e-9)
    for j, name in enumerate(ds.z_names):
        assert np.allclose(transformed.transforms[name].invert(transformed.z[:, j]), ds.z[:, j])


def test_repeated_standardization_composes():
    ds = _dataset()
    twice = standardize(standardize(ds, "all", "center"), "all", "standardize")
    assert np.allclose(twice.transforms["x0"].invert(twice.z[:, 0]), ds.z[:, 0])
    assert np.allclose(invert_response(twice.y, twice.transforms["y"]), ds.y)


def test_column_transform_then():
    first = ColumnTransform(mean=1.0, scale=2.0)
    second = ColumnTransform(mean=-0.5, scale=4.0)
    x = np.array([3.0, 7.0])
    assert np.allclose(first.then(second).apply(x), second.apply(first.apply(x)))


def test_apply_standardization_matches_training():
    ds = _dataset()
    trained = standardize(ds, "all", "standardize")
    applied = apply_standardization(ds, trained.transforms)
    assert np.allclose(applied.z, trained.z)
    assert np.allclose(applied.y, trained.y)


def test_split_example():
    train, test = split(_dataset(n=10), 0.8, numerics.random_stream(0), min_train=2)
    assert (train.n, test.n) == (8, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(20, 60), st.floats(0.5, 0.9), st.integers(0, 2**32 - 1))
def test_split_partitions_rows(n, fraction, seed):
    ds = _dataset(n=n)
    train, test = split(ds, fraction, numerics.random_stream(seed))
    assert train.n == int(np.floor(fraction * n))
    rows = np.concatenate([train.y, test.y])
    assert sorted(rows.tolist()) == ds.y.tolist()
    assert np.all(np.diff(train.y) > 0) and np.all(np.diff(test.y) > 0)


def test_split_limits():
    with pytest.raises(ConfigurationError):
        split(_dataset(n=10), 0.8, numerics.random_stream(0))
    with pytest.raises(ConfigurationError):
        split(_dataset(), 1.0, numerics.random_stream(0))


def test_mspe():
    assert mspe([1.0, 2.0], [1.0, 4.0]) == 2.0
    with pytest.raises(ContractViolation):
        mspe([1.0], [1.0, 2.0])
