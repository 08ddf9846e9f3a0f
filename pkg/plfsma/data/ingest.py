"""Reading, validating, standardising and splitting scalar + curve datasets.

File layout (UTF-8, comma separated, ``.`` decimal point):

  scalars CSV   header row of column names, one numeric row per subject
  response CSV  a single column headed ``y``
  curves CSV    header ``t:<value>`` per column giving the grid, one row of
                measurements per subject

Rows with an empty field in any of the three files are dropped together.
"""
import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from plfsma.core import numerics, settings
from plfsma.core.errors import ConfigurationError, ContractViolation, DataFormatError
from plfsma.estimation.fpca import CurveSet

logger = logging.getLogger(__name__)

RESPONSE = "y"
GRID_HEADER = re.compile(r"^t:(.+)$")
Y_TRANSFORMS = ("none", "center", "standardize", "log-center")


@dataclass(frozen=True)
class ColumnTransform:
    """``x -> (g(x) - mean) / scale`` with ``g`` the log when ``log`` is set."""

    mean: float = 0.0
    scale: float = 1.0
    log: bool = False

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.log(values) if self.log else values
        return (values - self.mean) / self.scale

    def invert(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values) * self.scale + self.mean
        return np.exp(values) if self.log else values

    def then(self, other: "ColumnTransform") -> "ColumnTransform":
        """The transform applying ``self`` first and ``other`` second."""
        if other.log:
            raise ConfigurationError("a log transform cannot follow another transform")
        return ColumnTransform(
            mean=self.mean + self.scale * other.mean,
            scale=self.scale * other.scale,
            log=self.log,
        )


@dataclass(frozen=True)
class Dataset:
    y: np.ndarray
    z: np.ndarray
    z_names: tuple[str, ...]
    curves: CurveSet
    transforms: dict[str, ColumnTransform] = field(default_factory=dict)

    def __post_init__(self):
        n = self.y.shape[0]
        if self.z.shape[0] != n or self.curves.n != n:
            raise ContractViolation(
                f"dataset row counts differ: y={n}, z={self.z.shape[0]}, curves={self.curves.n}"
            )
        if self.z.shape[1] != len(self.z_names):
            raise ContractViolation("scalar column names do not match the scalar matrix")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.z.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return replace(self, y=self.y[rows], z=self.z[rows], curves=self.curves.subset(rows))

    def transform_for(self, name: str) -> ColumnTransform:
        return self.transforms.get(name, ColumnTransform())


def _read_table(path: Path) -> tuple[list[str], pd.DataFrame]:
    try:
        raw = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            na_values=[""],
            encoding="utf-8",
            skip_blank_lines=True,
        )
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    if raw.shape[0] < 1:
        raise DataFormatError(f"{path} has no header row")
    header = [str(value).strip() for value in raw.iloc[0].tolist()]
    return header, raw.iloc[1:].reset_index(drop=True)


def _parse_float(text) -> float:
    # Python's parser is correctly rounded; pandas' fast path is not.
    if not isinstance(text, str):
        return math.nan
    try:
        return float(text)
    except ValueError:
        return math.nan


def _numeric(body: pd.DataFrame, header: list[str], path: Path) -> np.ndarray:
    values = np.empty(body.shape, dtype=float)
    for j in range(body.shape[1]):
        column = body.iloc[:, j]
        parsed = column.str.strip().map(_parse_float).astype(float)
        bad = (parsed.isna() & column.notna()) | np.isinf(parsed.to_numpy(dtype=float))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise DataFormatError(
                f"{path}: non-numeric value {column.iloc[row]!r} at data row {row + 1}, "
                f"column {header[j]!r}"
            )
        values[:, j] = parsed.to_numpy(dtype=float)
    return values


def _parse_grid(header: list[str], path: Path) -> np.ndarray:
    grid = []
    for name in header:
        match = GRID_HEADER.match(name)
        if match is None:
            raise DataFormatError(f"{path}: curve header {name!r} is not of the form t:<value>")
        try:
            grid.append(float(match.group(1)))
        except ValueError:
            raise DataFormatError(f"{path}: curve header {name!r} has a non-numeric time") from None
    grid = np.asarray(grid)
    if grid.size < 2 or np.any(np.diff(grid) <= 0) or not np.all(np.isfinite(grid)):
        raise DataFormatError(f"{path}: curve grid in the header is not strictly increasing")
    return grid


def read_scalars(path) -> tuple[tuple[str, ...], np.ndarray]:
    path = Path(path)
    header, body = _read_table(path)
    if len(set(header)) != len(header):
        raise DataFormatError(f"{path}: duplicate column names")
    return tuple(header), _numeric(body, header, path)


def read_response(path) -> np.ndarray:
    path = Path(path)
    header, body = _read_table(path)
    if header != [RESPONSE]:
        raise DataFormatError(f"{path}: response file must have a single column headed 'y'")
    return _numeric(body, header, path)[:, 0]


def read_curves(path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    header, body = _read_table(path)
    grid = _parse_grid(header, path)
    return grid, _numeric(body, header, path)


def read_dataset(scalar_path, response_path, curves_path) -> Dataset:
    """Load and validate the three files of a dataset.

    Raises:
        DataFormatError: On a row-count mismatch, a non-numeric cell, or a bad
            curve header.
    """
    z_names, z = read_scalars(scalar_path)
    y = read_response(response_path)
    grid, obs = read_curves(curves_path)
    counts = {str(scalar_path): z.shape[0], str(response_path): y.shape[0], str(curves_path): obs.shape[0]}
    if len(set(counts.values())) != 1:
        detail = ", ".join(f"{name}: {count}" for name, count in counts.items())
        raise DataFormatError(f"row counts differ between files ({detail})")
    complete = np.isfinite(y) & np.all(np.isfinite(z), axis=1) & np.all(np.isfinite(obs), axis=1)
    dropped = int((~complete).sum())
    if dropped:
        logger.warning("dropped %d incomplete records of %d", dropped, complete.size)
    if not complete.any():
        raise DataFormatError("no complete records in the dataset")
    return Dataset(
        y=y[complete],
        z=z[complete],
        z_names=z_names,
        curves=CurveSet(grid, obs[complete]),
    )


def write_dataset(ds: Dataset, scalar_path, response_path, curves_path) -> None:
    """Write the three files in the format :func:`read_dataset` expects."""
    fmt = settings.FLOAT_FORMAT
    pd.DataFrame(ds.z, columns=list(ds.z_names)).to_csv(
        scalar_path, index=False, float_format=fmt, lineterminator="\n"
    )
    pd.DataFrame({RESPONSE: ds.y}).to_csv(
        response_path, index=False, float_format=fmt, lineterminator="\n"
    )
    header = [f"t:{fmt % t}" for t in ds.curves.grid]
    pd.DataFrame(ds.curves.obs, columns=header).to_csv(
        curves_path, index=False, float_format=fmt, lineterminator="\n"
    )


def _fit_transform(values: np.ndarray, name: str, log: bool = False, scale: bool = True) -> ColumnTransform:
    if log:
        nonpositive = np.flatnonzero(values <= 0)
        if nonpositive.size:
            raise ConfigurationError(
                f"cannot log-transform {name}: value {values[nonpositive[0]]:g} "
                f"at row {nonpositive[0] + 1} is not positive"
            )
        values = np.log(values)
    mean = float(values.mean())
    sd = 1.0
    if scale:
        sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
        if not sd > 0 or not math.isfinite(sd):
            raise ConfigurationError(f"column {name!r} has zero variance and cannot be standardized")
    return ColumnTransform(mean=mean, scale=sd, log=log)


def standardize(ds: Dataset, columns="all", y_transform: str = "none") -> Dataset:
    """Centre and scale scalar columns and optionally transform the response.

    Args:
        ds: Dataset to transform.
        columns: ``"all"``, ``None``/empty for none, or an iterable of scalar
            column names.
        y_transform: One of ``none``, ``center``, ``standardize``,
            ``log-center`` (log, then centre).

    Returns:
        Dataset: Transformed copy whose ``transforms`` record how to undo
            every change (composed with any earlier records).

    Raises:
        ConfigurationError: On an unknown column, a zero-variance column, or a
            non-positive response under the log transform.
    """
    if columns == "all":
        selected = list(ds.z_names)
    else:
        selected = list(columns or [])
    unknown = [name for name in selected if name not in ds.z_names]
    if unknown:
        raise ConfigurationError(f"unknown scalar columns {unknown}; available {list(ds.z_names)}")
    if y_transform not in Y_TRANSFORMS:
        raise ConfigurationError(f"unknown response transform {y_transform!r}")

    transforms = dict(ds.transforms)
    z = ds.z.copy()
    for name in selected:
        j = ds.z_names.index(name)
        record = _fit_transform(z[:, j], name)
        z[:, j] = record.apply(z[:, j])
        transforms[name] = ds.transform_for(name).then(record)

    y = ds.y
    if y_transform != "none":
        record = _fit_transform(
            ds.y, RESPONSE, log=y_transform == "log-center", scale=y_transform == "standardize"
        )
        y = record.apply(ds.y)
        if record.log:
            if RESPONSE in ds.transforms:
                raise ConfigurationError("the response is already transformed; cannot log it again")
            transforms[RESPONSE] = record
        else:
            transforms[RESPONSE] = ds.transform_for(RESPONSE).then(record)
    return replace(ds, y=y, z=z, transforms=transforms)


def apply_standardization(ds: Dataset, transforms: dict[str, ColumnTransform]) -> Dataset:
    """Apply transforms estimated elsewhere (the training split) to ``ds``."""
    z = ds.z.copy()
    for name, record in transforms.items():
        if name == RESPONSE:
            continue
        if name not in ds.z_names:
            raise DataFormatError(f"scalar column {name!r} is missing from the new data")
        j = ds.z_names.index(name)
        z[:, j] = record.apply(z[:, j])
    y = ds.y
    if RESPONSE in transforms and ds.y.size:
        if transforms[RESPONSE].log and np.any(ds.y <= 0):
            raise ConfigurationError("cannot log-transform a non-positive response")
        y = transforms[RESPONSE].apply(ds.y)
    return replace(ds, y=y, z=z, transforms=dict(transforms))


def invert_response(values, transform: ColumnTransform | None) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values if transform is None else transform.invert(values)


def split(ds: Dataset, fraction: float, stream: numerics.RandomStream, min_train: int = 10):
    """Random train/test partition with ``floor(fraction * n)`` training rows.

    Raises:
        ConfigurationError: If ``fraction`` is outside (0, 1) or the training
            split would have fewer than ``max(p + 2, min_train)`` rows.
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError(f"split fraction must lie in (0, 1), got {fraction}")
    n_train = int(math.floor(fraction * ds.n))
    needed = max(ds.p + 2, min_train)
    if n_train < needed:
        raise ConfigurationError(
            f"training split has {n_train} rows; at least {needed} are needed"
        )
    if n_train >= ds.n:
        raise ConfigurationError("split leaves no test rows")
    order = stream.permutation(ds.n)
    train_rows = np.sort(order[:n_train])
    test_rows = np.sort(order[n_train:])
    return ds.subset(train_rows), ds.subset(test_rows)


def mspe(y_test, predictions) -> float:
    """Mean squared prediction error."""
    y_test = numerics.as_finite(y_test, "test response", ndim=1)
    predictions = numerics.as_finite(predictions, "predictions", ndim=1)
    if y_test.shape != predictions.shape:
        raise ContractViolation(
            f"{y_test.shape[0]} test responses but {predictions.shape[0]} predictions"
        )
    if y_test.size == 0:
        raise ContractViolation("MSPE needs at least one test observation")
    difference = y_test - predictions
    return float(difference @ difference / y_test.size)
