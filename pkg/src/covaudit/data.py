"""Dataset container, CSV ingestion, fold splitting and feature preprocessing."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised when input data violates the dataset contract."""


NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Dataset:
    """Coverage-audit dataset.

    ``features`` is an ``(m, d)`` float matrix. Categorical columns hold dense
    integer codes (stored as floats); their labels live in ``categories``
    keyed by column name, in order of first appearance.
    """

    features: np.ndarray
    z: np.ndarray
    names: tuple[str, ...] = ()
    kinds: tuple[str, ...] = ()
    categories: dict[str, tuple[str, ...]] = field(default_factory=dict)
    y: np.ndarray | None = None
    set_size: np.ndarray | None = None
    alpha_row: np.ndarray | None = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim == 1:
            features = features[:, None]
        object.__setattr__(self, "features", features)
        m, d = features.shape
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{j}" for j in range(d)))
        if not self.kinds:
            object.__setattr__(self, "kinds", (NUMERIC,) * d)
        if len(self.names) != d or len(self.kinds) != d:
            raise DataError("feature names/kinds do not match the number of columns")
        if m < 1:
            raise DataError("dataset must contain at least one row")

        z = np.asarray(self.z, dtype=float)
        if z.shape != (m,):
            raise DataError(f"z has shape {z.shape}, expected ({m},)")
        if not np.all((z == 0) | (z == 1)):
            raise DataError("invalid coverage indicator: z must be 0 or 1")
        object.__setattr__(self, "z", z.astype(np.int64))

        for name in ("y", "set_size", "alpha_row"):
            value = getattr(self, name)
            if value is None:
                continue
            value = np.asarray(value, dtype=float)
            if value.shape != (m,):
                raise DataError(f"{name} has shape {value.shape}, expected ({m},)")
            object.__setattr__(self, name, value)
        if self.set_size is not None and np.any(self.set_size < 0):
            raise DataError("set sizes must be nonnegative")
        if self.alpha_row is not None and not np.all(
            (self.alpha_row > 0) & (self.alpha_row < 1)
        ):
            raise DataError("alpha values must lie strictly in (0, 1)")
        for j, (name, kind) in enumerate(zip(self.names, self.kinds)):
            if kind == CATEGORICAL:
                codes = features[:, j]
                n_cat = len(self.categories.get(name, ()))
                if np.any(codes != np.round(codes)) or np.any(codes < 0) or np.any(codes >= n_cat):
                    raise DataError(f"categorical column {name!r} has codes outside 0..{n_cat - 1}")
            elif kind != NUMERIC:
                raise DataError(f"unknown column kind {kind!r}")

    @property
    def m(self) -> int:
        return self.features.shape[0]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        pick = lambda a: None if a is None else a[rows]  # noqa: E731
        return Dataset(
            features=self.features[rows],
            z=self.z[rows],
            names=self.names,
            kinds=self.kinds,
            categories=self.categories,
            y=pick(self.y),
            set_size=pick(self.set_size),
            alpha_row=pick(self.alpha_row),
        )

    def targets(self, alpha: float) -> np.ndarray:
        """Per-row target coverage 1 - alpha (uses ``alpha_row`` when present)."""
        if self.alpha_row is not None:
            return 1.0 - self.alpha_row
        return np.full(self.m, 1.0 - alpha)


@dataclass(frozen=True)
class Schema:
    """Column roles for :func:`load_csv`.

    Columns not named here become features. ``categorical`` / ``numeric``
    force a feature column's kind; otherwise a column whose every cell parses
    as a float is numeric.
    """

    z_col: str
    y_col: str | None = None
    size_col: str | None = None
    alpha_col: str | None = None
    categorical: tuple[str, ...] = ()
    numeric: tuple[str, ...] = ()
    ignore: tuple[str, ...] = ()


def _is_float(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _float_column(name: str, cells: list[str]) -> np.ndarray:
    try:
        return np.array([float(c) for c in cells])
    except ValueError as exc:
        raise DataError(f"column {name!r} is not numeric: {exc}") from None


def encode_categorical(cells) -> tuple[np.ndarray, tuple[str, ...]]:
    """Dictionary-encode labels by order of first appearance."""
    lookup: dict[str, int] = {}
    codes = np.empty(len(cells), dtype=float)
    for i, c in enumerate(cells):
        codes[i] = lookup.setdefault(c, len(lookup))
    return codes, tuple(lookup)


def load_csv(path, schema: Schema) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError("empty file")
    header, body = rows[0], rows[1:]
    if not body:
        raise DataError("empty file: no data rows")
    for lineno, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"ragged row at line {lineno}: {len(r)} fields, expected {len(header)}")
    columns = {name: [r[j].strip() for r in body] for j, name in enumerate(header)}
    for name, cells in columns.items():
        if any(c == "" for c in cells):
            raise DataError(f"missing value in column {name!r}")

    if schema.z_col not in columns:
        raise DataError(f"missing z column {schema.z_col!r}")
    role_cols = [schema.z_col, schema.y_col, schema.size_col, schema.alpha_col]
    for col in role_cols[1:]:
        if col is not None and col not in columns:
            raise DataError(f"missing column {col!r}")

    z_cells = columns[schema.z_col]
    z = np.empty(len(z_cells))
    for i, c in enumerate(z_cells):
        if not _is_float(c) or float(c) not in (0.0, 1.0):
            raise DataError(f"invalid coverage indicator {c!r} in row {i + 1}")
        z[i] = float(c)

    extras = {}
    for key, col in (("y", schema.y_col), ("set_size", schema.size_col), ("alpha_row", schema.alpha_col)):
        extras[key] = None if col is None else _float_column(col, columns[col])
    if extras["alpha_row"] is not None:
        a = extras["alpha_row"]
        if not np.all((a > 0) & (a < 1)):
            raise DataError("alpha outside (0, 1)")

    skip = {c for c in role_cols if c is not None} | set(schema.ignore)
    names, kinds, mats, categories = [], [], [], {}
    for name in header:
        if name in skip:
            continue
        cells = columns[name]
        if name in schema.categorical:
            kind = CATEGORICAL
        elif name in schema.numeric:
            kind = NUMERIC
        else:
            kind = NUMERIC if all(_is_float(c) for c in cells) else CATEGORICAL
        if kind == NUMERIC:
            mats.append(_float_column(name, cells))
        else:
            codes, labels = encode_categorical(cells)
            mats.append(codes)
            categories[name] = labels
        names.append(name)
        kinds.append(kind)

    m = len(body)
    features = np.column_stack(mats) if mats else np.zeros((m, 0))
    return Dataset(
        features=features,
        z=z,
        names=tuple(names),
        kinds=tuple(kinds),
        categories=categories,
        **extras,
    )


def write_csv(dataset: Dataset, path, schema: Schema | None = None) -> Schema:
    """Write ``dataset`` so that ``load_csv(path, schema)`` reproduces it.

    Returns the schema to read it back with.
    """
    schema = schema or Schema(
        z_col="z",
        y_col="y" if dataset.y is not None else None,
        size_col="set_size" if dataset.set_size is not None else None,
        alpha_col="alpha" if dataset.alpha_row is not None else None,
    )
    schema = Schema(
        z_col=schema.z_col,
        y_col=schema.y_col,
        size_col=schema.size_col,
        alpha_col=schema.alpha_col,
        categorical=tuple(n for n, k in zip(dataset.names, dataset.kinds) if k == CATEGORICAL),
        numeric=tuple(n for n, k in zip(dataset.names, dataset.kinds) if k == NUMERIC),
    )
    cols: list[tuple[str, list[str]]] = []
    for j, (name, kind) in enumerate(zip(dataset.names, dataset.kinds)):
        if kind == CATEGORICAL:
            labels = dataset.categories[name]
            cols.append((name, [labels[int(c)] for c in dataset.features[:, j]]))
        else:
            cols.append((name, [repr(float(v)) for v in dataset.features[:, j]]))
    cols.append((schema.z_col, [str(int(v)) for v in dataset.z]))
    for col, arr in ((schema.y_col, dataset.y), (schema.size_col, dataset.set_size), (schema.alpha_col, dataset.alpha_row)):
        if col is not None and arr is not None:
            cols.append((col, [repr(float(v)) for v in arr]))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([c for c, _ in cols])
        writer.writerows(zip(*(cells for _, cells in cols)))
    return schema


@dataclass(frozen=True)
class FoldAssignment:
    fold_of_row: np.ndarray
    k: int
    seed: int

    def indices(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of_row == j)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of_row, minlength=self.k)


def make_folds(m: int, k: int, seed: int) -> FoldAssignment:
    """Seeded random permutation of ``range(m)`` cut into ``k`` contiguous blocks."""
    if k < 2:
        raise DataError(f"fold count must be >= 2, got {k}")
    if k > m:
        raise DataError(f"fold count {k} exceeds row count {m}")
    perm = np.random.default_rng(seed).permutation(m)
    fold_of_row = np.empty(m, dtype=np.int64)
    for j, block in enumerate(np.array_split(perm, k)):
        fold_of_row[block] = j
    return FoldAssignment(fold_of_row=fold_of_row, k=k, seed=seed)


@dataclass(frozen=True)
class Standardizer:
    """Stored one-hot + standardization parameters for reuse on new rows."""

    kinds: tuple[str, ...]
    means: np.ndarray
    scales: np.ndarray
    n_levels: tuple[int, ...]

    def transform(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features[:, None]
        blocks = []
        for j, kind in enumerate(self.kinds):
            col = features[:, j]
            if kind == CATEGORICAL:
                levels = self.n_levels[j]
                onehot = np.zeros((len(col), levels))
                known = (col >= 0) & (col < levels)
                # unseen labels map to an all-zeros row
                onehot[np.flatnonzero(known), col[known].astype(np.int64)] = 1.0
                blocks.append(onehot)
            else:
                if self.scales[j] > 0:
                    blocks.append(((col - self.means[j]) / self.scales[j])[:, None])
                else:
                    blocks.append(np.zeros((len(col), 1)))
        if not blocks:
            return np.zeros((features.shape[0], 0))
        return np.hstack(blocks)


def fit_standardizer(dataset: Dataset) -> Standardizer:
    X = dataset.features
    means = np.zeros(X.shape[1])
    scales = np.zeros(X.shape[1])
    n_levels = []
    for j, kind in enumerate(dataset.kinds):
        if kind == NUMERIC:
            means[j] = X[:, j].mean()
            scales[j] = X[:, j].std()  # population std
            n_levels.append(0)
        else:
            n_levels.append(len(dataset.categories[dataset.names[j]]))
    return Standardizer(kinds=dataset.kinds, means=means, scales=scales, n_levels=tuple(n_levels))


def one_hot_standardize(dataset: Dataset) -> tuple[np.ndarray, Standardizer]:
    """Numeric design matrix: one-hot categoricals, z-scored numerics.

    Zero-variance numeric columns become zeros. The returned
    :class:`Standardizer` applies the same transformation to held-out rows.
    """
    params = fit_standardizer(dataset)
    return params.transform(dataset.features), params


def fourth_root_rule(m: int) -> int:
    """Cluster count ``max(1, floor(m ** 0.25))``."""
    k = max(1, int(math.floor(m ** 0.25)))
    # guard against float rounding just below an exact fourth power
    while (k + 1) ** 4 <= m:
        k += 1
    return k
