"""Configuration-performance datasets: loading, validation, and sampling.

A dataset is a CSV file with a header row; every column except the last
holds one configuration option, the last column holds the measured
performance (ms, kJ, ...). Option kinds are inferred on load: an option is
binary iff every observed value is 0 or 1, numeric otherwise. Performance
must be strictly positive because the relative-error metric divides by it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateConfiguration,
    MalformedCsv,
    MissingMixedSizeTable,
    NonPositivePerformance,
    SizeExceedsDataset,
)

BINARY = "binary"
NUMERIC = "numeric"

SIZE_TIERS = ("S1", "S2", "S3", "S4", "S5")


@dataclass(frozen=True)
class OptionMeta:
    """Name, kind and observed value range of one configuration option."""

    name: str
    kind: str  # BINARY or NUMERIC
    observed_min: float
    observed_max: float


@dataclass
class Dataset:
    """Immutable set of measured configurations.

    ``X`` is the (n_samples, n_options) option matrix, ``y`` the
    per-sample performance vector. Both are read-only views.
    """

    option_meta: list[OptionMeta]
    X: np.ndarray
    y: np.ndarray
    system_kind: str  # BINARY if every option is binary, else "mixed"
    performance_name: str = "performance"

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.X.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_options(self) -> int:
        return self.X.shape[1]

    @property
    def option_names(self) -> list[str]:
        return [m.name for m in self.option_meta]

    def binary_mask(self) -> np.ndarray:
        """Boolean mask over options, True where the option is binary."""
        return np.array([m.kind == BINARY for m in self.option_meta])

    def subset(self, indices) -> "Dataset":
        """Dataset restricted to ``indices``; option metadata is inherited."""
        idx = np.asarray(indices, dtype=int)
        return Dataset(
            option_meta=self.option_meta,
            X=self.X[idx].copy(),
            y=self.y[idx].copy(),
            system_kind=self.system_kind,
            performance_name=self.performance_name,
        )


@dataclass
class SplitPlan:
    """One train/test partition of a dataset's sample indices."""

    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int
    size_label: str = ""

    def __post_init__(self):
        self.train_indices = np.asarray(self.train_indices, dtype=int)
        self.test_indices = np.asarray(self.test_indices, dtype=int)


def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedCsv(f"row {row}, column {col}: cannot parse {text!r} as a real number")
    if not math.isfinite(value):
        raise MalformedCsv(f"row {row}, column {col}: non-finite value {text!r}")
    return value


def dataset_from_arrays(
    X: np.ndarray,
    y: np.ndarray,
    option_names=None,
    performance_name: str = "performance",
) -> Dataset:
    """Build a validated Dataset from raw arrays, inferring option kinds."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise MalformedCsv("option matrix and performance vector shapes disagree")
    if option_names is None:
        option_names = [f"o{i + 1}" for i in range(X.shape[1])]
    if np.any(y <= 0):
        bad = int(np.argmax(y <= 0))
        raise NonPositivePerformance(f"sample {bad}: performance {y[bad]} is not strictly positive")
    seen: dict[tuple, int] = {}
    for i in range(X.shape[0]):
        key = tuple(X[i].tolist())
        if key in seen:
            raise DuplicateConfiguration(f"samples {seen[key]} and {i} share an identical options vector")
        seen[key] = i
    meta = []
    for j, name in enumerate(option_names):
        col = X[:, j]
        is_binary = bool(np.all((col == 0.0) | (col == 1.0)))
        meta.append(
            OptionMeta(
                name=name,
                kind=BINARY if is_binary else NUMERIC,
                observed_min=float(col.min()),
                observed_max=float(col.max()),
            )
        )
    system_kind = BINARY if all(m.kind == BINARY for m in meta) else "mixed"
    return Dataset(meta, X, y, system_kind, performance_name)


def load_dataset(path) -> Dataset:
    """Load a dataset CSV (options columns, then one performance column)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(f"{path}: empty file")
        if len(header) < 2:
            raise MalformedCsv(f"{path}: need at least one option column and one performance column")
        rows = []
        for r, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedCsv(f"row {r}: expected {len(header)} cells, found {len(row)}")
            rows.append([_parse_cell(cell, r, c) for c, cell in enumerate(row)])
    if not rows:
        raise MalformedCsv(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    return dataset_from_arrays(
        data[:, :-1], data[:, -1], option_names=header[:-1], performance_name=header[-1]
    )


def save_dataset(dataset: Dataset, path) -> None:
    """Write a dataset back to CSV; load(save(d)) reproduces d exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.option_names + [dataset.performance_name])
        for i in range(dataset.n_samples):
            writer.writerow([repr(v) for v in dataset.X[i]] + [repr(float(dataset.y[i]))])


def training_size(dataset: Dataset, tier: str, mixed_sizes: dict | None = None) -> int:
    """Training-set size for one of the tiers S1..S5.

    Binary systems use k*n samples for tier Sk, with n the option count.
    Mixed systems have no formula; an explicit per-tier table is required.
    """
    if tier not in SIZE_TIERS:
        raise ValueError(f"unknown tier {tier!r}, expected one of {SIZE_TIERS}")
    if dataset.n_samples == 0:
        raise SizeExceedsDataset("dataset is empty")
    if dataset.system_kind == BINARY:
        size = (SIZE_TIERS.index(tier) + 1) * dataset.n_options
    else:
        if not mixed_sizes or tier not in mixed_sizes:
            raise MissingMixedSizeTable(
                f"mixed system: supply a size table with an entry for {tier} (run-config key 'mixed_sizes')"
            )
        size = int(mixed_sizes[tier])
    if size >= dataset.n_samples:
        raise SizeExceedsDataset(
            f"tier {tier} needs {size} training samples but only {dataset.n_samples} are available"
        )
    return size


def sample_split(dataset: Dataset, size: int, seed: int, size_label: str = "") -> SplitPlan:
    """Draw a uniformly random training subset without replacement.

    Deterministic for a fixed seed; all remaining samples form the test set.
    """
    if size <= 0 or size >= dataset.n_samples:
        raise SizeExceedsDataset(
            f"training size must lie in (0, {dataset.n_samples}), got {size}"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(dataset.n_samples)
    train = np.sort(perm[:size])
    test = np.sort(perm[size:])
    return SplitPlan(train_indices=train, test_indices=test, seed=seed, size_label=size_label)
