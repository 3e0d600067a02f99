"""Synthetic sparse configuration landscapes for tests and demos.

Generated datasets mimic the sample-sparsity pattern of measured systems:
samples condense into a few distant performance clusters (modes) selected
by dominant binary options, while within a mode the performance is a
mode-specific affine function of two influential numeric options plus
bounded noise. Every mode is therefore exactly realizable by a linear
local model, and the mode gap dwarfs the within-mode variation, so the
first tree split separates modes. A block of trailing options is
guaranteed inert (zero influence on performance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, dataset_from_arrays
from .errors import InvalidSpec

# max |affine + noise| contribution is (1.9 + 1.9 + 1) * spread
_MAX_UNIT_EFFECT = 4.8


@dataclass(frozen=True)
class LandscapeSpec:
    option_count: int
    binary_count: int
    mode_bases: tuple[float, ...]
    spread: float
    inert_option_count: int = 0
    seed: int = 0

    @property
    def mode_count(self) -> int:
        return len(self.mode_bases)

    @property
    def dominant_count(self) -> int:
        return max(1, math.ceil(math.log2(self.mode_count)))

    @property
    def numeric_count(self) -> int:
        return self.option_count - self.binary_count

    def __post_init__(self):
        if self.mode_count < 2:
            raise InvalidSpec("need at least 2 performance modes")
        if self.spread < 0:
            raise InvalidSpec("spread must be non-negative")
        if not 0 < self.binary_count <= self.option_count:
            raise InvalidSpec("binary_count must lie in (0, option_count]")
        if self.binary_count < self.dominant_count:
            raise InvalidSpec(
                f"{self.mode_count} modes need {self.dominant_count} binary options to select them"
            )
        if self.numeric_count < 2:
            raise InvalidSpec("need at least 2 numeric options to carry the within-mode surface")
        if self.inert_option_count < 0 or self.inert_option_count > self.option_count - self.binary_count - 2:
            raise InvalidSpec(
                "inert options are taken from the trailing numeric columns; "
                f"at most {self.option_count - self.binary_count - 2} fit"
            )
        bases = sorted(self.mode_bases)
        for a, b in zip(bases, bases[1:]):
            if b - a < 10 * self.spread:
                raise InvalidSpec("mode bases must be pairwise separated by >= 10x the spread")
        if min(bases) <= _MAX_UNIT_EFFECT * self.spread:
            raise InvalidSpec("smallest mode base too close to zero; performance must stay positive")


def mode_labels(spec: LandscapeSpec, X: np.ndarray) -> np.ndarray:
    """Ground-truth mode index per row, decoded from the dominant options."""
    X = np.asarray(X, dtype=float)
    code = np.zeros(len(X), dtype=int)
    for bit in range(spec.dominant_count):
        code = code * 2 + (X[:, bit] > 0.5).astype(int)
    return code % spec.mode_count


def generate(spec: LandscapeSpec, n_samples: int) -> Dataset:
    """Sample a landscape dataset; deterministic for a fixed spec seed."""
    if n_samples < 4 * spec.mode_count:
        raise InvalidSpec(f"need at least {4 * spec.mode_count} samples for {spec.mode_count} modes")
    rng = np.random.default_rng(spec.seed)
    # alternating signs force the affine surfaces of neighboring modes
    # apart, so no global linear fit can match all modes at once
    modes_idx = np.arange(spec.mode_count)[:, None]
    signs = np.where((modes_idx + np.arange(2)[None, :]) % 2 == 0, 1.0, -1.0)
    coeffs = rng.uniform(1.0, 1.9, size=(spec.mode_count, 2)) * signs

    rows = []
    seen = set()
    attempts = 0
    while len(rows) < n_samples:
        attempts += 1
        if attempts > 1000 * n_samples:
            raise InvalidSpec("option space too small to hold this many distinct configurations")
        row = np.empty(spec.option_count)
        row[: spec.binary_count] = rng.integers(0, 2, size=spec.binary_count)
        row[spec.binary_count :] = rng.random(spec.numeric_count)
        key = tuple(row.tolist())
        if key in seen:
            continue
        seen.add(key)
        rows.append(row)
    X = np.array(rows)

    modes = mode_labels(spec, X)
    x1 = X[:, spec.binary_count]
    x2 = X[:, spec.binary_count + 1]
    bases = np.array(spec.mode_bases, dtype=float)
    noise = rng.uniform(-1.0, 1.0, size=n_samples)
    y = bases[modes] + spec.spread * (coeffs[modes, 0] * x1 + coeffs[modes, 1] * x2 + noise)
    return dataset_from_arrays(X, y)
