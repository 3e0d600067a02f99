"""Accuracy metrics and statistical ranking for model comparisons.

Accuracy is the mean relative error (MRE) in percent. Approaches are
ranked per (system, training size) with a Scott-Knott test: approaches
are sorted by median MRE, recursively split where the between-group mean
difference is largest, and a split is kept only when a bootstrap
hypothesis test (99% confidence) and the Vargha-Delaney effect size
(>= 0.6) both call the sub-lists genuinely different.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import localmodels, pipeline
from .dataset import Dataset, sample_split, training_size
from .errors import EmptyGroup, LengthMismatch, NonPositiveActual, TooFewResults
from .seeding import ROLE_RUN, derive_seed

BOOTSTRAP_RESAMPLES = 1000
CONFIDENCE = 0.99
MIN_EFFECT = 0.6


def mre(actual, predicted) -> float:
    """Mean relative error in percent: (1/k) * sum(|A - P| / A) * 100."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.shape != predicted.shape or actual.ndim != 1 or len(actual) == 0:
        raise LengthMismatch(
            f"need two equal-length vectors, got {actual.shape} and {predicted.shape}"
        )
    if np.any(actual <= 0):
        raise NonPositiveActual("every actual performance must be strictly positive")
    return float(np.mean(np.abs(actual - predicted) / actual) * 100.0)


def a12(group_x, group_y) -> float:
    """Vargha-Delaney effect size: P(x > y) + 0.5 * P(x = y) over all pairs."""
    x = np.asarray(group_x, dtype=float)
    y = np.asarray(group_y, dtype=float)
    if len(x) == 0 or len(y) == 0:
        raise EmptyGroup("both groups must be non-empty")
    greater = np.sum(x[:, None] > y[None, :])
    ties = np.sum(x[:, None] == y[None, :])
    return float((greater + 0.5 * ties) / (len(x) * len(y)))


def _bootstrap_rejects(l1: np.ndarray, l2: np.ndarray, rng, resamples: int, confidence: float) -> bool:
    """Two-sided bootstrap test of equal means on the pooled null."""
    observed = abs(float(np.mean(l1)) - float(np.mean(l2)))
    pooled = np.concatenate([l1, l2])
    n, m = len(l1), len(l2)
    hits = 0
    for _ in range(resamples):
        a = pooled[rng.integers(0, len(pooled), n)]
        b = pooled[rng.integers(0, len(pooled), m)]
        if abs(float(np.mean(a)) - float(np.mean(b))) >= observed:
            hits += 1
    return hits / resamples <= 1.0 - confidence


@dataclass(frozen=True)
class ApproachRank:
    rank: int
    median: float
    iqr: float


@dataclass
class RankTable:
    entries: dict[str, ApproachRank]

    def rank_of(self, approach: str) -> int:
        return self.entries[approach].rank


def scott_knott(
    results: dict,
    resamples: int = BOOTSTRAP_RESAMPLES,
    confidence: float = CONFIDENCE,
    min_effect: float = MIN_EFFECT,
    seed: int = 0,
) -> RankTable:
    """Rank approaches into statistically indistinguishable groups.

    ``results`` maps approach name to its per-run MREs. Insertion order
    never matters: approaches are sorted by (median, name) before
    splitting, and the bootstrap stream is consumed in that sorted order.
    """
    for name, values in results.items():
        if len(values) < 2:
            raise TooFewResults(f"approach {name!r} has fewer than 2 results")
    items = sorted(
        ((name, np.asarray(values, dtype=float)) for name, values in results.items()),
        key=lambda item: (float(np.median(item[1])), item[0]),
    )
    rng = np.random.default_rng(seed)

    def split_groups(chunk: list) -> list[list]:
        if len(chunk) == 1:
            return [chunk]
        pooled = np.concatenate([values for _, values in chunk])
        grand_mean = float(np.mean(pooled))
        best_delta, best_k = -np.inf, None
        for k in range(1, len(chunk)):
            l1 = np.concatenate([v for _, v in chunk[:k]])
            l2 = np.concatenate([v for _, v in chunk[k:]])
            delta = (len(l1) / len(pooled)) * (float(np.mean(l1)) - grand_mean) ** 2 + (
                len(l2) / len(pooled)
            ) * (float(np.mean(l2)) - grand_mean) ** 2
            if delta > best_delta:
                best_delta, best_k = delta, k
        l1 = np.concatenate([v for _, v in chunk[:best_k]])
        l2 = np.concatenate([v for _, v in chunk[best_k:]])
        # l2 holds the higher medians; the effect size asks how often it loses
        effect = a12(l2, l1)
        if effect >= min_effect and _bootstrap_rejects(l1, l2, rng, resamples, confidence):
            return split_groups(chunk[:best_k]) + split_groups(chunk[best_k:])
        return [chunk]

    groups = split_groups(items)
    groups.sort(key=lambda g: float(np.mean(np.concatenate([v for _, v in g]))))
    entries = {}
    for rank, group in enumerate(groups, start=1):
        for name, values in group:
            q25, q75 = np.percentile(values, [25, 75])
            entries[name] = ApproachRank(rank=rank, median=float(np.median(values)), iqr=float(q75 - q25))
    return RankTable(entries=entries)


# ------------------------------------------------------------ approaches


def dal_approach(spec: localmodels.LocalModelSpec, d_override: int | None = None, n_jobs: int = 1):
    """Fit-function handle for the divided learner."""

    def fit_fn(train: Dataset, seed: int):
        model = pipeline.fit(train, spec, d_override=d_override, seed=seed, n_jobs=n_jobs)
        return lambda X: pipeline.predict_many(model, X)

    return fit_fn


def global_approach(spec: localmodels.LocalModelSpec):
    """Fit-function handle for the same local model trained undivided."""

    def fit_fn(train: Dataset, seed: int):
        model = localmodels.train_local(train.X, train.y, spec, seed)
        return lambda X: localmodels.predict_local(model, X)

    return fit_fn


# ------------------------------------------------------------ experiment


@dataclass(frozen=True)
class RunResult:
    approach: str
    system: str
    size_label: str
    run_index: int
    mre_percent: float


@dataclass
class EvaluationReport:
    runs: list[RunResult]
    tables: dict[tuple[str, str], RankTable] = field(default_factory=dict)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("system,size,approach,rank,median_mre,iqr_mre\n")
        for (system, size), table in self.tables.items():
            for name in sorted(table.entries, key=lambda n: (table.entries[n].rank, n)):
                e = table.entries[name]
                out.write(f"{system},{size},{name},{e.rank},{e.median:.4f},{e.iqr:.4f}\n")
        return out.getvalue()

    def raw_csv(self) -> str:
        out = io.StringIO()
        out.write("system,size,approach,run,mre_percent\n")
        for r in self.runs:
            out.write(f"{r.system},{r.size_label},{r.approach},{r.run_index},{r.mre_percent:.6f}\n")
        return out.getvalue()

    def to_text(self) -> str:
        lines = []
        for (system, size), table in self.tables.items():
            lines.append(f"{system} / {size}")
            width = max(len(n) for n in table.entries)
            for name in sorted(table.entries, key=lambda n: (table.entries[n].rank, n)):
                e = table.entries[name]
                lines.append(f"  r{e.rank}  {name:<{width}}  {e.median:.2f} ({e.iqr:.2f})")
        return "\n".join(lines) + "\n"


def run_experiment(
    datasets,
    approaches,
    tiers,
    repeats: int = 30,
    master_seed: int = 0,
    mixed_sizes: dict | None = None,
    n_jobs: int = 1,
) -> EvaluationReport:
    """Compare approaches across datasets and training-size tiers.

    Per run, one random train/test split is drawn and shared by every
    approach, so approaches always see identical data. Per-run seeds are
    derived from the master seed, which keeps results reproducible and
    independent of run execution order.
    """
    runs: list[RunResult] = []
    tables: dict[tuple[str, str], RankTable] = {}
    for di, (system, dataset) in enumerate(datasets):
        table_for_ds = (mixed_sizes or {}).get(system)
        for ti, tier in enumerate(tiers):
            size = training_size(dataset, tier, table_for_ds)

            def one_run(r: int) -> list[RunResult]:
                run_seed = derive_seed(master_seed, ROLE_RUN, di, ti, r)
                plan = sample_split(dataset, size, run_seed, size_label=tier)
                train = dataset.subset(plan.train_indices)
                X_test = dataset.X[plan.test_indices]
                y_test = dataset.y[plan.test_indices]
                cell = []
                for name, fit_fn in approaches:
                    predictor = fit_fn(train, run_seed)
                    cell.append(
                        RunResult(
                            approach=name,
                            system=system,
                            size_label=tier,
                            run_index=r,
                            mre_percent=mre(y_test, predictor(X_test)),
                        )
                    )
                return cell

            if n_jobs > 1:
                with ThreadPoolExecutor(max_workers=n_jobs) as pool:
                    per_run = list(pool.map(one_run, range(repeats)))
            else:
                per_run = [one_run(r) for r in range(repeats)]
            for cell in per_run:
                runs.extend(cell)
            by_approach = {
                name: [x.mre_percent for x in runs if x.system == system and x.size_label == tier and x.approach == name]
                for name, _ in approaches
            }
            tables[(system, tier)] = scott_knott(by_approach, seed=derive_seed(master_seed, ROLE_RUN, di, ti, 10**6))
    return EvaluationReport(runs=runs, tables=tables)
