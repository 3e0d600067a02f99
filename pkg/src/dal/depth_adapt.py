"""Depth selection by averaging hypervolume.

Every candidate depth d induces a set of divisions; each division is a
point (h, z) in a two-objective space where h is the division's
performance variance and z the additive inverse of its size, both
minimized. A depth is scored by the mean rectangle area spanned between
each of its divisions and a shared nadir reference point, dominated
divisions included: every division gets its own local model later, so
every division's quality counts. The depth with the largest mean area
wins; ties go to the smaller depth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cart import CartTree, Division, extract_divisions
from .errors import EmptyDivision, NoPoints, PointBeyondReference

# guards the degenerate case where every division has zero variance
ZERO_RANGE_EPSILON = 1e-9


@dataclass(frozen=True)
class ObjectivePoint:
    h: float  # >= 0
    z: float  # <= 0


@dataclass(frozen=True)
class ReferencePoint:
    h_r: float
    z_r: float


@dataclass(frozen=True)
class DepthScore:
    d: int
    mu_hv: float
    division_count: int


def division_objectives(division: Division, performances: np.ndarray) -> ObjectivePoint:
    """Objectives of one division: variance around its mean, negated size."""
    idx = division.sample_indices
    if len(idx) == 0:
        raise EmptyDivision("cannot score an empty division")
    y = np.asarray(performances, dtype=float)[idx]
    if np.ptp(y) == 0:
        return ObjectivePoint(h=0.0, z=-float(len(idx)))
    mean = float(np.mean(y))
    return ObjectivePoint(h=float(np.mean((y - mean) ** 2)), z=-float(len(idx)))


def nadir_reference(points) -> ReferencePoint:
    """Shared nadir: 1.1x the worst h, 0.9x the worst z (z is negative, so
    0.9 pulls it strictly toward zero, i.e. strictly worse)."""
    points = list(points)
    if not points:
        raise NoPoints("need at least one objective point to place a reference")
    worst_h = max(p.h for p in points)
    worst_z = max(p.z for p in points)
    h_r = 1.1 * worst_h if worst_h > 0 else ZERO_RANGE_EPSILON
    return ReferencePoint(h_r=h_r, z_r=0.9 * worst_z)


def mu_hv(points, reference: ReferencePoint) -> float:
    """Mean rectangle area between each point and the reference.

    Unlike the classic hypervolume of the nondominated front, dominated
    points contribute their full rectangle.
    """
    points = list(points)
    if not points:
        raise NoPoints("cannot average over zero divisions")
    for p in points:
        if p.h > reference.h_r or p.z > reference.z_r:
            raise PointBeyondReference(f"point ({p.h}, {p.z}) lies beyond reference {reference}")
    areas = [abs(reference.h_r - p.h) * abs(reference.z_r - p.z) for p in points]
    return float(np.mean(areas))


def select_best(scores) -> DepthScore:
    """Depth with the largest mean-area score; ties favor the smaller d."""
    scores = sorted(scores, key=lambda s: s.d)
    if not scores:
        raise NoPoints("no candidate depths to select from")
    best = scores[0]
    for s in scores[1:]:
        if s.mu_hv > best.mu_hv:
            best = s
    return best


def depth_scores(tree: CartTree, performances: np.ndarray, min_leaf_size: int) -> list[DepthScore]:
    """Score every candidate depth 1..max_depth against one shared nadir.

    The nadir must be fixed before any per-depth scoring: its placement
    shifts every rectangle, so scoring against per-depth references would
    distort the comparison. Depth 0 is never a candidate (a single
    division is just the undivided model). Divisions are scored after
    merging so the scores describe the exact sets that would be trained.
    """
    if tree.max_depth < 1:
        return [DepthScore(d=0, mu_hv=0.0, division_count=1)]
    per_depth: list[tuple[int, list[ObjectivePoint]]] = []
    pool: list[ObjectivePoint] = []
    seen: set[tuple[float, float]] = set()
    for d in range(1, tree.max_depth + 1):
        divisions = extract_divisions(tree, d, min_leaf_size)
        points = [division_objectives(div, performances) for div in divisions.divisions]
        per_depth.append((d, points))
        for p in points:
            key = (p.h, p.z)  # exact-equality de-duplication of the nadir pool
            if key not in seen:
                seen.add(key)
                pool.append(p)
    reference = nadir_reference(pool)
    return [DepthScore(d=d, mu_hv=mu_hv(points, reference), division_count=len(points)) for d, points in per_depth]


def adapt_depth(tree: CartTree, performances: np.ndarray, min_leaf_size: int) -> DepthScore:
    """Pick the depth whose divisions best balance smoothness against size."""
    return select_best(depth_scores(tree, performances, min_leaf_size))
