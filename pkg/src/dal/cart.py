"""Division-generating regression tree.

The tree greedily minimizes the unweighted sum of the two child
mean-squared errors at every split (not the size-weighted variance
reduction of textbook CART). It is grown to purity and never pruned:
its job is not to predict but to carve the training samples into
locally smooth divisions, extracted at a chosen depth d.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CorruptDocument,
    DepthExceedsTree,
    DimensionMismatch,
    EmptyTrainingSet,
    InsufficientSamples,
    VersionMismatch,
)

TREE_FORMAT = "dal-cart/1"


@dataclass(frozen=True)
class SplitRecord:
    """An axis-aligned split: value <= threshold routes left."""

    option_index: int
    threshold: float


@dataclass
class CartNode:
    sample_indices: np.ndarray
    depth: int
    mean_performance: float
    mse: float
    split: SplitRecord | None = None
    left: "CartNode | None" = field(default=None, repr=False)
    right: "CartNode | None" = field(default=None, repr=False)

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    @property
    def size(self) -> int:
        return len(self.sample_indices)


@dataclass
class CartTree:
    root: CartNode
    max_depth: int
    option_count: int
    min_leaf_size: int


@dataclass
class Division:
    """One group of training samples, learned by one local model."""

    sample_indices: np.ndarray
    label: int
    h: float  # mean squared deviation of member performances
    z: float  # additive inverse of the member count

    @property
    def size(self) -> int:
        return len(self.sample_indices)


@dataclass
class DivisionSet:
    depth: int
    divisions: list[Division]
    premerge_count: int
    # frontier nodes backing each division; None after deserialization
    nodes: list[CartNode] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.divisions)

    def sizes(self) -> list[int]:
        return [d.size for d in self.divisions]


def _node_stats(y: np.ndarray) -> tuple[float, float]:
    """Mean and mean squared deviation; exactly (y0, 0) for constant y."""
    if np.ptp(y) == 0:
        return float(y[0]), 0.0
    mean = float(np.mean(y))
    return mean, float(np.mean((y - mean) ** 2))


def _is_pure(y: np.ndarray) -> bool:
    return bool(np.ptp(y) == 0)


def best_split(X: np.ndarray, y: np.ndarray, min_leaf_size: int = 2):
    """Find the (option, threshold) minimizing MSE(left) + MSE(right).

    Candidate thresholds are midpoints between consecutive distinct values
    of an option; both children must keep at least ``min_leaf_size``
    samples. Returns None when no admissible split exists. Ties are broken
    by the lowest option index, then the lowest threshold.
    """
    n = len(y)
    if n < 2 * min_leaf_size or _is_pure(y):
        return None
    best: SplitRecord | None = None
    best_loss = np.inf
    for j in range(X.shape[1]):
        xs = X[:, j]
        order = np.argsort(xs, kind="stable")
        xo = xs[order]
        yo = y[order]
        # boundaries between distinct consecutive values, honoring leaf sizes
        cuts = np.nonzero(xo[:-1] < xo[1:])[0] + 1  # left part has `cut` samples
        cuts = cuts[(cuts >= min_leaf_size) & (n - cuts >= min_leaf_size)]
        if cuts.size == 0:
            continue
        s = np.cumsum(yo)
        q = np.cumsum(yo * yo)
        nl = cuts.astype(float)
        nr = n - nl
        sl, ql = s[cuts - 1], q[cuts - 1]
        sr, qr = s[-1] - sl, q[-1] - ql
        mse_l = np.maximum(ql / nl - (sl / nl) ** 2, 0.0)
        mse_r = np.maximum(qr / nr - (sr / nr) ** 2, 0.0)
        losses = mse_l + mse_r
        k = int(np.argmin(losses))  # first minimum = lowest threshold
        if losses[k] < best_loss:
            best_loss = float(losses[k])
            cut = int(cuts[k])
            best = SplitRecord(j, float((xo[cut - 1] + xo[cut]) / 2.0))
    return best


def train_cart(X: np.ndarray, y: np.ndarray, min_leaf_size: int = 2) -> CartTree:
    """Grow the division tree on training data.

    Recursion stops at pure nodes, nodes below twice the leaf minimum, and
    nodes without an admissible split. Deterministic for a fixed row order.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise EmptyTrainingSet("cannot train a division tree on zero samples")

    max_depth = 0

    def grow(indices: np.ndarray, depth: int) -> CartNode:
        nonlocal max_depth
        max_depth = max(max_depth, depth)
        ys = y[indices]
        mean, mse = _node_stats(ys)
        node = CartNode(sample_indices=indices, depth=depth, mean_performance=mean, mse=mse)
        split = best_split(X[indices], ys, min_leaf_size)
        if split is None:
            return node
        go_left = X[indices, split.option_index] <= split.threshold
        node.split = split
        node.left = grow(indices[go_left], depth + 1)
        node.right = grow(indices[~go_left], depth + 1)
        return node

    root = grow(np.arange(len(y)), 0)
    return CartTree(root=root, max_depth=max_depth, option_count=X.shape[1], min_leaf_size=min_leaf_size)


def _frontier_at_depth(tree: CartTree, d: int) -> list[CartNode]:
    """Leaves above depth d plus every node at depth d, left to right."""
    out: list[CartNode] = []

    def walk(node: CartNode):
        if node.depth == d or node.is_leaf:
            out.append(node)
            return
        walk(node.left)
        walk(node.right)

    walk(tree.root)
    return out


def _parent_map(tree: CartTree) -> dict[int, CartNode]:
    parents: dict[int, CartNode] = {}

    def walk(node: CartNode):
        if not node.is_leaf:
            parents[id(node.left)] = node
            parents[id(node.right)] = node
            walk(node.left)
            walk(node.right)

    walk(tree.root)
    return parents


def extract_divisions(tree: CartTree, d: int, min_leaf_size: int) -> DivisionSet:
    """Extract the divisions the tree induces at depth ``d``.

    Any division smaller than ``min_leaf_size`` is merged with its sibling
    by collapsing the siblings' common parent; merging cascades toward the
    root until every division meets the minimum. Labels are assigned
    0..k-1 in left-to-right tree order.
    """
    if d < 0 or d > tree.max_depth:
        raise DepthExceedsTree(f"depth {d} outside [0, {tree.max_depth}]")

    if d == 0:
        frontier = [tree.root]
        premerge = 1
    else:
        frontier = _frontier_at_depth(tree, d)
        premerge = len(frontier)

    parents = _parent_map(tree)

    def collapse(target: CartNode):
        """Replace every frontier entry under ``target`` with ``target``."""
        keep_pos = None
        survivors = []
        member_ids = set()

        def mark(node: CartNode):
            member_ids.add(id(node))
            if not node.is_leaf:
                mark(node.left)
                mark(node.right)

        mark(target)
        for pos, node in enumerate(frontier):
            if id(node) in member_ids:
                if keep_pos is None:
                    keep_pos = pos
                    survivors.append(target)
            else:
                survivors.append(node)
        frontier[:] = survivors

    while True:
        undersized = next((n for n in frontier if n.size < min_leaf_size), None)
        if undersized is None:
            break
        parent = parents.get(id(undersized))
        if parent is None:
            raise InsufficientSamples(
                f"training set of {undersized.size} samples cannot satisfy the "
                f"local model minimum of {min_leaf_size}"
            )
        collapse(parent)

    divisions = [
        Division(sample_indices=node.sample_indices, label=i, h=node.mse, z=-float(node.size))
        for i, node in enumerate(frontier)
    ]
    return DivisionSet(depth=d, divisions=divisions, premerge_count=premerge, nodes=list(frontier))


def route_to_frontier(tree: CartTree, frontier_nodes: list[CartNode], config: np.ndarray) -> int:
    """Index of the frontier node a configuration falls into (test oracle aid)."""
    ids = {id(n): i for i, n in enumerate(frontier_nodes)}
    node = tree.root
    while True:
        if id(node) in ids:
            return ids[id(node)]
        if node.is_leaf:
            raise KeyError("configuration reached a leaf outside the frontier")
        if config[node.split.option_index] <= node.split.threshold:
            node = node.left
        else:
            node = node.right


def predict_mean(tree: CartTree, config) -> float:
    """Mean performance of the leaf the configuration routes to.

    Diagnostic only; the divide-and-learn prediction path uses local
    models, never the raw tree.
    """
    config = np.asarray(config, dtype=float)
    if config.shape != (tree.option_count,):
        raise DimensionMismatch(
            f"configuration has {config.shape} options, tree expects {tree.option_count}"
        )
    node = tree.root
    while not node.is_leaf:
        node = node.left if config[node.split.option_index] <= node.split.threshold else node.right
    return node.mean_performance


def tree_to_doc(tree: CartTree) -> dict:
    """Serialize to a plain dict (JSON-safe, lossless floats)."""
    nodes = []

    def walk(node: CartNode, parent: int) -> int:
        my_id = len(nodes)
        entry = {
            "parent": parent,
            "depth": node.depth,
            "indices": [int(i) for i in node.sample_indices],
            "mean": node.mean_performance,
            "mse": node.mse,
            "split": None,
            "left": None,
            "right": None,
        }
        nodes.append(entry)
        if not node.is_leaf:
            entry["split"] = {"option": node.split.option_index, "threshold": node.split.threshold}
            entry["left"] = walk(node.left, my_id)
            entry["right"] = walk(node.right, my_id)
        return my_id

    walk(tree.root, -1)
    return {
        "format": TREE_FORMAT,
        "option_count": tree.option_count,
        "max_depth": tree.max_depth,
        "min_leaf_size": tree.min_leaf_size,
        "nodes": nodes,
    }


def tree_from_doc(doc: dict) -> CartTree:
    try:
        fmt = doc["format"]
    except (TypeError, KeyError):
        raise CorruptDocument("tree document has no format tag")
    if fmt != TREE_FORMAT:
        raise VersionMismatch(f"expected {TREE_FORMAT}, found {fmt!r}")
    try:
        entries = doc["nodes"]

        def build(node_id: int) -> CartNode:
            e = entries[node_id]
            node = CartNode(
                sample_indices=np.array(e["indices"], dtype=int),
                depth=e["depth"],
                mean_performance=e["mean"],
                mse=e["mse"],
            )
            if e["split"] is not None:
                node.split = SplitRecord(e["split"]["option"], e["split"]["threshold"])
                node.left = build(e["left"])
                node.right = build(e["right"])
            return node

        root = build(0)
        return CartTree(
            root=root,
            max_depth=doc["max_depth"],
            option_count=doc["option_count"],
            min_leaf_size=doc["min_leaf_size"],
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise CorruptDocument(f"tree document is incomplete: {exc}")
