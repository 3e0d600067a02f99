"""Routing new configurations to divisions.

Training configurations inherit their division index as a pseudo label
(performance values are dropped), minority divisions are rebalanced with
SMOTE, and a Random Forest learns the decision boundary. At prediction
time the forest picks the division whose local model answers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cart import DivisionSet
from .dataset import Dataset
from .errors import CorruptDocument, DimensionMismatch, EmptySet, NonPartition
from .seeding import ROLE_TREE, derive_seed

FOREST_TREE_COUNT = 100
SMOTE_K_NEIGHBORS = 5


@dataclass
class PseudoLabeledSet:
    features: np.ndarray  # (n, options); no performance column
    labels: np.ndarray  # (n,) division indices
    binary_mask: np.ndarray  # per-option, True where the option is binary


@dataclass
class BalancedSet:
    features: np.ndarray
    labels: np.ndarray
    binary_mask: np.ndarray
    n_original: int
    # (base_row, neighbor_row) per appended synthetic row
    synthetic_parents: list[tuple[int, int]] = field(default_factory=list)
    # labels whose lone member had to be duplicated instead of interpolated
    duplicated_classes: tuple[int, ...] = ()


@dataclass
class _ClassNode:
    label: int = -1
    feature: int = -1
    threshold: float = 0.0
    left: "_ClassNode | None" = field(default=None, repr=False)
    right: "_ClassNode | None" = field(default=None, repr=False)

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class _ForestTree:
    root: _ClassNode
    seed: int
    bootstrap_indices: np.ndarray


@dataclass
class ForestClassifier:
    trees: list[_ForestTree]
    tree_count: int
    n_classes: int
    option_count: int
    constant_label: int | None = None  # set when training saw a single class


def make_pseudo_labels(divisions: DivisionSet, train: Dataset) -> PseudoLabeledSet:
    """Tag every training configuration with its division index."""
    n = train.n_samples
    combined = np.concatenate([d.sample_indices for d in divisions.divisions])
    if len(combined) != n or not np.array_equal(np.sort(combined), np.arange(n)):
        raise NonPartition("divisions do not partition the training indices")
    labels = np.empty(n, dtype=int)
    for division in divisions.divisions:
        labels[division.sample_indices] = division.label
    return PseudoLabeledSet(features=train.X.copy(), labels=labels, binary_mask=train.binary_mask())


def smote_balance(
    pseudo: PseudoLabeledSet, k_neighbors: int = SMOTE_K_NEIGHBORS, seed: int = 0
) -> BalancedSet:
    """Oversample minority divisions up to the majority count.

    A synthetic row is drawn as ``base + u * (neighbor - base)`` with u
    uniform in [0, 1] and the neighbor taken from the k nearest same-class
    rows (Euclidean distance on min-max-scaled features, so wide-ranged
    numeric options do not dominate). Binary options are rounded back to
    {0, 1} afterwards. A class of size one cannot interpolate; its row is
    duplicated instead and the class is flagged.
    """
    feats = pseudo.features
    labels = pseudo.labels
    classes, counts = np.unique(labels, return_counts=True)
    majority = int(counts.max())
    if np.all(counts == majority):
        return BalancedSet(
            features=feats.copy(),
            labels=labels.copy(),
            binary_mask=pseudo.binary_mask,
            n_original=len(labels),
        )

    mn, mx = feats.min(axis=0), feats.max(axis=0)
    span = np.where(mx - mn == 0, 1.0, mx - mn)
    scaled = (feats - mn) / span

    rng = np.random.default_rng(seed)
    new_rows, new_labels, parents = [], [], []
    duplicated = []
    for cls, count in zip(classes, counts):
        need = majority - int(count)
        if need == 0:
            continue
        members = np.nonzero(labels == cls)[0]
        if count == 1:
            lone = int(members[0])
            for _ in range(need):
                new_rows.append(feats[lone].copy())
                new_labels.append(cls)
                parents.append((lone, lone))
            duplicated.append(int(cls))
            continue
        k = min(k_neighbors, int(count) - 1)
        dists = np.linalg.norm(scaled[members][:, None, :] - scaled[members][None, :, :], axis=2)
        np.fill_diagonal(dists, np.inf)
        neighbor_lists = np.argsort(dists, axis=1, kind="stable")[:, :k]
        for _ in range(need):
            base_pos = int(rng.integers(len(members)))
            neighbor_pos = int(neighbor_lists[base_pos][int(rng.integers(k))])
            u = rng.random()
            base, neighbor = feats[members[base_pos]], feats[members[neighbor_pos]]
            row = base + u * (neighbor - base)
            row[pseudo.binary_mask] = np.where(row[pseudo.binary_mask] >= 0.5, 1.0, 0.0)
            new_rows.append(row)
            new_labels.append(cls)
            parents.append((int(members[base_pos]), int(members[neighbor_pos])))

    return BalancedSet(
        features=np.vstack([feats, np.array(new_rows)]),
        labels=np.concatenate([labels, np.array(new_labels, dtype=int)]),
        binary_mask=pseudo.binary_mask,
        n_original=len(labels),
        synthetic_parents=parents,
        duplicated_classes=tuple(duplicated),
    )


def _gini_best_split(X: np.ndarray, labels: np.ndarray, features, n_classes: int):
    """Best (feature, threshold) by weighted Gini impurity, or None."""
    n = len(labels)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), labels] = 1.0
    best = None
    best_score = np.inf
    for j in features:
        xs = X[:, j]
        order = np.argsort(xs, kind="stable")
        xo = xs[order]
        cum = np.cumsum(onehot[order], axis=0)
        cuts = np.nonzero(xo[:-1] < xo[1:])[0] + 1
        if cuts.size == 0:
            continue
        nl = cuts.astype(float)
        nr = n - nl
        left_counts = cum[cuts - 1]
        right_counts = cum[-1] - left_counts
        gini_l = 1.0 - np.sum((left_counts / nl[:, None]) ** 2, axis=1)
        gini_r = 1.0 - np.sum((right_counts / nr[:, None]) ** 2, axis=1)
        scores = (nl * gini_l + nr * gini_r) / n
        k = int(np.argmin(scores))
        if scores[k] < best_score:
            best_score = float(scores[k])
            cut = int(cuts[k])
            best = (int(j), float((xo[cut - 1] + xo[cut]) / 2.0))
    return best


def _majority(labels: np.ndarray, n_classes: int) -> int:
    # bincount + argmax breaks ties toward the lowest label
    return int(np.argmax(np.bincount(labels, minlength=n_classes)))


def _grow_class_tree(X: np.ndarray, labels: np.ndarray, n_classes: int, rng) -> _ClassNode:
    n_features = X.shape[1]
    n_bag = max(1, int(np.sqrt(n_features)))

    def grow(idx: np.ndarray) -> _ClassNode:
        ys = labels[idx]
        if np.all(ys == ys[0]):
            return _ClassNode(label=int(ys[0]))
        bag = np.sort(rng.choice(n_features, size=n_bag, replace=False))
        split = _gini_best_split(X[idx], ys, bag, n_classes)
        if split is None:
            rest = np.setdiff1d(np.arange(n_features), bag)
            split = _gini_best_split(X[idx], ys, rest, n_classes)
        if split is None:  # identical feature rows with mixed labels
            return _ClassNode(label=_majority(ys, n_classes))
        feature, threshold = split
        go_left = X[idx, feature] <= threshold
        node = _ClassNode(feature=feature, threshold=threshold)
        node.left = grow(idx[go_left])
        node.right = grow(idx[~go_left])
        return node

    return grow(np.arange(len(labels)))


def train_forest(balanced: BalancedSet, tree_count: int = FOREST_TREE_COUNT, seed: int = 0) -> ForestClassifier:
    """Grow the routing forest: bootstrap per tree, sqrt(options) features
    per split, Gini impurity, trees grown to purity. Deterministic under
    the seed, with per-tree seeds derived so tree order never matters."""
    X = np.asarray(balanced.features, dtype=float)
    labels = np.asarray(balanced.labels, dtype=int)
    if len(labels) == 0:
        raise EmptySet("cannot train a classifier on zero rows")
    classes = np.unique(labels)
    n_classes = int(classes.max()) + 1
    if len(classes) == 1:
        return ForestClassifier(
            trees=[],
            tree_count=tree_count,
            n_classes=n_classes,
            option_count=X.shape[1],
            constant_label=int(classes[0]),
        )
    trees = []
    for t in range(tree_count):
        tree_seed = derive_seed(seed, ROLE_TREE, t)
        rng = np.random.default_rng(tree_seed)
        boot = rng.integers(0, len(labels), size=len(labels))
        root = _grow_class_tree(X[boot], labels[boot], n_classes, rng)
        trees.append(_ForestTree(root=root, seed=tree_seed, bootstrap_indices=boot))
    return ForestClassifier(
        trees=trees, tree_count=tree_count, n_classes=n_classes, option_count=X.shape[1]
    )


def _tree_vote(node: _ClassNode, config: np.ndarray) -> int:
    while not node.is_leaf:
        node = node.left if config[node.feature] <= node.threshold else node.right
    return node.label


def assign_division(classifier: ForestClassifier, config) -> int:
    """Majority vote over the forest; ties go to the lowest label."""
    config = np.asarray(config, dtype=float)
    if config.shape != (classifier.option_count,):
        raise DimensionMismatch(
            f"configuration has shape {config.shape}, classifier expects ({classifier.option_count},)"
        )
    if classifier.constant_label is not None:
        return classifier.constant_label
    votes = np.bincount(
        [_tree_vote(t.root, config) for t in classifier.trees], minlength=classifier.n_classes
    )
    return int(np.argmax(votes))


def assign_many(classifier: ForestClassifier, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.array([assign_division(classifier, row) for row in X], dtype=int)


# ------------------------------------------------------------ documents


def _class_node_to_doc(node: _ClassNode, nodes: list) -> int:
    my_id = len(nodes)
    entry = {"label": node.label, "feature": node.feature, "threshold": node.threshold, "left": None, "right": None}
    nodes.append(entry)
    if not node.is_leaf:
        entry["left"] = _class_node_to_doc(node.left, nodes)
        entry["right"] = _class_node_to_doc(node.right, nodes)
    return my_id


def _class_node_from_doc(nodes: list, node_id: int) -> _ClassNode:
    e = nodes[node_id]
    node = _ClassNode(label=e["label"], feature=e["feature"], threshold=e["threshold"])
    if e["left"] is not None:
        node.left = _class_node_from_doc(nodes, e["left"])
        node.right = _class_node_from_doc(nodes, e["right"])
    return node


def forest_to_doc(classifier: ForestClassifier) -> dict:
    doc = {
        "tree_count": classifier.tree_count,
        "n_classes": classifier.n_classes,
        "option_count": classifier.option_count,
        "constant_label": classifier.constant_label,
        "trees": [],
    }
    for tree in classifier.trees:
        nodes: list = []
        _class_node_to_doc(tree.root, nodes)
        doc["trees"].append(
            {"seed": tree.seed, "bootstrap": tree.bootstrap_indices.tolist(), "nodes": nodes}
        )
    return doc


def forest_from_doc(doc: dict) -> ForestClassifier:
    try:
        trees = [
            _ForestTree(
                root=_class_node_from_doc(t["nodes"], 0),
                seed=t["seed"],
                bootstrap_indices=np.array(t["bootstrap"], dtype=int),
            )
            for t in doc["trees"]
        ]
        return ForestClassifier(
            trees=trees,
            tree_count=doc["tree_count"],
            n_classes=doc["n_classes"],
            option_count=doc["option_count"],
            constant_label=doc["constant_label"],
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise CorruptDocument(f"forest document is incomplete: {exc}")
