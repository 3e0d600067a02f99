"""End-to-end divide-and-learn pipeline.

``fit`` runs the whole training cascade: grow the division tree, adapt
the extraction depth, train one local model per division (optionally in
parallel), then build the routing classifier from SMOTE-balanced pseudo
labels. ``predict`` routes a configuration to its division and asks that
division's local model. Models serialize to a versioned JSON document.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import assign, cart, depth_adapt, localmodels
from .dataset import Dataset, OptionMeta
from .errors import (
    CorruptDocument,
    DepthExceedsTree,
    DimensionMismatch,
    InsufficientSamples,
    VersionMismatch,
)
from .seeding import ROLE_FOREST, ROLE_SMOTE, derive_seed

MODEL_FORMAT = "dal-model/1"


@dataclass
class DalModel:
    tree: cart.CartTree
    chosen_d: int
    divisions: cart.DivisionSet
    local_models: dict[int, localmodels.TrainedLocalModel]
    classifier: assign.ForestClassifier
    spec: localmodels.LocalModelSpec
    seed: int
    option_meta: list[OptionMeta]
    performance_name: str = "performance"

    @property
    def option_count(self) -> int:
        return len(self.option_meta)


def fit(
    train: Dataset,
    spec: localmodels.LocalModelSpec,
    d_override: int | None = None,
    seed: int = 0,
    n_jobs: int = 1,
) -> DalModel:
    """Train a divide-and-learn model on the given samples.

    The depth is adapted automatically unless ``d_override`` pins it;
    d=0 degenerates to a single local model behind a constant router.
    Every local model trains on its division alone with the master seed,
    so the d=0 model is bit-identical to training that local model
    directly. Deterministic for fixed (train, spec, seed).
    """
    if train.n_samples < spec.min_samples:
        raise InsufficientSamples(
            f"{train.n_samples} training samples cannot satisfy the local model minimum {spec.min_samples}"
        )
    tree = cart.train_cart(train.X, train.y, min_leaf_size=2)
    if d_override is not None:
        if d_override < 0 or d_override > tree.max_depth:
            raise DepthExceedsTree(f"d={d_override} outside [0, {tree.max_depth}]")
        d = d_override
    else:
        d = depth_adapt.adapt_depth(tree, train.y, spec.min_samples).d

    divisions = None
    while divisions is None:
        try:
            divisions = cart.extract_divisions(tree, d, spec.min_samples)
        except InsufficientSamples:
            if d == 0:
                raise
            d -= 1

    def train_one(division: cart.Division) -> tuple[int, localmodels.TrainedLocalModel]:
        model = localmodels.train_local(
            train.X[division.sample_indices], train.y[division.sample_indices], spec, seed
        )
        return division.label, model

    if n_jobs > 1 and len(divisions.divisions) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            local_models = dict(pool.map(train_one, divisions.divisions))
    else:
        local_models = dict(train_one(div) for div in divisions.divisions)

    pseudo = assign.make_pseudo_labels(divisions, train)
    balanced = assign.smote_balance(pseudo, seed=derive_seed(seed, ROLE_SMOTE))
    classifier = assign.train_forest(balanced, seed=derive_seed(seed, ROLE_FOREST))

    return DalModel(
        tree=tree,
        chosen_d=d,
        divisions=divisions,
        local_models=local_models,
        classifier=classifier,
        spec=spec,
        seed=seed,
        option_meta=list(train.option_meta),
        performance_name=train.performance_name,
    )


def predict(model: DalModel, config) -> float:
    """Predict the performance of a single configuration."""
    config = np.asarray(config, dtype=float)
    if config.shape != (model.option_count,):
        raise DimensionMismatch(
            f"configuration has shape {config.shape}, model expects ({model.option_count},)"
        )
    label = assign.assign_division(model.classifier, config)
    return float(localmodels.predict_local(model.local_models[label], config))


def predict_many(model: DalModel, X) -> np.ndarray:
    """Predict performance for every row of an option matrix."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.option_count:
        raise DimensionMismatch(
            f"option matrix has shape {X.shape}, model expects (*, {model.option_count})"
        )
    labels = assign.assign_many(model.classifier, X)
    out = np.empty(len(X))
    for lab in np.unique(labels):
        rows = labels == lab
        out[rows] = localmodels.predict_local(model.local_models[int(lab)], X[rows])
    return out


# ------------------------------------------------------------ documents


def model_to_doc(model: DalModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "seed": model.seed,
        "chosen_d": model.chosen_d,
        "performance_name": model.performance_name,
        "option_meta": [
            {"name": m.name, "kind": m.kind, "min": m.observed_min, "max": m.observed_max}
            for m in model.option_meta
        ],
        "spec": {
            "kind": model.spec.kind,
            "hyperparameters": dict(model.spec.hyperparameters),
            "min_samples": model.spec.min_samples,
        },
        "tree": cart.tree_to_doc(model.tree),
        "divisions": {
            "depth": model.divisions.depth,
            "premerge_count": model.divisions.premerge_count,
            "entries": [
                {"label": d.label, "h": d.h, "z": d.z, "indices": [int(i) for i in d.sample_indices]}
                for d in model.divisions.divisions
            ],
        },
        "local_models": {str(k): localmodels.model_to_doc(v) for k, v in model.local_models.items()},
        "forest": assign.forest_to_doc(model.classifier),
    }


def model_from_doc(doc: dict) -> DalModel:
    try:
        fmt = doc["format"]
    except (TypeError, KeyError):
        raise CorruptDocument("model document has no format tag")
    if fmt != MODEL_FORMAT:
        raise VersionMismatch(f"expected {MODEL_FORMAT}, found {fmt!r}")
    try:
        divisions = cart.DivisionSet(
            depth=doc["divisions"]["depth"],
            premerge_count=doc["divisions"]["premerge_count"],
            divisions=[
                cart.Division(
                    sample_indices=np.array(e["indices"], dtype=int),
                    label=e["label"],
                    h=e["h"],
                    z=e["z"],
                )
                for e in doc["divisions"]["entries"]
            ],
        )
        return DalModel(
            tree=cart.tree_from_doc(doc["tree"]),
            chosen_d=doc["chosen_d"],
            divisions=divisions,
            local_models={int(k): localmodels.model_from_doc(v) for k, v in doc["local_models"].items()},
            classifier=assign.forest_from_doc(doc["forest"]),
            spec=localmodels.LocalModelSpec(
                kind=doc["spec"]["kind"],
                hyperparameters=doc["spec"]["hyperparameters"],
                min_samples=doc["spec"]["min_samples"],
            ),
            seed=doc["seed"],
            option_meta=[
                OptionMeta(name=m["name"], kind=m["kind"], observed_min=m["min"], observed_max=m["max"])
                for m in doc["option_meta"]
            ],
            performance_name=doc["performance_name"],
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise CorruptDocument(f"model document is incomplete: {exc}")


def save_model(model: DalModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_doc(model), fh, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> DalModel:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorruptDocument(f"not a valid model document: {exc}")
    return model_from_doc(doc)
