"""Pluggable local regressors, one per division.

Three kinds are available: ordinary least squares (``linear``), a
division-local regression tree (``cart_local``), and a small
L1-regularized feed-forward network (``regularized_net``). Each model
min-max scales features and target from its own division only: divisions
have drastically different performance ranges, and local scaling is the
point of dividing. Training a division never reads anything outside its
own samples, so divisions can be trained concurrently and refit in
isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cart
from .errors import CorruptDocument, DimensionMismatch, InsufficientSamples, InvalidSpec
from .seeding import ROLE_NET, derive_seed

LINEAR = "linear"
CART_LOCAL = "cart_local"
REGULARIZED_NET = "regularized_net"

KIND_MIN_SAMPLES = {LINEAR: 2, CART_LOCAL: 2, REGULARIZED_NET: 5}

NET_DEFAULTS = {
    "hidden_units": 16,
    "l1_grid": (0.001, 0.01, 0.1),
    "steps": 2000,
    "learning_rate": 0.01,
    "cv_folds": 3,
}

RIDGE_FALLBACK = 1e-6


@dataclass(frozen=True)
class LocalModelSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    min_samples: int = 0  # 0 means: use the kind's own minimum

    def __post_init__(self):
        if self.kind not in KIND_MIN_SAMPLES:
            raise InvalidSpec(f"unknown local model kind {self.kind!r}")
        floor = KIND_MIN_SAMPLES[self.kind]
        if self.min_samples == 0:
            object.__setattr__(self, "min_samples", floor)
        elif self.min_samples < floor:
            raise InvalidSpec(f"{self.kind} needs at least {floor} samples per division")


@dataclass
class TrainedLocalModel:
    kind: str
    payload: dict
    feature_min: np.ndarray
    feature_max: np.ndarray
    target_min: float
    target_max: float

    @property
    def option_count(self) -> int:
        return len(self.feature_min)


def _scale_features(X: np.ndarray, mn: np.ndarray, mx: np.ndarray) -> np.ndarray:
    span = mx - mn
    span = np.where(span == 0, 1.0, span)
    return (X - mn) / span


def _scale_target(y: np.ndarray, mn: float, mx: float) -> np.ndarray:
    span = mx - mn
    if span == 0:
        return np.zeros_like(y)
    return (y - mn) / span


def _unscale_target(v: np.ndarray, mn: float, mx: float) -> np.ndarray:
    return mn + v * (mx - mn)


# ---------------------------------------------------------------- linear


def _fit_linear(Xs: np.ndarray, ys: np.ndarray) -> dict:
    A = np.hstack([Xs, np.ones((len(ys), 1))])
    if np.linalg.matrix_rank(A) < A.shape[1]:
        G = A.T @ A + RIDGE_FALLBACK * np.eye(A.shape[1])
        w = np.linalg.solve(G, A.T @ ys)
    else:
        w, *_ = np.linalg.lstsq(A, ys, rcond=None)
    return {"weights": w[:-1], "intercept": float(w[-1])}


def _predict_linear(payload: dict, Xs: np.ndarray) -> np.ndarray:
    return Xs @ payload["weights"] + payload["intercept"]


def linear_coefficients(model: TrainedLocalModel) -> tuple[float, np.ndarray]:
    """Intercept and per-option coefficients in raw (unscaled) units."""
    if model.kind != LINEAR:
        raise InvalidSpec("coefficients are only defined for the linear kind")
    w = np.asarray(model.payload["weights"], dtype=float)
    b = model.payload["intercept"]
    fspan = model.feature_max - model.feature_min
    fspan = np.where(fspan == 0, 1.0, fspan)
    tspan = model.target_max - model.target_min
    coefs = tspan * w / fspan
    intercept = model.target_min + tspan * (b - float(np.sum(w * model.feature_min / fspan)))
    return intercept, coefs


# ---------------------------------------------------- regularized network


def net_init(n_inputs: int, hidden_units: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    return {
        "W1": rng.normal(0.0, np.sqrt(2.0 / n_inputs), size=(n_inputs, hidden_units)),
        "b1": np.zeros(hidden_units),
        "W2": rng.normal(0.0, np.sqrt(2.0 / hidden_units), size=(hidden_units, 1)),
        "b2": np.zeros(1),
    }


def net_forward(params: dict, X: np.ndarray) -> np.ndarray:
    hidden = np.maximum(X @ params["W1"] + params["b1"], 0.0)
    return (hidden @ params["W2"] + params["b2"]).ravel()


def net_loss_and_grad(params: dict, X: np.ndarray, y: np.ndarray, l1: float):
    """Mean squared error plus an L1 penalty on both weight matrices.

    Returns the loss and its analytic gradient with respect to every
    parameter array; biases carry no penalty.
    """
    n = len(y)
    pre = X @ params["W1"] + params["b1"]
    hidden = np.maximum(pre, 0.0)
    out = (hidden @ params["W2"] + params["b2"]).ravel()
    residual = out - y
    loss = float(np.mean(residual**2)) + l1 * (
        float(np.sum(np.abs(params["W1"]))) + float(np.sum(np.abs(params["W2"])))
    )
    d_out = (2.0 / n) * residual[:, None]
    grad_W2 = hidden.T @ d_out + l1 * np.sign(params["W2"])
    grad_b2 = d_out.sum(axis=0)
    d_hidden = (d_out @ params["W2"].T) * (pre > 0)
    grad_W1 = X.T @ d_hidden + l1 * np.sign(params["W1"])
    grad_b1 = d_hidden.sum(axis=0)
    return loss, {"W1": grad_W1, "b1": grad_b1, "W2": grad_W2, "b2": grad_b2}


def _net_train(Xs: np.ndarray, ys: np.ndarray, l1: float, steps: int, lr: float, seed: int, hidden: int) -> dict:
    params = net_init(Xs.shape[1], hidden, seed)
    for _ in range(steps):
        _, grads = net_loss_and_grad(params, Xs, ys, l1)
        for key in params:
            params[key] = params[key] - lr * grads[key]
    return params


def _net_hyperparams(spec: LocalModelSpec) -> dict:
    hp = dict(NET_DEFAULTS)
    hp.update(spec.hyperparameters)
    return hp


def _fit_net(X: np.ndarray, y: np.ndarray, spec: LocalModelSpec, seed: int):
    """Pick the L1 strength by 3-fold cross-validated relative error, then
    retrain on the whole division."""
    hp = _net_hyperparams(spec)
    grid = tuple(hp["l1_grid"])
    folds = np.array_split(
        np.random.default_rng(derive_seed(seed, ROLE_NET, 0)).permutation(len(y)),
        hp["cv_folds"],
    )
    cv_errors = []
    for gi, l1 in enumerate(grid):
        errors = []
        for fi, val_idx in enumerate(folds):
            if len(val_idx) == 0:
                continue
            train_idx = np.setdiff1d(np.arange(len(y)), val_idx)
            fmn, fmx = X[train_idx].min(axis=0), X[train_idx].max(axis=0)
            tmn, tmx = float(y[train_idx].min()), float(y[train_idx].max())
            params = _net_train(
                _scale_features(X[train_idx], fmn, fmx),
                _scale_target(y[train_idx], tmn, tmx),
                l1,
                hp["steps"],
                hp["learning_rate"],
                derive_seed(seed, ROLE_NET, 1 + gi * len(folds) + fi),
                hp["hidden_units"],
            )
            pred = _unscale_target(net_forward(params, _scale_features(X[val_idx], fmn, fmx)), tmn, tmx)
            errors.append(float(np.mean(np.abs(y[val_idx] - pred) / np.abs(y[val_idx]))))
        cv_errors.append(float(np.mean(errors)))
    chosen = grid[int(np.argmin(cv_errors))]  # first minimum = smallest l1
    return chosen, hp


# ---------------------------------------------------------------- facade


def train_local(X: np.ndarray, y: np.ndarray, spec: LocalModelSpec, seed: int) -> TrainedLocalModel:
    """Train one local model on one division's samples.

    Pure function of (data, spec, seed): no global state is read or
    written, which is what keeps divisions independently refittable.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) < spec.min_samples:
        raise InsufficientSamples(
            f"{spec.kind} needs {spec.min_samples} samples, division has {len(y)}"
        )
    fmin, fmax = X.min(axis=0), X.max(axis=0)
    tmin, tmax = float(y.min()), float(y.max())
    Xs = _scale_features(X, fmin, fmax)
    ys = _scale_target(y, tmin, tmax)

    if spec.kind == LINEAR:
        payload = _fit_linear(Xs, ys)
    elif spec.kind == CART_LOCAL:
        leaf = int(spec.hyperparameters.get("min_leaf_size", 2))
        payload = {"tree": cart.train_cart(Xs, ys, min_leaf_size=leaf)}
    else:
        l1, hp = _fit_net(X, y, spec, seed)
        params = _net_train(
            Xs, ys, l1, hp["steps"], hp["learning_rate"], derive_seed(seed, ROLE_NET, 999), hp["hidden_units"]
        )
        payload = {"params": params, "l1": l1}
    return TrainedLocalModel(
        kind=spec.kind,
        payload=payload,
        feature_min=fmin,
        feature_max=fmax,
        target_min=tmin,
        target_max=tmax,
    )


def predict_local(model: TrainedLocalModel, configs: np.ndarray) -> np.ndarray:
    """Predict performance for one or many option vectors."""
    configs = np.asarray(configs, dtype=float)
    single = configs.ndim == 1
    X = configs[None, :] if single else configs
    if X.shape[1] != model.option_count:
        raise DimensionMismatch(
            f"configurations have {X.shape[1]} options, model expects {model.option_count}"
        )
    Xs = _scale_features(X, model.feature_min, model.feature_max)
    if model.kind == LINEAR:
        scaled = _predict_linear(model.payload, Xs)
    elif model.kind == CART_LOCAL:
        tree = model.payload["tree"]
        scaled = np.array([cart.predict_mean(tree, row) for row in Xs])
    else:
        scaled = net_forward(model.payload["params"], Xs)
    out = _unscale_target(scaled, model.target_min, model.target_max)
    if not np.all(np.isfinite(out)):
        raise ArithmeticError("local model produced a non-finite prediction")
    return out[0] if single else out


# ------------------------------------------------------------ documents


def model_to_doc(model: TrainedLocalModel) -> dict:
    doc = {
        "kind": model.kind,
        "feature_min": model.feature_min.tolist(),
        "feature_max": model.feature_max.tolist(),
        "target_min": model.target_min,
        "target_max": model.target_max,
    }
    if model.kind == LINEAR:
        doc["weights"] = np.asarray(model.payload["weights"]).tolist()
        doc["intercept"] = model.payload["intercept"]
    elif model.kind == CART_LOCAL:
        doc["tree"] = cart.tree_to_doc(model.payload["tree"])
    else:
        doc["l1"] = model.payload["l1"]
        doc["params"] = {k: v.tolist() for k, v in model.payload["params"].items()}
    return doc


def model_from_doc(doc: dict) -> TrainedLocalModel:
    try:
        kind = doc["kind"]
        if kind == LINEAR:
            payload = {"weights": np.array(doc["weights"], dtype=float), "intercept": doc["intercept"]}
        elif kind == CART_LOCAL:
            payload = {"tree": cart.tree_from_doc(doc["tree"])}
        elif kind == REGULARIZED_NET:
            payload = {
                "l1": doc["l1"],
                "params": {k: np.array(v, dtype=float) for k, v in doc["params"].items()},
            }
        else:
            raise CorruptDocument(f"unknown local model kind {kind!r}")
        return TrainedLocalModel(
            kind=kind,
            payload=payload,
            feature_min=np.array(doc["feature_min"], dtype=float),
            feature_max=np.array(doc["feature_max"], dtype=float),
            target_min=doc["target_min"],
            target_max=doc["target_max"],
        )
    except KeyError as exc:
        raise CorruptDocument(f"local model document is missing {exc}")
