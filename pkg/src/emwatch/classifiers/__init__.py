"""Trainable classifier families (SVM / random forest / MLP) behind one
surface: seeded training, per-class decision scores, JSON serialization, and
grouped-CV grid search scored by emergency-class micro recall."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..data import Dataset, kfold_videos, n_classes_for_mode
from ..errors import DegenerateData, DimensionMismatch, ModelFormatError, NonFiniteInput
from ..metrics import confusion, micro_metrics
from ..sampling import dataset_samples, training_matrix
from . import forest as _forest
from . import mlp as _mlp
from . import svm as _svm

FORMAT_VERSION = 1

EMERGENCY = 1


@dataclass(frozen=True)
class SvmSpec:
    C: float = 1.0
    kernel: str = "rbf"
    degree: int = 3
    gamma: Union[str, float] = "auto"  # "auto" means 1 / n_features
    family = "svm"

    def validate(self) -> None:
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.kernel not in _svm.KERNELS:
            raise ValueError(f"kernel must be one of {_svm.KERNELS}")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.gamma != "auto" and float(self.gamma) <= 0:
            raise ValueError("gamma must be 'auto' or positive")


@dataclass(frozen=True)
class ForestSpec:
    n_trees: int = 100
    max_depth: int = 12
    min_samples_leaf: int = 1
    max_features_fraction: float = 0.3
    family = "forest"

    def validate(self) -> None:
        if self.n_trees < 1 or self.max_depth < 1 or self.min_samples_leaf < 1:
            raise ValueError("n_trees, max_depth and min_samples_leaf must be >= 1")
        if not 0.0 < self.max_features_fraction <= 1.0:
            raise ValueError("max_features_fraction must be in (0, 1]")


@dataclass(frozen=True)
class MlpSpec:
    hidden_layers: tuple = (64,)
    learning_rate: float = 0.01
    epochs: int = 100
    l2_penalty: float = 0.0
    family = "mlp"

    def validate(self) -> None:
        if not self.hidden_layers or any(w < 1 for w in self.hidden_layers):
            raise ValueError("hidden_layers must be a non-empty tuple of positive widths")
        if self.learning_rate <= 0 or self.epochs < 1 or self.l2_penalty < 0:
            raise ValueError("bad learning_rate / epochs / l2_penalty")


HyperparameterSpec = Union[SvmSpec, ForestSpec, MlpSpec]

_FAMILIES = {"svm": SvmSpec, "forest": ForestSpec, "mlp": MlpSpec}


def spec_to_dict(spec: HyperparameterSpec) -> dict:
    if isinstance(spec, SvmSpec):
        params = {"C": spec.C, "kernel": spec.kernel, "degree": spec.degree, "gamma": spec.gamma}
    elif isinstance(spec, ForestSpec):
        params = {
            "n_trees": spec.n_trees,
            "max_depth": spec.max_depth,
            "min_samples_leaf": spec.min_samples_leaf,
            "max_features_fraction": spec.max_features_fraction,
        }
    else:
        params = {
            "hidden_layers": list(spec.hidden_layers),
            "learning_rate": spec.learning_rate,
            "epochs": spec.epochs,
            "l2_penalty": spec.l2_penalty,
        }
    return {"family": spec.family, "params": params}


def spec_from_dict(payload: dict) -> HyperparameterSpec:
    try:
        family = payload["family"]
        params = dict(payload.get("params", {}))
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"bad spec payload: {exc}") from exc
    if family not in _FAMILIES:
        raise ModelFormatError(f"unknown classifier family {family!r}")
    if family == "mlp" and "hidden_layers" in params:
        params["hidden_layers"] = tuple(params["hidden_layers"])
    try:
        spec = _FAMILIES[family](**params)
        spec.validate()
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad {family} spec: {exc}") from exc
    return spec


@dataclass(frozen=True)
class TrainedModel:
    spec: HyperparameterSpec
    params: object  # family-specific fitted parameters
    n_classes: int
    n_features: int
    train_seed: int

    @property
    def family(self) -> str:
        return self.spec.family


def train(
    spec: HyperparameterSpec,
    X: np.ndarray,
    y: np.ndarray,
    seed: int,
    n_classes: Optional[int] = None,
) -> TrainedModel:
    """Fit one model; same (data, spec, seed) always yields identical scores."""
    spec.validate()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"X {X.shape} does not match y {y.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("training features contain non-finite values")
    present = np.unique(y)
    if present.size < 2:
        raise DegenerateData(f"need at least 2 classes, got {present.tolist()}")
    if n_classes is None:
        n_classes = int(present.max()) + 1
    if present.min() < 0 or present.max() >= n_classes:
        raise DegenerateData(f"labels {present.tolist()} outside [0, {n_classes})")

    if isinstance(spec, SvmSpec):
        params = _svm.fit_machines(
            X, y, n_classes, spec.C, spec.kernel, spec.degree, spec.gamma, seed
        )
    elif isinstance(spec, ForestSpec):
        params = _forest.fit_forest(
            X, y, n_classes, spec.n_trees, spec.max_depth,
            spec.min_samples_leaf, spec.max_features_fraction, seed,
        )
    else:
        params = _mlp.fit_mlp(
            X, y, n_classes, tuple(spec.hidden_layers),
            spec.learning_rate, spec.epochs, spec.l2_penalty, seed,
        )
    return TrainedModel(
        spec=spec, params=params, n_classes=n_classes, n_features=X.shape[1], train_seed=seed
    )


def predict_scores(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Decision scores for a batch, shape (n_samples, n_classes)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"expected (*, {model.n_features}) features, got {X.shape}"
        )
    if isinstance(model.spec, SvmSpec):
        return _svm.machine_scores(model.params, model.n_classes, X)
    if isinstance(model.spec, ForestSpec):
        return _forest.forest_scores(model.params, model.n_classes, X)
    return _mlp.mlp_scores(model.params, X)


def decision_scores(model: TrainedModel, x: np.ndarray) -> np.ndarray:
    """Score vector for a single feature vector (length n_classes)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.n_features:
        raise DimensionMismatch(f"expected a length-{model.n_features} vector, got {x.shape}")
    return predict_scores(model, x[None, :])[0]


# --- serialization -------------------------------------------------------------

def model_to_dict(model: TrainedModel) -> dict:
    if isinstance(model.spec, SvmSpec):
        params = {
            "machines": [
                {
                    "target_class": m.target_class,
                    "support_vectors": m.support_vectors.tolist(),
                    "coef": m.coef.tolist(),
                    "bias": m.bias,
                    "kernel": m.kernel,
                    "degree": m.degree,
                    "gamma": m.gamma,
                }
                for m in model.params
            ]
        }
    elif isinstance(model.spec, ForestSpec):
        params = {
            "trees": [
                {
                    "feature": t.feature,
                    "threshold": t.threshold,
                    "left": t.left,
                    "right": t.right,
                    "probs": [p.tolist() for p in t.probs],
                }
                for t in model.params
            ]
        }
    else:
        params = {
            "weights": [w.tolist() for w in model.params.weights],
            "biases": [b.tolist() for b in model.params.biases],
        }
    return {
        "format_version": FORMAT_VERSION,
        "spec": spec_to_dict(model.spec),
        "n_classes": model.n_classes,
        "n_features": model.n_features,
        "train_seed": model.train_seed,
        "params": params,
    }


def model_from_dict(payload: dict) -> TrainedModel:
    if payload.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format {payload.get('format_version')!r}")
    spec = spec_from_dict(payload["spec"])
    raw = payload["params"]
    if isinstance(spec, SvmSpec):
        params = [
            _svm.SvmMachine(
                target_class=int(m["target_class"]),
                support_vectors=np.array(m["support_vectors"], dtype=np.float64).reshape(
                    len(m["coef"]), -1
                ) if m["coef"] else np.empty((0, payload["n_features"])),
                coef=np.array(m["coef"], dtype=np.float64),
                bias=float(m["bias"]),
                kernel=m["kernel"],
                degree=int(m["degree"]),
                gamma=float(m["gamma"]),
            )
            for m in raw["machines"]
        ]
    elif isinstance(spec, ForestSpec):
        params = []
        for t in raw["trees"]:
            tree = _forest.Tree(
                feature=list(t["feature"]),
                threshold=list(t["threshold"]),
                left=list(t["left"]),
                right=list(t["right"]),
                probs=[np.array(p, dtype=np.float64) for p in t["probs"]],
            )
            params.append(tree)
    else:
        params = _mlp.MlpParams(
            weights=[np.array(w, dtype=np.float64) for w in raw["weights"]],
            biases=[np.array(b, dtype=np.float64) for b in raw["biases"]],
        )
    return TrainedModel(
        spec=spec,
        params=params,
        n_classes=int(payload["n_classes"]),
        n_features=int(payload["n_features"]),
        train_seed=int(payload["train_seed"]),
    )


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True))


def load_model(path: str | Path, expected_n_features: Optional[int] = None) -> TrainedModel:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    model = model_from_dict(payload)
    if expected_n_features is not None and model.n_features != expected_n_features:
        raise ModelFormatError(
            f"model was trained on {model.n_features} features, expected {expected_n_features}"
        )
    return model


# --- grid search ----------------------------------------------------------------

def grid_search_cv(
    grid: list,
    train_dataset: Dataset,
    k: int = 5,
    seed: int = 0,
) -> tuple[HyperparameterSpec, list]:
    """Evaluate each spec with video-level k-fold CV; the objective is micro
    recall restricted to the emergency class on pooled validation frames.
    Ties go to the earliest spec in grid order."""
    if not grid:
        raise ValueError("hyperparameter grid must be non-empty")
    n_classes = n_classes_for_mode(train_dataset.mode)
    folds = kfold_videos(train_dataset, k, seed)
    cache = dataset_samples(train_dataset)
    fold_matrices = [
        (training_matrix(cache, tr.video_ids), training_matrix(cache, va.video_ids))
        for tr, va in folds
    ]
    mean_recalls = []
    for spec in grid:
        fold_recalls = []
        for fold_idx, ((X_tr, y_tr), (X_va, y_va)) in enumerate(fold_matrices):
            model = train(spec, X_tr, y_tr, seed=seed + fold_idx, n_classes=n_classes)
            preds = np.argmax(predict_scores(model, X_va), axis=1)
            cm = confusion(preds, y_va, n_classes)
            fold_recalls.append(micro_metrics(cm, [EMERGENCY])["recall"])
        mean_recalls.append(float(np.mean(fold_recalls)))
    best = int(np.argmax(mean_recalls))
    return grid[best], mean_recalls
