"""Model pipeline (sibling scaling + regressor) and its versioned JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..features import N_FEATURES, SIBLING_COLUMNS, RobustScaler
from ..wells import PropertyKind
from .boosting import GradientBoostedEnsemble, fit_gb
from .linear import LinearModel, fit_linear
from .mlp import MlpModel, TrainConfig, fit_mlp

FORMAT = "wellfill-model"
VERSION = 1
MODEL_KINDS = ("lr", "gb", "nn")

_LOADERS = {"lr": LinearModel, "gb": GradientBoostedEnsemble, "nn": MlpModel}


class ModelFormatError(ValueError):
    pass


@dataclass
class Regressor:
    """A fitted model plus the sibling scaler fitted on its training rows."""

    kind: str
    scaler: RobustScaler
    model: object
    target: PropertyKind | None = None
    seed: int = 0
    options: dict = field(default_factory=dict)

    def scale(self, X) -> np.ndarray:
        X = np.array(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != N_FEATURES:
            raise ValueError(f"expected (n, {N_FEATURES}) features, got {X.shape}")
        X[:, SIBLING_COLUMNS] = self.scaler.transform(X[:, SIBLING_COLUMNS])
        return X

    def predict(self, X) -> np.ndarray:
        return np.asarray(self.model.predict(self.scale(X)), dtype=np.float64)

    def to_dict(self) -> dict:
        if self.kind not in _LOADERS:
            raise ModelFormatError(f"model kind {self.kind!r} cannot be serialized")
        return {"format": FORMAT, "version": VERSION, "kind": self.kind,
                "target": None if self.target is None else self.target.value,
                "seed": self.seed, "options": self.options,
                "scaler": self.scaler.to_dict(), "model": self.model.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Regressor":
        if d.get("format") != FORMAT:
            raise ModelFormatError(f"not a {FORMAT} document")
        if d.get("version") != VERSION:
            raise ModelFormatError(f"unsupported model version {d.get('version')!r}")
        kind = d.get("kind")
        if kind not in _LOADERS:
            raise ModelFormatError(f"unknown model kind {kind!r}")
        target = None if d.get("target") is None else PropertyKind(d["target"])
        return cls(kind, RobustScaler.from_dict(d["scaler"]), _LOADERS[kind].from_dict(d["model"]),
                   target, int(d.get("seed", 0)), dict(d.get("options", {})))

    @classmethod
    def from_json(cls, text: str) -> "Regressor":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model file is not JSON: {exc}") from exc
        return cls.from_dict(d)


def save_model(reg: Regressor, path) -> None:
    Path(path).write_text(reg.to_json(), encoding="utf-8")


def load_model(path) -> Regressor:
    return Regressor.from_json(Path(path).read_text(encoding="utf-8"))


def _fit_model(kind: str, X, y, seed: int, options: dict):
    if kind == "lr":
        return fit_linear(X, y)
    if kind == "gb":
        allowed = {"n_trees", "learning_rate", "max_depth", "min_samples_split"}
        return fit_gb(X, y, **{k: v for k, v in options.items() if k in allowed})
    if kind == "nn":
        cfg = {k: v for k, v in options.items() if k in TrainConfig.__dataclass_fields__}
        cfg["seed"] = seed
        if "hidden" in cfg:
            cfg["hidden"] = tuple(cfg["hidden"])
        return fit_mlp(X, y, TrainConfig(**cfg))
    raise ValueError(f"unknown model kind {kind!r}; expected one of {', '.join(MODEL_KINDS)}")


def fit_regressor(kind: str | Callable, X, y, seed: int = 0, options: dict | None = None,
                  target: PropertyKind | None = None) -> Regressor:
    """Fit the sibling scaler on ``X`` then the model on the scaled rows.

    ``kind`` is "lr", "gb", "nn" or a factory ``f(X_scaled, y) -> object with
    predict`` (used for test stubs).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != N_FEATURES:
        raise ValueError(f"expected (n, {N_FEATURES}) features, got {X.shape}")
    options = dict(options or {})
    scaler = RobustScaler().fit(X[:, SIBLING_COLUMNS])
    reg = Regressor(kind if isinstance(kind, str) else getattr(kind, "__name__", "custom"),
                    scaler, None, target, seed, options)
    Xs = reg.scale(X)
    reg.model = kind(Xs, y) if callable(kind) else _fit_model(kind, Xs, y, seed, options)
    return reg
