"""Partial least squares regression for a single quality target.

Columns of X are centred, never scaled. Each component's weight direction has a
closed form for one response (w proportional to X_res' y_res), so no inner
iteration runs; ``max_inner_iterations`` is kept for a multi-response variant.
The fitted latent pipeline is collapsed into ``intercept + coefficients . x``.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from loguru import logger

from src.errors import (
    DimensionMismatch, STATUS_DEGENERATE_TARGET, STATUS_OK, TooFewSamples, TooManyComponents,
)

MODEL_VERSION = 1
DEFAULT_COMPONENTS = 10
DEFAULT_CANDIDATES = (5, 10, 15, 20, 25, 30)


@dataclass(frozen=True)
class PlsrConfig:
    n_components: int = DEFAULT_COMPONENTS
    max_inner_iterations: int = 500
    convergence_tol: float = 1e-10

    def validate(self) -> None:
        if self.n_components < 1:
            raise ValueError(f"n_components must be positive, got {self.n_components}")
        if self.max_inner_iterations < 1:
            raise ValueError(f"max_inner_iterations must be positive, got {self.max_inner_iterations}")
        if not self.convergence_tol > 0:
            raise ValueError(f"convergence_tol must be positive, got {self.convergence_tol}")

    def to_dict(self) -> dict:
        return {
            "n_components": self.n_components,
            "max_inner_iterations": self.max_inner_iterations,
            "convergence_tol": self.convergence_tol,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PlsrConfig":
        return cls(
            n_components=int(data.get("n_components", DEFAULT_COMPONENTS)),
            max_inner_iterations=int(data.get("max_inner_iterations", 500)),
            convergence_tol=float(data.get("convergence_tol", 1e-10)),
        )


@dataclass(eq=False)
class LatentDecomposition:
    """Centred-space factors: X_c ~ T P', y_c ~ T q."""
    weights: np.ndarray
    x_loadings: np.ndarray
    scores: np.ndarray
    y_loadings: np.ndarray

    @property
    def components_used(self) -> int:
        return self.scores.shape[1]

    def coefficients(self) -> np.ndarray:
        if self.components_used == 0:
            return np.zeros(self.weights.shape[0])
        return self.weights @ np.linalg.solve(self.x_loadings.T @ self.weights, self.y_loadings)


@dataclass(frozen=True, eq=False)
class PlsrModel:
    feature_mean: np.ndarray
    target_mean: float
    coefficients: np.ndarray
    intercept: float
    components_used: int
    n_components: int
    status: str = STATUS_OK
    training_meta: dict = field(default_factory=dict)

    @property
    def feature_dim(self) -> int:
        return self.feature_mean.shape[0]


def _as_design(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2:
        raise DimensionMismatch(f"X must be a 2-D matrix, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"X has {X.shape[0]} rows but y has {y.shape[0]} values")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("PLSR inputs must be finite")
    return X, y


def _check_components(cfg: PlsrConfig, n_samples: int, feature_dim: int) -> None:
    cfg.validate()
    if n_samples < 2:
        raise TooFewSamples(f"PLSR needs at least 2 samples, got {n_samples}")
    limit = min(n_samples - 1, feature_dim)
    if cfg.n_components > limit:
        raise TooManyComponents(
            f"{cfg.n_components} components requested; at most {limit} "
            f"for {n_samples} samples of dimension {feature_dim}"
        )


def nipals(Xc: np.ndarray, yc: np.ndarray, n_components: int, tol: float) -> LatentDecomposition:
    """Single-response deflation on centred data, stopping early on exhausted residuals."""
    n, m = Xc.shape
    x_res = Xc.copy()
    y_res = yc.copy()
    x_norm0 = np.linalg.norm(Xc)
    y_norm0 = np.linalg.norm(yc)
    W, P, T, q = [], [], [], []

    for a in range(n_components):
        x_norm = np.linalg.norm(x_res)
        y_norm = np.linalg.norm(y_res)
        if y_norm <= tol * y_norm0 or x_norm <= tol * x_norm0:
            logger.debug(f"PLSR residual exhausted after {a} component(s)")
            break
        w = x_res.T @ y_res
        w_norm = np.linalg.norm(w)
        if w_norm <= tol * x_norm * y_norm:
            logger.debug(f"PLSR residual target uncorrelated with features after {a} component(s)")
            break
        w /= w_norm
        t = x_res @ w
        tt = t @ t
        p = x_res.T @ t / tt
        c = (y_res @ t) / tt
        x_res -= np.outer(t, p)
        y_res -= c * t
        W.append(w)
        P.append(p)
        T.append(t)
        q.append(c)

    k = len(W)
    return LatentDecomposition(
        weights=np.column_stack(W) if k else np.zeros((m, 0)),
        x_loadings=np.column_stack(P) if k else np.zeros((m, 0)),
        scores=np.column_stack(T) if k else np.zeros((n, 0)),
        y_loadings=np.asarray(q, dtype=np.float64),
    )


def fit_latent(X, y, cfg: PlsrConfig = PlsrConfig()) -> LatentDecomposition:
    """Latent factors of the centred problem; exposes the scores for inspection."""
    X, y = _as_design(X, y)
    _check_components(cfg, *X.shape)
    return nipals(X - X.mean(axis=0), y - y.mean(), cfg.n_components, cfg.convergence_tol)


def fit(X, y, cfg: PlsrConfig = PlsrConfig(), meta: Optional[dict] = None) -> PlsrModel:
    X, y = _as_design(X, y)
    n_samples, feature_dim = X.shape
    _check_components(cfg, n_samples, feature_dim)
    x_mean = X.mean(axis=0)
    training_meta = {
        "algorithm": "nipals-single-target",
        "scaling": "center",
        "n_samples": int(n_samples),
        "feature_dim": int(feature_dim),
        **(meta or {}),
    }

    if np.ptp(y) == 0:
        logger.warning(f"Constant target ({y[0]}) over {n_samples} samples; fitting an intercept only")
        return PlsrModel(
            feature_mean=x_mean,
            target_mean=float(y[0]),
            coefficients=np.zeros(feature_dim),
            intercept=float(y[0]),
            components_used=0,
            n_components=cfg.n_components,
            status=STATUS_DEGENERATE_TARGET,
            training_meta=training_meta,
        )

    y_mean = y.mean()
    latent = nipals(X - x_mean, y - y_mean, cfg.n_components, cfg.convergence_tol)
    coefficients = latent.coefficients()
    if latent.components_used < cfg.n_components:
        logger.debug(f"PLSR stopped at {latent.components_used} of {cfg.n_components} components")
    return PlsrModel(
        feature_mean=x_mean,
        target_mean=float(y_mean),
        coefficients=coefficients,
        intercept=float(y_mean - x_mean @ coefficients),
        components_used=latent.components_used,
        n_components=cfg.n_components,
        training_meta=training_meta,
    )


def predict(model: PlsrModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.feature_dim,):
        raise DimensionMismatch(f"Model expects {model.feature_dim} features, got shape {x.shape}")
    return float(model.intercept + x @ model.coefficients)


def predict_many(model: PlsrModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.feature_dim:
        raise DimensionMismatch(f"Model expects {model.feature_dim} features, got shape {X.shape}")
    return model.intercept + X @ model.coefficients


def kfold_indices(n_samples: int, k_folds: int, seed: int):
    order = np.random.default_rng(seed).permutation(n_samples)
    return np.array_split(order, k_folds)


def select_components(X, y, candidates: Sequence[int] = DEFAULT_CANDIDATES, k_folds: int = 5,
                      seed: int = 0, cfg: PlsrConfig = PlsrConfig()) -> int:
    """Candidate with the lowest mean fold RMSE; ties go to the smaller p."""
    if not candidates:
        raise ValueError("select_components needs at least one candidate")
    if k_folds < 2:
        raise ValueError(f"k_folds must be >= 2, got {k_folds}")
    X, y = _as_design(X, y)
    ordered = sorted(set(int(c) for c in candidates))
    if len(ordered) == 1:
        return ordered[0]
    folds = kfold_indices(X.shape[0], k_folds, seed)

    best_p, best_rmse = None, np.inf
    for p in ordered:
        trial = PlsrConfig(p, cfg.max_inner_iterations, cfg.convergence_tol)
        fold_rmse = []
        for i, test_idx in enumerate(folds):
            train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
            model = fit(X[train_idx], y[train_idx], trial)
            residual = predict_many(model, X[test_idx]) - y[test_idx]
            fold_rmse.append(np.sqrt(np.mean(residual ** 2)))
        rmse = float(np.mean(fold_rmse))
        logger.debug(f"p={p}: mean {k_folds}-fold RMSE {rmse:.6g}")
        if rmse < best_rmse * (1.0 - 1e-12):
            best_p, best_rmse = p, rmse
    logger.info(f"Selected {best_p} PLSR components (CV RMSE {best_rmse:.6g})")
    return best_p


def model_to_dict(model: PlsrModel) -> dict:
    return {
        "version": MODEL_VERSION,
        "n_components": model.n_components,
        "components_used": model.components_used,
        "feature_mean": [float(v) for v in model.feature_mean],
        "target_mean": float(model.target_mean),
        "coefficients": [float(v) for v in model.coefficients],
        "intercept": float(model.intercept),
        "status": model.status,
        "training_meta": model.training_meta,
    }


def model_from_dict(data: dict) -> PlsrModel:
    if data.get("version") != MODEL_VERSION:
        raise ValueError(f"Unsupported PLSR model version {data.get('version')}")
    feature_mean = np.asarray(data["feature_mean"], dtype=np.float64)
    coefficients = np.asarray(data["coefficients"], dtype=np.float64)
    if feature_mean.shape != coefficients.shape:
        raise DimensionMismatch("feature_mean and coefficients lengths differ")
    return PlsrModel(
        feature_mean=feature_mean,
        target_mean=float(data["target_mean"]),
        coefficients=coefficients,
        intercept=float(data["intercept"]),
        components_used=int(data["components_used"]),
        n_components=int(data["n_components"]),
        status=data.get("status", STATUS_OK),
        training_meta=dict(data.get("training_meta", {})),
    )


def save_model(model: PlsrModel, path: Union[str, Path]) -> None:
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f, indent=2)


def load_model(path: Union[str, Path]) -> PlsrModel:
    with open(path, "r") as f:
        return model_from_dict(json.load(f))
