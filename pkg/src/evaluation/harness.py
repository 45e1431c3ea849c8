"""Evaluation protocols: Monte-Carlo cross-validation, cross-dataset tests,
training-ratio sweeps, aggregation-structure comparison and outlier ratios.

Learning-based predictions are scored raw. The logistic mapping is only used
for learning-free score files and for the 2-sigma outlier band.
"""
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger
from tqdm import tqdm

from src.aggregation.aggregators import AggregationKind, Structure, structure_name
from src.dataset.manifest import DatasetManifest
from src.errors import DegenerateInput, LengthMismatch, MissingFeatures, STATUS_OK
from src.evaluation.logistic import LogisticFit, LogisticParams, fit_logistic
from src.evaluation.metrics import plcc, rmse, srocc
from src.evaluation.splits import SplitPlan, make_splits
from src.features.backend import FeatureSet
from src.pipeline.sfa_model import (
    DEFAULT_STRUCTURES, EnsembleRule, ensemble_score, score_image, sub_scores, train_sfa,
)
from src.regression.plsr import PlsrConfig

DEFAULT_RATIOS = tuple(round(0.1 * k, 1) for k in range(1, 10))
METRICS = ("srocc", "plcc", "rmse")
STATUS_DEGENERATE = "degenerate"

# Mean baseline, the three statistical structures and the two feature-level combinations.
COMPARISON_STRUCTURES: List[Structure] = [
    (AggregationKind.MEAN,),
    (AggregationKind.MEAN_STD,),
    (AggregationKind.QUANTILE,),
    (AggregationKind.MOMENT,),
    (AggregationKind.MEAN_STD, AggregationKind.QUANTILE),
    (AggregationKind.MOMENT, AggregationKind.QUANTILE),
]


@dataclass
class HarnessConfig:
    """Configuration for a Monte-Carlo evaluation."""
    n_runs: int = 1000
    train_ratio: float = 0.8
    seed: int = 0
    plsr: PlsrConfig = field(default_factory=PlsrConfig)
    structures: List[Structure] = field(default_factory=lambda: list(DEFAULT_STRUCTURES))
    ensemble: EnsembleRule = field(default_factory=EnsembleRule)
    with_outlier_ratio: bool = True
    n_jobs: int = 1
    progress: bool = True

    def validate(self) -> None:
        if self.n_runs < 1:
            raise ValueError(f"n_runs must be positive, got {self.n_runs}")
        if not 0 < self.train_ratio < 1:
            raise ValueError(f"train_ratio must lie in (0, 1), got {self.train_ratio}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if not self.structures:
            raise ValueError("At least one aggregation structure is required")
        self.plsr.validate()


@dataclass(frozen=True)
class PerImageScore:
    image_id: str
    subjective: float
    objective: float
    mapped: float


@dataclass(frozen=True)
class OutlierAnalysis:
    fit: LogisticFit
    mapped: np.ndarray
    residuals: np.ndarray
    sigma: float
    ratio: float


@dataclass
class EvalReport:
    srocc: float
    plcc: float
    rmse: float
    n_test: int
    outlier_ratio: Optional[float] = None
    logistic: Optional[LogisticParams] = None
    band_sigma: Optional[float] = None
    per_image: List[PerImageScore] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "srocc": self.srocc,
            "plcc": self.plcc,
            "rmse": self.rmse,
            "n_test": self.n_test,
            "outlier_ratio": self.outlier_ratio,
            "logistic": self.logistic.to_dict() if self.logistic else None,
            "band_sigma": self.band_sigma,
        }

    def scatter_frame(self) -> pd.DataFrame:
        """Plot-ready rows: subjective, objective, mapped and the 2-sigma band."""
        frame = pd.DataFrame([vars(p) for p in self.per_image],
                             columns=["image_id", "subjective", "objective", "mapped"])
        sigma = self.band_sigma if self.band_sigma is not None else np.nan
        frame["band_lo"] = frame["mapped"] - 2.0 * sigma
        frame["band_hi"] = frame["mapped"] + 2.0 * sigma
        return frame


def analyse_outliers(subjective: Sequence[float], objective: Sequence[float]) -> OutlierAnalysis:
    """Fit objective -> subjective; points further than 2 sigma from the curve are outliers.

    sigma is the standard deviation of the residuals about the fitted curve.
    """
    y = np.asarray(subjective, dtype=np.float64)
    x = np.asarray(objective, dtype=np.float64)
    fit = fit_logistic(x, y)
    mapped = fit.params(x)
    residuals = y - mapped
    sigma = float(np.std(residuals))
    if sigma <= 1e-6 * max(1.0, float(np.std(y))):
        ratio = 0.0
    else:
        ratio = float(np.mean(np.abs(residuals) > 2.0 * sigma))
    return OutlierAnalysis(fit=fit, mapped=mapped, residuals=residuals, sigma=sigma, ratio=ratio)


def outlier_ratio(per_image: Sequence[Tuple[float, float]]) -> float:
    """Fraction of (subjective, prediction) points outside the 2-sigma band."""
    pairs = np.asarray(per_image, dtype=np.float64).reshape(-1, 2)
    return analyse_outliers(pairs[:, 0], pairs[:, 1]).ratio


def _safe(metric, x, y) -> float:
    try:
        return metric(x, y)
    except (DegenerateInput, LengthMismatch):
        return np.nan


def _evaluate_run(split: SplitPlan, features: Mapping[str, FeatureSet], scores: Mapping[str, float],
                  cfg: HarnessConfig, extra_structures: Sequence[Structure]) -> dict:
    structures = list(cfg.structures) + [s for s in extra_structures if s not in cfg.structures]
    model = train_sfa(
        features,
        {i: scores[i] for i in split.train_ids},
        cfg.plsr,
        structures=structures,
        meta={"seed": split.seed, "run_index": split.run_index},
    )
    subjective = np.array([scores[i] for i in split.test_ids])
    per_structure = {structure_name(s): [] for s in structures}
    predictions = []
    for image_id in split.test_ids:
        if image_id not in features:
            raise MissingFeatures(image_id)
        sub = sub_scores(model, features[image_id])
        for name, value in sub.items():
            per_structure[name].append(value)
        predictions.append(ensemble_score(cfg.ensemble, cfg.structures, sub))
    predictions = np.asarray(predictions)

    row = {
        "run": split.run_index,
        "n_train": len(split.train_ids),
        "n_test": len(split.test_ids),
        "srocc": _safe(srocc, predictions, subjective),
        "plcc": _safe(plcc, predictions, subjective),
        "rmse": _safe(rmse, predictions, subjective),
        "outlier_ratio": np.nan,
    }
    if cfg.with_outlier_ratio and len(subjective) >= 5:
        try:
            row["outlier_ratio"] = outlier_ratio(np.column_stack((subjective, predictions)))
        except DegenerateInput:
            pass
    for name, values in per_structure.items():
        values = np.asarray(values)
        row[f"srocc[{name}]"] = _safe(srocc, values, subjective)
        row[f"plcc[{name}]"] = _safe(plcc, values, subjective)
        row[f"rmse[{name}]"] = _safe(rmse, values, subjective)
    row["status"] = STATUS_OK if np.all(np.isfinite([row[m] for m in METRICS])) else STATUS_DEGENERATE
    return row


@dataclass
class MetricStats:
    """Distribution of one metric over Monte-Carlo runs."""
    values: List[float] = field(default_factory=list)

    @property
    def median(self) -> float:
        finite = [v for v in self.values if np.isfinite(v)]
        return float(np.median(finite)) if finite else float("nan")

    @property
    def mean(self) -> float:
        finite = [v for v in self.values if np.isfinite(v)]
        return float(np.mean(finite)) if finite else float("nan")


class MonteCarloResults:
    """Per-run rows from a Monte-Carlo evaluation and their summary."""

    def __init__(self, config: HarnessConfig):
        self.config = config
        self.runs: List[dict] = []

    def record_run(self, row: dict) -> None:
        self.runs.append(row)

    @property
    def total_runs(self) -> int:
        return len(self.runs)

    @property
    def failed_runs(self) -> int:
        return sum(1 for r in self.runs if r["status"] != STATUS_OK)

    def stats(self, column: str) -> MetricStats:
        return MetricStats([float(r.get(column, np.nan)) for r in self.runs])

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.runs)

    def structure_names(self) -> List[str]:
        if not self.runs:
            return []
        return [k[len("srocc["):-1] for k in self.runs[0] if k.startswith("srocc[")]

    def summary(self) -> dict:
        columns = METRICS + ("outlier_ratio",)
        return {
            "n_runs": self.total_runs,
            "failed_runs": self.failed_runs,
            "train_ratio": self.config.train_ratio,
            "seed": self.config.seed,
            "ensemble": self.config.ensemble.name,
            "median": {c: self.stats(c).median for c in columns},
            "mean": {c: self.stats(c).mean for c in columns},
            "sub_models": {
                name: {m: self.stats(f"{m}[{name}]").median for m in METRICS}
                for name in self.structure_names()
            },
        }


class MonteCarloHarness:
    """Repeated content-disjoint train/test evaluation of the SFA pipeline."""

    def __init__(self, manifest: DatasetManifest, features: Mapping[str, FeatureSet],
                 config: HarnessConfig, extra_structures: Sequence[Structure] = ()):
        config.validate()
        self.manifest = manifest
        self.features = features
        self.config = config
        self.extra_structures = list(extra_structures)
        missing = [e.image_id for e in manifest.active_entries() if e.image_id not in features]
        if missing:
            raise MissingFeatures(missing[0])
        self.scores = manifest.scores()

    def run(self) -> MonteCarloResults:
        cfg = self.config
        logger.info(
            f"Monte-Carlo evaluation on {self.manifest.name}: {cfg.n_runs} runs, "
            f"train ratio {cfg.train_ratio}, seed {cfg.seed}"
        )
        splits = make_splits(self.manifest, cfg.train_ratio, cfg.n_runs, cfg.seed)
        results = MonteCarloResults(cfg)
        progress = tqdm(splits, desc=f"ratio {cfg.train_ratio}", disable=not cfg.progress, leave=False)

        if cfg.n_jobs == 1:
            for split in progress:
                results.record_run(
                    _evaluate_run(split, self.features, self.scores, cfg, self.extra_structures)
                )
                if (split.run_index + 1) % 100 == 0:
                    logger.info(f"Completed {split.run_index + 1} runs")
        else:
            rows = Parallel(n_jobs=cfg.n_jobs)(
                delayed(_evaluate_run)(split, self.features, self.scores, cfg, self.extra_structures)
                for split in progress
            )
            for row in rows:
                results.record_run(row)

        if results.failed_runs:
            logger.warning(f"{results.failed_runs} of {results.total_runs} runs had undefined metrics")
        median = results.summary()["median"]
        logger.info(
            f"Median SROCC {median['srocc']:.4f}, PLCC {median['plcc']:.4f}, RMSE {median['rmse']:.4f}"
        )
        return results


def montecarlo_eval(manifest: DatasetManifest, features: Mapping[str, FeatureSet],
                    cfg: HarnessConfig, n_runs: Optional[int] = None,
                    seed: Optional[int] = None) -> MonteCarloResults:
    if n_runs is not None:
        cfg = replace(cfg, n_runs=n_runs)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return MonteCarloHarness(manifest, features, cfg).run()


def ratio_sweep(manifest: DatasetManifest, features: Mapping[str, FeatureSet], cfg: HarnessConfig,
                ratios: Sequence[float] = DEFAULT_RATIOS, n_runs: Optional[int] = None,
                seed: Optional[int] = None) -> pd.DataFrame:
    """One Monte-Carlo summary row per training ratio."""
    for ratio in ratios:
        if not 0 < ratio < 1:
            raise ValueError(f"Training ratios must lie in (0, 1), got {ratio}")
    rows = []
    for ratio in ratios:
        results = montecarlo_eval(manifest, features, replace(cfg, train_ratio=float(ratio)), n_runs, seed)
        summary = results.summary()
        rows.append({
            "train_ratio": float(ratio),
            "n_runs": summary["n_runs"],
            "failed_runs": summary["failed_runs"],
            **{f"median_{m}": summary["median"][m] for m in METRICS + ("outlier_ratio",)},
            **{f"mean_{m}": summary["mean"][m] for m in METRICS},
        })
    return pd.DataFrame(rows)


def compare_structures(manifest: DatasetManifest, features: Mapping[str, FeatureSet],
                       cfg: HarnessConfig, n_runs: Optional[int] = None,
                       seed: Optional[int] = None) -> Tuple[pd.DataFrame, MonteCarloResults]:
    """Median metrics of every comparison structure and the ensemble on shared splits."""
    if n_runs is not None:
        cfg = replace(cfg, n_runs=n_runs)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    results = MonteCarloHarness(manifest, features, cfg, extra_structures=COMPARISON_STRUCTURES).run()
    summary = results.summary()
    rows = [{"structure": name, **metrics} for name, metrics in summary["sub_models"].items()]
    rows.append({"structure": cfg.ensemble.name, **{m: summary["median"][m] for m in METRICS}})
    return pd.DataFrame(rows, columns=["structure", *METRICS]), results


def _report(image_ids: Sequence[str], subjective: np.ndarray, objective: np.ndarray,
            learning_free: bool) -> EvalReport:
    analysis = None
    if len(subjective) >= 5:
        try:
            analysis = analyse_outliers(subjective, objective)
        except DegenerateInput as e:
            logger.warning(f"No logistic mapping for this report: {e}")
    if learning_free and analysis is None:
        raise DegenerateInput("Learning-free scores need a logistic mapping (>= 5 non-constant points)")

    mapped = analysis.mapped if analysis is not None else objective
    accuracy_input = mapped if learning_free else objective
    return EvalReport(
        srocc=srocc(objective, subjective),
        plcc=plcc(accuracy_input, subjective),
        rmse=rmse(accuracy_input, subjective),
        n_test=len(subjective),
        outlier_ratio=analysis.ratio if analysis is not None else None,
        logistic=analysis.fit.params if analysis is not None else None,
        band_sigma=analysis.sigma if analysis is not None else None,
        per_image=[
            PerImageScore(i, float(s), float(o), float(m))
            for i, s, o, m in zip(image_ids, subjective, objective, mapped)
        ],
    )


def evaluate_scores(manifest: DatasetManifest, objective: Mapping[str, float],
                    learning_free: bool = True) -> EvalReport:
    """Score an external prediction file against the manifest's subjective scores.

    Learning-free scores are mapped through the logistic curve before PLCC/RMSE;
    learning-based ones are scored raw.
    """
    entries = manifest.active_entries()
    missing = [e.image_id for e in entries if e.image_id not in objective]
    if missing:
        raise MissingFeatures(missing[0])
    ids = [e.image_id for e in entries]
    return _report(
        ids,
        np.array([e.score for e in entries]),
        np.array([objective[i] for i in ids], dtype=np.float64),
        learning_free,
    )


def cross_dataset_eval(train_manifest: DatasetManifest, test_manifest: DatasetManifest,
                       features: Mapping[str, FeatureSet], cfg: HarnessConfig,
                       test_features: Optional[Mapping[str, FeatureSet]] = None) -> EvalReport:
    """Train on every usable source image, test on every usable target image."""
    cfg.validate()
    test_features = features if test_features is None else test_features
    model = train_sfa(
        features,
        train_manifest.scores(),
        cfg.plsr,
        structures=cfg.structures,
        ensemble=cfg.ensemble,
        meta={"source": train_manifest.name, "target": test_manifest.name},
    )
    entries = test_manifest.active_entries()
    objective = []
    for entry in entries:
        if entry.image_id not in test_features:
            raise MissingFeatures(entry.image_id)
        objective.append(score_image(model, test_features[entry.image_id]))
    report = _report(
        [e.image_id for e in entries],
        np.array([e.score for e in entries]),
        np.asarray(objective),
        learning_free=False,
    )
    logger.info(f"{train_manifest.name} -> {test_manifest.name}: SROCC {report.srocc:.4f}")
    return report
