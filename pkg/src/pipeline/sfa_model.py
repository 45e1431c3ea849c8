"""SFA model: one PLSR regressor per aggregation structure plus a score ensemble."""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from src.aggregation.aggregators import (
    AggregationKind, Structure, parse_structure, structure_name, structure_vector,
)
from src.errors import DimensionMismatch, MissingFeatures, TooFewSamples
from src.features.backend import ExtractorConfig, FeatureSet
from src.layout.patch_grid import PatchSpec
from src.regression.plsr import (
    PlsrConfig, PlsrModel, fit, model_from_dict, model_to_dict, predict,
)

SFA_MODEL_VERSION = 1
AVERAGE_QUALITY = "average_quality"

DEFAULT_STRUCTURES: List[Structure] = [
    (AggregationKind.MEAN_STD,),
    (AggregationKind.QUANTILE,),
    (AggregationKind.MOMENT,),
]


@dataclass(frozen=True)
class EnsembleRule:
    """Average of all sub-model scores, or the score of a single structure."""
    single: Optional[Structure] = None

    @property
    def is_average(self) -> bool:
        return self.single is None

    @property
    def name(self) -> str:
        return AVERAGE_QUALITY if self.single is None else structure_name(self.single)

    @classmethod
    def parse(cls, name: str) -> "EnsembleRule":
        if name == AVERAGE_QUALITY:
            return cls()
        return cls(single=parse_structure(name))


@dataclass(frozen=True, eq=False)
class SfaModel:
    aggregators: List[Structure]
    models: List[PlsrModel]
    ensemble: EnsembleRule
    extractor_cfg: ExtractorConfig
    patch_spec: PatchSpec
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.aggregators) != len(self.models):
            raise ValueError(f"{len(self.aggregators)} structures but {len(self.models)} models")
        if self.ensemble.single is not None and self.ensemble.single not in self.aggregators:
            raise ValueError(f"Ensemble structure {self.ensemble.name!r} was not trained")


def design_matrix(features: Mapping[str, FeatureSet], image_ids: Sequence[str],
                  structure: Structure) -> np.ndarray:
    rows = []
    for image_id in image_ids:
        if image_id not in features:
            raise MissingFeatures(image_id)
        rows.append(structure_vector(features[image_id], structure))
    return np.vstack(rows)


def train_sfa(
    features: Mapping[str, FeatureSet],
    scores: Mapping[str, float],
    cfg: PlsrConfig = PlsrConfig(),
    structures: Sequence[Structure] = DEFAULT_STRUCTURES,
    ensemble: EnsembleRule = EnsembleRule(),
    meta: Optional[dict] = None,
    n_jobs: int = 1,
) -> SfaModel:
    """Fit one PLSR model per structure on the images listed in ``scores``."""
    image_ids = list(scores)
    if len(image_ids) < 2:
        raise TooFewSamples(f"Training needs at least 2 images, got {len(image_ids)}")
    missing = [i for i in image_ids if i not in features]
    if missing:
        raise MissingFeatures(missing[0])

    first = features[image_ids[0]]
    dims = {features[i].dim for i in image_ids}
    if len(dims) != 1:
        raise DimensionMismatch(f"Training feature sets disagree on dimension: {sorted(dims)}")

    y = np.array([scores[i] for i in image_ids], dtype=np.float64)
    structures = list(structures)
    provenance = {"n_train": len(image_ids), **(meta or {})}

    def fit_structure(structure: Structure) -> PlsrModel:
        X = design_matrix(features, image_ids, structure)
        logger.debug(f"Fitting {structure_name(structure)} on {X.shape[0]}x{X.shape[1]} design")
        return fit(X, y, cfg, meta={"structure": structure_name(structure), **provenance})

    if n_jobs == 1:
        models = [fit_structure(s) for s in structures]
    else:
        models = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(fit_structure)(s) for s in structures)

    return SfaModel(
        aggregators=structures,
        models=list(models),
        ensemble=ensemble,
        extractor_cfg=first.config,
        patch_spec=first.config.patch_spec,
        provenance=provenance,
    )


def sub_scores(model: SfaModel, fs: FeatureSet) -> Dict[str, float]:
    """Prediction of every sub-model, keyed by structure name."""
    if fs.dim != model.extractor_cfg.dim:
        raise DimensionMismatch(
            f"Model trained on {model.extractor_cfg.dim}-dim features, {fs.image_id!r} has {fs.dim}"
        )
    return {
        structure_name(s): predict(m, structure_vector(fs, s))
        for s, m in zip(model.aggregators, model.models)
    }


def ensemble_score(rule: EnsembleRule, structures: Sequence[Structure],
                   per_structure: Mapping[str, float]) -> float:
    """Arithmetic mean over ``structures`` (average quality) or one structure's score."""
    if rule.is_average:
        values = [per_structure[structure_name(s)] for s in structures]
        return float(sum(values) / len(values))
    return float(per_structure[rule.name])


def combine_scores(model: SfaModel, per_structure: Mapping[str, float]) -> float:
    return ensemble_score(model.ensemble, model.aggregators, per_structure)


def score_image(model: SfaModel, fs: FeatureSet) -> float:
    return combine_scores(model, sub_scores(model, fs))


def sfa_model_to_dict(model: SfaModel) -> dict:
    return {
        "version": SFA_MODEL_VERSION,
        "aggregators": [structure_name(s) for s in model.aggregators],
        "models": [model_to_dict(m) for m in model.models],
        "ensemble": model.ensemble.name,
        "extractor_cfg": model.extractor_cfg.to_dict(),
        "patch_spec": model.patch_spec.to_dict(),
        "provenance": model.provenance,
    }


def sfa_model_from_dict(data: dict) -> SfaModel:
    if data.get("version") != SFA_MODEL_VERSION:
        raise ValueError(f"Unsupported SFA model version {data.get('version')}")
    return SfaModel(
        aggregators=[parse_structure(name) for name in data["aggregators"]],
        models=[model_from_dict(m) for m in data["models"]],
        ensemble=EnsembleRule.parse(data["ensemble"]),
        extractor_cfg=ExtractorConfig.from_dict(data["extractor_cfg"]),
        patch_spec=PatchSpec.from_dict(data["patch_spec"]),
        provenance=dict(data.get("provenance", {})),
    )


def save_sfa_model(model: SfaModel, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(sfa_model_to_dict(model), f, indent=2)


def load_sfa_model(path: Union[str, Path]) -> SfaModel:
    with open(path, "r") as f:
        return sfa_model_from_dict(json.load(f))
