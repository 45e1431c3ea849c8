"""Run configuration loading and validation for SFA experiments."""
import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml

from src.aggregation.aggregators import Structure, parse_structure, structure_name
from src.errors import ConfigInvalid, MissingFile
from src.evaluation.harness import DEFAULT_RATIOS, HarnessConfig
from src.features.backend import BackendKind, ExtractorConfig
from src.layout.patch_grid import DEFAULT_PATCH_SIZE, PatchSpec, RepresentationMode
from src.pipeline.sfa_model import AVERAGE_QUALITY, DEFAULT_STRUCTURES, EnsembleRule
from src.regression.plsr import DEFAULT_CANDIDATES, DEFAULT_COMPONENTS, PlsrConfig

PRESETS_DIR = Path(__file__).parent / "data"


def _check_keys(section: str, data: Mapping, allowed) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigInvalid(f"Unknown key(s) in {section}: {', '.join(unknown)}")


@dataclass
class DatasetConfig:
    manifest: Optional[str] = None
    metadata: Optional[str] = None
    exclusions: Optional[str] = None
    features_dir: Optional[str] = None

    @classmethod
    def from_dict(cls, data: dict) -> 'DatasetConfig':
        _check_keys("dataset", data, ("manifest", "metadata", "exclusions", "features_dir"))
        return cls(
            manifest=data.get('manifest'),
            metadata=data.get('metadata'),
            exclusions=data.get('exclusions'),
            features_dir=data.get('features_dir'),
        )

    def validate(self, check_paths: bool = False) -> None:
        """Validate dataset paths; existence is only checked on request."""
        if not check_paths:
            return
        for label in ("manifest", "metadata", "exclusions"):
            value = getattr(self, label)
            if value is not None and not Path(value).exists():
                raise MissingFile(f"Configured {label} not found: {value}")


@dataclass
class PatchConfig:
    size: int = DEFAULT_PATCH_SIZE
    stride: Optional[int] = None
    representation: str = RepresentationMode.MULTI_PATCH.value

    @classmethod
    def from_dict(cls, data: dict) -> 'PatchConfig':
        _check_keys("patch", data, ("size", "stride", "representation"))
        return cls(
            size=int(data.get('size', DEFAULT_PATCH_SIZE)),
            stride=None if data.get('stride') is None else int(data['stride']),
            representation=str(data.get('representation', RepresentationMode.MULTI_PATCH.value)),
        )

    def validate(self) -> None:
        if self.size < 1:
            raise ConfigInvalid(f"Patch size must be positive, got {self.size}")
        if self.stride is not None and not 1 <= self.stride <= self.size:
            raise ConfigInvalid(f"Stride must lie in [1, {self.size}], got {self.stride}")
        modes = [m.value for m in RepresentationMode]
        if self.representation not in modes:
            raise ConfigInvalid(f"Representation must be one of {modes}, got {self.representation!r}")

    @property
    def spec(self) -> PatchSpec:
        return PatchSpec(patch_size=self.size, stride=self.stride)


@dataclass
class ExtractorSettings:
    backend: str = BackendKind.BUILTIN_LOW_LEVEL.value
    extractor_tag: str = "builtin-lowlevel-v1"
    layer_tag: str = "patch-stats"
    dim: int = 12
    command: List[str] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: dict) -> 'ExtractorSettings':
        _check_keys("extractor", data, ("backend", "extractor_tag", "layer_tag", "dim", "command"))
        command = data.get('command') or []
        if isinstance(command, str):
            command = command.split()
        return cls(
            backend=str(data.get('backend', BackendKind.BUILTIN_LOW_LEVEL.value)),
            extractor_tag=str(data.get('extractor_tag', "builtin-lowlevel-v1")),
            layer_tag=str(data.get('layer_tag', "patch-stats")),
            dim=int(data.get('dim', 12)),
            command=[str(c) for c in command],
        )

    def validate(self) -> None:
        backends = [b.value for b in BackendKind]
        if self.backend not in backends:
            raise ConfigInvalid(f"Backend must be one of {backends}, got {self.backend!r}")
        if self.backend == BackendKind.EXTERNAL_MODEL.value and not self.command:
            raise ConfigInvalid("The external backend needs a model command")


@dataclass
class PlsrSettings:
    n_components: int = DEFAULT_COMPONENTS
    candidates: List[int] = field(default_factory=lambda: list(DEFAULT_CANDIDATES))
    k_folds: int = 5
    max_inner_iterations: int = 500
    convergence_tol: float = 1e-10

    @classmethod
    def from_dict(cls, data: dict) -> 'PlsrSettings':
        _check_keys("plsr", data, ("n_components", "candidates", "k_folds",
                                   "max_inner_iterations", "convergence_tol"))
        return cls(
            n_components=int(data.get('n_components', DEFAULT_COMPONENTS)),
            candidates=[int(c) for c in data.get('candidates', DEFAULT_CANDIDATES)],
            k_folds=int(data.get('k_folds', 5)),
            max_inner_iterations=int(data.get('max_inner_iterations', 500)),
            convergence_tol=float(data.get('convergence_tol', 1e-10)),
        )

    def validate(self) -> None:
        if self.n_components < 1:
            raise ConfigInvalid(f"n_components must be positive, got {self.n_components}")
        if not self.candidates or any(c < 1 for c in self.candidates):
            raise ConfigInvalid(f"Component candidates must be positive integers, got {self.candidates}")
        if self.k_folds < 2:
            raise ConfigInvalid(f"k_folds must be at least 2, got {self.k_folds}")
        if self.max_inner_iterations < 1:
            raise ConfigInvalid(f"max_inner_iterations must be positive, got {self.max_inner_iterations}")
        if not self.convergence_tol > 0:
            raise ConfigInvalid(f"convergence_tol must be positive, got {self.convergence_tol}")


@dataclass
class HarnessSettings:
    n_runs: int = 1000
    train_ratio: float = 0.8
    seed: int = 0
    ratios: List[float] = field(default_factory=lambda: list(DEFAULT_RATIOS))
    structures: List[str] = field(
        default_factory=lambda: [structure_name(s) for s in DEFAULT_STRUCTURES]
    )
    ensemble: str = AVERAGE_QUALITY
    outlier_ratio: bool = True

    @classmethod
    def from_dict(cls, data: dict) -> 'HarnessSettings':
        _check_keys("harness", data, ("n_runs", "train_ratio", "seed", "ratios",
                                      "structures", "ensemble", "outlier_ratio"))
        return cls(
            n_runs=int(data.get('n_runs', 1000)),
            train_ratio=float(data.get('train_ratio', 0.8)),
            seed=int(data.get('seed', 0)),
            ratios=[float(r) for r in data.get('ratios', DEFAULT_RATIOS)],
            structures=[str(s) for s in data.get('structures',
                                                 [structure_name(s) for s in DEFAULT_STRUCTURES])],
            ensemble=str(data.get('ensemble', AVERAGE_QUALITY)),
            outlier_ratio=bool(data.get('outlier_ratio', True)),
        )

    def validate(self) -> None:
        if self.n_runs < 1:
            raise ConfigInvalid(f"n_runs must be positive, got {self.n_runs}")
        if not 0 < self.train_ratio < 1:
            raise ConfigInvalid(f"train_ratio must lie in (0, 1), got {self.train_ratio}")
        if self.seed < 0:
            raise ConfigInvalid(f"seed must be non-negative, got {self.seed}")
        if not all(0 < r < 1 for r in self.ratios):
            raise ConfigInvalid(f"Sweep ratios must lie in (0, 1), got {self.ratios}")
        if not self.structures:
            raise ConfigInvalid("At least one aggregation structure is required")
        try:
            structures = self.parsed_structures()
            rule = EnsembleRule.parse(self.ensemble)
        except ValueError as e:
            raise ConfigInvalid(str(e))
        if rule.single is not None and rule.single not in structures:
            raise ConfigInvalid(f"Ensemble structure {self.ensemble!r} is not among {self.structures}")

    def parsed_structures(self) -> List[Structure]:
        return [parse_structure(s) for s in self.structures]


@dataclass
class RunConfig:
    name: str = "default"
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    patch: PatchConfig = field(default_factory=PatchConfig)
    extractor: ExtractorSettings = field(default_factory=ExtractorSettings)
    plsr: PlsrSettings = field(default_factory=PlsrSettings)
    harness: HarnessSettings = field(default_factory=HarnessSettings)
    out_dir: str = "output"

    @classmethod
    def from_dict(cls, data: dict) -> 'RunConfig':
        _check_keys("run config", data, ("name", "dataset", "patch", "extractor",
                                         "plsr", "harness", "out_dir"))
        return cls(
            name=str(data.get('name', "default")),
            dataset=DatasetConfig.from_dict(data.get('dataset') or {}),
            patch=PatchConfig.from_dict(data.get('patch') or {}),
            extractor=ExtractorSettings.from_dict(data.get('extractor') or {}),
            plsr=PlsrSettings.from_dict(data.get('plsr') or {}),
            harness=HarnessSettings.from_dict(data.get('harness') or {}),
            out_dir=str(data.get('out_dir', "output")),
        )

    def validate(self, check_paths: bool = False) -> None:
        """Validate the complete run configuration."""
        self.dataset.validate(check_paths)
        self.patch.validate()
        self.extractor.validate()
        self.plsr.validate()
        self.harness.validate()
        try:
            self.extractor_config().validate()
        except ValueError as e:
            raise ConfigInvalid(str(e))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dataset": vars(self.dataset).copy(),
            "patch": vars(self.patch).copy(),
            "extractor": {**vars(self.extractor), "command": list(self.extractor.command)},
            "plsr": {**vars(self.plsr), "candidates": list(self.plsr.candidates)},
            "harness": {
                **vars(self.harness),
                "ratios": list(self.harness.ratios),
                "structures": list(self.harness.structures),
            },
            "out_dir": self.out_dir,
        }

    def extractor_config(self) -> ExtractorConfig:
        return ExtractorConfig(
            backend=BackendKind(self.extractor.backend),
            extractor_tag=self.extractor.extractor_tag,
            layer_tag=self.extractor.layer_tag,
            dim=self.extractor.dim,
            patch_spec=self.patch.spec,
            representation=RepresentationMode(self.patch.representation),
            external_command=tuple(self.extractor.command),
        )

    def plsr_config(self, n_components: Optional[int] = None) -> PlsrConfig:
        return PlsrConfig(
            n_components=n_components or self.plsr.n_components,
            max_inner_iterations=self.plsr.max_inner_iterations,
            convergence_tol=self.plsr.convergence_tol,
        )

    def harness_config(self, n_jobs: int = 1, progress: bool = True) -> HarnessConfig:
        return HarnessConfig(
            n_runs=self.harness.n_runs,
            train_ratio=self.harness.train_ratio,
            seed=self.harness.seed,
            plsr=self.plsr_config(),
            structures=self.harness.parsed_structures(),
            ensemble=EnsembleRule.parse(self.harness.ensemble),
            with_outlier_ratio=self.harness.outlier_ratio,
            n_jobs=n_jobs,
            progress=progress,
        )


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the canonical JSON of the effective configuration."""
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def apply_overrides(config: RunConfig, overrides: Mapping[str, Any]) -> RunConfig:
    """Return a copy with dotted-key overrides applied, e.g. {"harness.seed": 7}.

    ``None`` values are skipped so unset CLI flags leave the config untouched.
    """
    data = copy.deepcopy(config.to_dict())
    for key, value in overrides.items():
        if value is None:
            continue
        *parents, leaf = key.split(".")
        node = data
        for part in parents:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigInvalid(f"Unknown config section in override {key!r}")
            node = node[part]
        if leaf not in node:
            raise ConfigInvalid(f"Unknown config key in override {key!r}")
        node[leaf] = value
    updated = RunConfig.from_dict(data)
    updated.validate()
    return updated


def load_run_config(config_path: Union[str, Path]) -> RunConfig:
    """Load a run configuration from a YAML or JSON file."""
    config_path = Path(config_path)
    if not config_path.exists():
        raise MissingFile(f"Config not found: {config_path}")

    with open(config_path, 'r') as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigInvalid(f"Invalid YAML in config {config_path}: {e}")

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigInvalid(f"Config {config_path} must hold a mapping")
    try:
        config = RunConfig.from_dict(data)
        config.validate()
        return config
    except ConfigInvalid as e:
        raise ConfigInvalid(f"Invalid run configuration in {config_path}: {e}")
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigInvalid(f"Invalid run configuration in {config_path}: {e}")


def load_preset(name: str) -> RunConfig:
    """Load one of the bundled presets by file stem (e.g. ``bid``)."""
    path = PRESETS_DIR / f"{name}.yaml"
    if not path.exists():
        available = ", ".join(list_presets())
        raise ConfigInvalid(f"Unknown preset {name!r}; available: {available}")
    return load_run_config(path)


def list_presets() -> List[str]:
    return sorted(p.stem for p in PRESETS_DIR.glob("*.yaml"))


def resolve_config(config: Optional[str]) -> RunConfig:
    """A file path, a preset name, or the defaults when nothing is given."""
    if config is None:
        return RunConfig()
    if Path(config).exists():
        return load_run_config(config)
    if config in list_presets():
        return load_preset(config)
    raise MissingFile(f"Config not found: {config}")
