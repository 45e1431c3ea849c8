"""Command-line front end: ``sfa <command>``.

Every command writes its artifacts under ``--out`` and records them in
``<out>/index.json`` together with the config hash and seed that produced them.
Errors are reported on stderr as one JSON object and exit with status 1.
"""
import json
import math
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

import click
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger
from tqdm import tqdm

from src.aggregation.aggregators import AggregationKind, parse_structure, structure_name, structure_vector
from src.config.run_config import RunConfig, apply_overrides, config_hash, resolve_config
from src.dataset.feature_file import FEATURE_SUFFIX, FeatureFile, feature_path, write_feature_file
from src.dataset.manifest import (
    DatasetManifest, apply_exclusions, load_exclusions, load_manifest, load_metadata,
)
from src.errors import (
    ConfigInvalid, DegenerateInput, ParseError, SfaError, TooManyComponents, UpstreamArtifactMissing,
)
from src.evaluation.harness import (
    MonteCarloHarness, compare_structures, cross_dataset_eval, evaluate_scores, ratio_sweep,
)
from src.features.backend import FeatureExtractor, FeatureSet, extract_plan, from_file
from src.features.image import load_image
from src.layout.patch_grid import ImageDims, PatchSpec, RepresentationMode, compute_grid, represent
from src.pipeline.sfa_model import (
    design_matrix, load_sfa_model, save_sfa_model, score_image, train_sfa,
)
from src.regression.plsr import select_components
from src.synthetic.corpus import DEFAULT_SIGMAS, generate_corpus
from src.visualization.visualizer import Visualizer

INDEX_FILE = "index.json"
LOG_FILE = "sfa.log"


@dataclass
class CliState:
    config: RunConfig
    jobs: int = 1
    quiet: bool = False

    @property
    def out_dir(self) -> Path:
        return Path(self.config.out_dir)

    @property
    def seed(self) -> int:
        return self.config.harness.seed

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def update(self, **overrides) -> None:
        """Apply command flags on top of the loaded config; flags win."""
        self.config = apply_overrides(self.config, overrides)

    def stamp(self) -> dict:
        """Config hash and seed embedded in every artifact."""
        return {"config_hash": self.config_hash, "seed": self.seed}

    def provenance(self, command: str) -> dict:
        return {
            "command": command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "created_at": datetime.now(timezone.utc).isoformat(),
        }


class SfaGroup(click.Group):
    """Click group that turns package errors into a JSON line on stderr."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except SfaError as e:
            self._fail(ctx, type(e).__name__, e)
        except ValueError as e:
            # Plain validation failures from dataclasses (dims, patch spec, PLSR settings).
            self._fail(ctx, ConfigInvalid.__name__, e)

    @staticmethod
    def _fail(ctx: click.Context, name: str, error: Exception) -> None:
        logger.error(f"{name}: {error}")
        click.echo(json.dumps({"error": name, "message": str(error)}), err=True)
        ctx.exit(1)


def _setup_logging(out_dir: Path, level: str, quiet: bool) -> None:
    logger.remove()
    logger.add(lambda message: sys.stderr.write(message), level="WARNING" if quiet else level.upper())
    logger.add(str(out_dir / LOG_FILE), rotation="1 day", level="DEBUG")


def _write_json(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)


def _write_table(state: CliState, frame: pd.DataFrame, path: Path, command: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.assign(**state.stamp()).to_csv(path, index=False)
    _record(state, path, "table", command)


def _record(state: CliState, path: Path, kind: str, command: str) -> None:
    """Add (or refresh) one artifact entry in the output index."""
    index_path = state.out_dir / INDEX_FILE
    entries = []
    if index_path.exists():
        with open(index_path, "r") as f:
            entries = json.load(f).get("artifacts", [])
    entry = {
        "path": str(path),
        "kind": kind,
        "command": command,
        "config_hash": state.config_hash,
        "seed": state.seed,
    }
    entries = [e for e in entries if e["path"] != entry["path"]] + [entry]
    _write_json(index_path, {"artifacts": entries})


def _structures_option(value: Optional[str]) -> Optional[List[str]]:
    if value is None:
        return None
    names = [v.strip() for v in value.split(",") if v.strip()]
    for name in names:
        _structure(name)
    return names


def _structure(name: str):
    try:
        return parse_structure(name)
    except ValueError as e:
        raise ConfigInvalid(str(e))


def _ratios_option(value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise ConfigInvalid(f"Cannot read ratio list {value!r}")


def _load_dataset(manifest: Optional[str], metadata: Optional[str] = None,
                  exclusions: Optional[str] = None) -> DatasetManifest:
    if manifest is None:
        raise ConfigInvalid("No manifest given; pass --manifest or set dataset.manifest")
    loaded = load_manifest(manifest, load_metadata(metadata) if metadata else None)
    if exclusions:
        loaded = apply_exclusions(loaded, load_exclusions(exclusions))
    return loaded


def _load_features(manifest: DatasetManifest, features_dir: Path,
                   patch_spec: PatchSpec) -> Dict[str, FeatureSet]:
    if not features_dir.is_dir():
        raise UpstreamArtifactMissing(f"Feature directory {features_dir} not found; run `sfa extract` first")
    features = {}
    for entry in manifest.active_entries():
        path = feature_path(features_dir, entry.image_id)
        if not path.exists():
            raise UpstreamArtifactMissing(f"No features for {entry.image_id!r} at {path}; run `sfa extract` first")
        features[entry.image_id] = from_file(path, patch_spec)
    logger.info(f"Loaded features for {len(features)} images from {features_dir}")
    return features


def _features_dir(state: CliState) -> Path:
    configured = state.config.dataset.features_dir
    return Path(configured) if configured else state.out_dir / "features"


def _dataset(state: CliState) -> DatasetManifest:
    ds = state.config.dataset
    return _load_dataset(ds.manifest, ds.metadata, ds.exclusions)


def _fail_on_failed_runs(failed: int, total: int) -> None:
    if failed:
        raise DegenerateInput(f"{failed} of {total} runs had undefined metrics")


@click.group(cls=SfaGroup)
@click.option("--config", "config_path", default=None,
              help="Run config (YAML/JSON path or preset name).")
@click.option("--seed", type=int, default=None, help="Seed for every stochastic step.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker pool size.")
@click.option("--out", "out_dir", default=None, help="Output directory.")
@click.option("--log-level", default="INFO", show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
@click.option("--quiet", is_flag=True, help="Only warnings on stderr; no progress bars.")
@click.pass_context
def cli(ctx: click.Context, config_path, seed, jobs, out_dir, log_level, quiet):
    """SFA-PLSR blur image quality assessment."""
    if jobs == 0:
        raise click.BadParameter("must be non-zero", param_hint="--jobs")
    config = apply_overrides(resolve_config(config_path), {"harness.seed": seed, "out_dir": out_dir})
    state = CliState(config=config, jobs=jobs, quiet=quiet)
    state.out_dir.mkdir(parents=True, exist_ok=True)
    _setup_logging(state.out_dir, log_level, quiet)
    logger.debug(f"Effective config {state.config_hash[:12]}: {config.to_dict()}")
    ctx.obj = state


@cli.command()
@click.argument("image", required=False, type=click.Path())
@click.option("--width", type=int, default=None)
@click.option("--height", type=int, default=None)
@click.option("--patch-size", type=int, default=None)
@click.option("--stride", type=int, default=None)
@click.option("--representation", type=click.Choice([m.value for m in RepresentationMode]), default=None)
@click.pass_obj
def layout(state: CliState, image, width, height, patch_size, stride, representation):
    """Print the patch layout of an image (or of WIDTHxHEIGHT) as JSON."""
    state.update(**{
        "patch.size": patch_size,
        "patch.stride": stride if stride is not None or patch_size is None else max(1, patch_size // 2),
        "patch.representation": representation,
    })
    if image is not None:
        dims = load_image(image).dims
    elif width is not None and height is not None:
        dims = ImageDims(width, height)
    else:
        raise ConfigInvalid("Give an IMAGE or both --width and --height")
    spec = state.config.patch.spec
    mode = RepresentationMode(state.config.patch.representation)
    if mode is RepresentationMode.MULTI_PATCH:
        payload = compute_grid(dims, spec).to_dict()
    else:
        payload = represent(dims, mode, spec).to_dict()
    click.echo(json.dumps(payload, sort_keys=True))


@cli.command()
@click.option("--manifest", default=None, help="Dataset manifest CSV.")
@click.option("--metadata", default=None, help="Dataset sidecar (name, score kind, range).")
@click.option("--features-dir", default=None, help="Where feature files are written.")
@click.option("--patch-size", type=int, default=None)
@click.option("--stride", type=int, default=None)
@click.option("--representation", type=click.Choice([m.value for m in RepresentationMode]), default=None)
@click.pass_obj
def extract(state: CliState, manifest, metadata, features_dir, patch_size, stride, representation):
    """Extract per-patch features for every active image of a manifest."""
    state.update(**{
        "dataset.manifest": manifest,
        "dataset.metadata": metadata,
        "dataset.features_dir": features_dir,
        "patch.size": patch_size,
        "patch.stride": stride if stride is not None or patch_size is None else max(1, patch_size // 2),
        "patch.representation": representation,
    })
    dataset = _dataset(state)
    out = _features_dir(state)
    entries = dataset.active_entries()
    logger.info(f"Extracting {state.config.extractor.extractor_tag} features for {len(entries)} images")

    with FeatureExtractor(state.config.extractor_config()) as extractor:
        def run(entry) -> int:
            fs = extractor.extract_image(entry.image_id, load_image(dataset.resolve(entry)))
            write_feature_file(fs.to_feature_file(state.stamp()), feature_path(out, entry.image_id))
            return fs.n_patches

        progress = tqdm(entries, desc="extract", disable=state.quiet)
        if state.jobs == 1:
            patches = [run(entry) for entry in progress]
        else:
            patches = Parallel(n_jobs=state.jobs, prefer="threads")(delayed(run)(e) for e in progress)

    summary_path = state.out_dir / "extract.json"
    _write_json(summary_path, {
        "dataset": dataset.name,
        "n_images": len(entries),
        "n_patches": int(sum(patches)),
        "features_dir": str(out),
        "extractor": state.config.extractor_config().to_dict(),
        "provenance": state.provenance("extract"),
    })
    _record(state, out, "features", "extract")
    _record(state, summary_path, "report", "extract")
    logger.info(f"Wrote {len(entries)} feature files to {out}")


@cli.command()
@click.option("--features-dir", default=None, help="Per-patch feature files to aggregate.")
@click.option("--kind", "kind_name", default=AggregationKind.MEAN_STD.value, show_default=True,
              help="Aggregation kind or '+'-joined structure, e.g. moment+quantile.")
@click.option("--output-dir", default=None, help="Defaults to <out>/aggregated/<kind>.")
@click.pass_obj
def aggregate(state: CliState, features_dir, kind_name, output_dir):
    """Aggregate every feature file into one vector, stored in the same container."""
    state.update(**{"dataset.features_dir": features_dir})
    structure = _structure(kind_name)
    source = _features_dir(state)
    paths = sorted(source.glob(f"*{FEATURE_SUFFIX}"))
    if not paths:
        raise UpstreamArtifactMissing(f"No feature files in {source}; run `sfa extract` first")
    target = Path(output_dir) if output_dir else state.out_dir / "aggregated" / structure_name(structure)

    for path in tqdm(paths, desc="aggregate", disable=state.quiet):
        fs = from_file(path, state.config.patch.spec)
        vector = structure_vector(fs, structure)
        write_feature_file(FeatureFile(
            image_id=fs.image_id,
            extractor_tag=fs.config.extractor_tag,
            layer_tag=fs.config.layer_tag,
            n_patches=1,
            dim=vector.size,
            values=vector,
            kind=structure_name(structure),
            provenance=state.stamp(),
        ), feature_path(target, fs.image_id))
    _record(state, target, "aggregates", "aggregate")
    logger.info(f"Aggregated {len(paths)} feature files with {structure_name(structure)} into {target}")


@cli.command()
@click.option("--manifest", default=None)
@click.option("--metadata", default=None)
@click.option("--exclusions", default=None, help="File of image ids to leave out.")
@click.option("--features-dir", default=None)
@click.option("--components", type=int, default=None, help="PLSR latent components p.")
@click.option("--select-components", "select_flag", is_flag=True,
              help="Pick p by k-fold cross-validation over the configured candidates.")
@click.option("--structures", default=None, help="Comma-separated feature structures.")
@click.option("--ensemble", default=None, help="average_quality or one structure name.")
@click.option("--model-out", default=None, help="Defaults to <out>/model.json.")
@click.pass_obj
def train(state: CliState, manifest, metadata, exclusions, features_dir, components,
          select_flag, structures, ensemble, model_out):
    """Train one PLSR model per structure on every active image."""
    state.update(**{
        "dataset.manifest": manifest,
        "dataset.metadata": metadata,
        "dataset.exclusions": exclusions,
        "dataset.features_dir": features_dir,
        "plsr.n_components": components,
        "harness.structures": _structures_option(structures),
        "harness.ensemble": ensemble,
    })
    dataset = _dataset(state)
    features = _load_features(dataset, _features_dir(state), state.config.patch.spec)
    scores = dataset.scores()
    plsr_cfg = state.config.plsr_config()
    provenance = state.provenance("train")

    if select_flag:
        ids = list(scores)
        X = design_matrix(features, ids, (AggregationKind.MEAN_STD,))
        k = state.config.plsr.k_folds
        limit = min(len(ids) - math.ceil(len(ids) / k) - 1, X.shape[1])
        candidates = [c for c in state.config.plsr.candidates if c <= limit]
        if not candidates:
            raise TooManyComponents(f"No component candidate fits {len(ids)} images and {X.shape[1]} features")
        skipped = sorted(set(state.config.plsr.candidates) - set(candidates))
        if skipped:
            logger.warning(f"Skipping component candidates {skipped}: above the feasible maximum {limit}")
        chosen = select_components(X, [scores[i] for i in ids], candidates, k, state.seed, plsr_cfg)
        plsr_cfg = state.config.plsr_config(chosen)
        provenance["component_selection"] = {"candidates": candidates, "k_folds": k, "selected": chosen}

    harness = state.config.harness_config(n_jobs=state.jobs)
    model = train_sfa(features, scores, plsr_cfg, structures=harness.structures,
                      ensemble=harness.ensemble, meta=provenance, n_jobs=state.jobs)
    path = Path(model_out) if model_out else state.out_dir / "model.json"
    save_sfa_model(model, path)
    _record(state, path, "model", "train")
    logger.info(f"Trained {len(model.models)} sub-models with p={plsr_cfg.n_components}; saved {path}")


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.argument("inputs", nargs=-1, required=True, type=click.Path())
@click.pass_obj
def predict(state: CliState, model_path, inputs):
    """Score feature files (.sfaf) or images; one JSON line per input."""
    if not Path(model_path).exists():
        raise UpstreamArtifactMissing(f"Model {model_path} not found; run `sfa train` first")
    model = load_sfa_model(model_path)
    extractor = None
    try:
        for item in inputs:
            path = Path(item)
            if path.suffix == FEATURE_SUFFIX:
                fs = from_file(path, model.patch_spec)
            else:
                if extractor is None:
                    extractor = FeatureExtractor(model.extractor_cfg)
                image = load_image(path)
                fs = extract_plan(image, extractor.plan(image), model.extractor_cfg,
                                  extractor.adapter, image_id=path.stem)
            click.echo(json.dumps({"image_id": fs.image_id, "score": score_image(model, fs)}))
    finally:
        if extractor is not None:
            extractor.close()


@cli.command()
@click.option("--manifest", default=None)
@click.option("--metadata", default=None)
@click.option("--exclusions", default=None)
@click.option("--scores", "scores_path", default=None, type=click.Path(),
              help="CSV image_id,score from a learning-free method.")
@click.option("--model", "model_path", default=None, type=click.Path(), help="Trained model JSON.")
@click.option("--features-dir", default=None)
@click.pass_obj
def evaluate(state: CliState, manifest, metadata, exclusions, scores_path, model_path, features_dir):
    """Evaluate a score file (logistic-mapped) or a trained model (raw) on a manifest."""
    if (scores_path is None) == (model_path is None):
        raise ConfigInvalid("Give exactly one of --scores or --model")
    state.update(**{
        "dataset.manifest": manifest,
        "dataset.metadata": metadata,
        "dataset.exclusions": exclusions,
        "dataset.features_dir": features_dir,
    })
    dataset = _dataset(state)
    if scores_path is not None:
        if not Path(scores_path).exists():
            raise UpstreamArtifactMissing(f"Score file {scores_path} not found")
        frame = pd.read_csv(scores_path, dtype={"image_id": str})
        if not {"image_id", "score"} <= set(frame.columns):
            raise ParseError(f"{scores_path} needs image_id and score columns", line=1)
        try:
            values = frame["score"].astype(float)
        except ValueError as e:
            raise ParseError(f"Non-numeric score in {scores_path}: {e}")
        objective = dict(zip(frame["image_id"], values))
        report = evaluate_scores(dataset, objective, learning_free=True)
    else:
        if not Path(model_path).exists():
            raise UpstreamArtifactMissing(f"Model {model_path} not found; run `sfa train` first")
        model = load_sfa_model(model_path)
        features = _load_features(dataset, _features_dir(state), model.patch_spec)
        objective = {i: score_image(model, fs) for i, fs in features.items()}
        report = evaluate_scores(dataset, objective, learning_free=False)

    report_path = state.out_dir / "evaluate.json"
    scatter_path = state.out_dir / "evaluate_scatter.csv"
    _write_json(report_path, {"dataset": dataset.name, **report.to_dict(),
                              "provenance": state.provenance("evaluate")})
    _write_table(state, report.scatter_frame(), scatter_path, "evaluate")
    _record(state, report_path, "report", "evaluate")
    click.echo(json.dumps({"srocc": report.srocc, "plcc": report.plcc, "rmse": report.rmse}))


@cli.command()
@click.option("--manifest", default=None)
@click.option("--metadata", default=None)
@click.option("--exclusions", default=None)
@click.option("--features-dir", default=None)
@click.option("--runs", type=int, default=None, help="Number of Monte-Carlo runs.")
@click.option("--ratio", type=float, default=None, help="Fraction of contents used for training.")
@click.option("--components", type=int, default=None)
@click.option("--structures", default=None)
@click.option("--ensemble", default=None)
@click.pass_obj
def montecarlo(state: CliState, manifest, metadata, exclusions, features_dir, runs, ratio,
               components, structures, ensemble):
    """Repeated content-disjoint train/test evaluation."""
    state.update(**{
        "dataset.manifest": manifest,
        "dataset.metadata": metadata,
        "dataset.exclusions": exclusions,
        "dataset.features_dir": features_dir,
        "harness.n_runs": runs,
        "harness.train_ratio": ratio,
        "plsr.n_components": components,
        "harness.structures": _structures_option(structures),
        "harness.ensemble": ensemble,
    })
    dataset = _dataset(state)
    features = _load_features(dataset, _features_dir(state), state.config.patch.spec)
    results = MonteCarloHarness(dataset, features,
                                state.config.harness_config(state.jobs, not state.quiet)).run()

    runs_path = state.out_dir / "montecarlo_runs.csv"
    summary_path = state.out_dir / "montecarlo_summary.json"
    _write_table(state, results.frame(), runs_path, "montecarlo")
    summary = results.summary()
    _write_json(summary_path, {"dataset": dataset.name, **summary,
                               "provenance": state.provenance("montecarlo")})
    _record(state, summary_path, "report", "montecarlo")
    click.echo(json.dumps(summary["median"], sort_keys=True))
    _fail_on_failed_runs(results.failed_runs, results.total_runs)


@cli.command()
@click.option("--train-manifest", required=True)
@click.option("--train-features", required=True)
@click.option("--test-manifest", required=True)
@click.option("--test-features", required=True)
@click.option("--test-exclusions", default=None, help="Ids to drop from the target dataset.")
@click.option("--components", type=int, default=None)
@click.option("--structures", default=None)
@click.option("--ensemble", default=None)
@click.pass_obj
def crosseval(state: CliState, train_manifest, train_features, test_manifest, test_features,
              test_exclusions, components, structures, ensemble):
    """Train on one whole dataset and test on another."""
    state.update(**{
        "plsr.n_components": components,
        "harness.structures": _structures_option(structures),
        "harness.ensemble": ensemble,
    })
    source = _load_dataset(train_manifest)
    target = _load_dataset(test_manifest, exclusions=test_exclusions)
    spec = state.config.patch.spec
    report = cross_dataset_eval(
        source, target,
        _load_features(source, Path(train_features), spec),
        state.config.harness_config(state.jobs, not state.quiet),
        test_features=_load_features(target, Path(test_features), spec),
    )
    report_path = state.out_dir / "crosseval.json"
    scatter_path = state.out_dir / "crosseval_scatter.csv"
    _write_json(report_path, {"source": source.name, "target": target.name, **report.to_dict(),
                              "provenance": state.provenance("crosseval")})
    _write_table(state, report.scatter_frame(), scatter_path, "crosseval")
    _record(state, report_path, "report", "crosseval")
    click.echo(json.dumps({"srocc": report.srocc, "plcc": report.plcc, "rmse": report.rmse}))


@cli.command()
@click.option("--manifest", default=None)
@click.option("--metadata", default=None)
@click.option("--exclusions", default=None)
@click.option("--features-dir", default=None)
@click.option("--ratios", default=None, help="Comma-separated training ratios.")
@click.option("--runs", type=int, default=None, help="Monte-Carlo runs per ratio.")
@click.option("--components", type=int, default=None)
@click.pass_obj
def sweep(state: CliState, manifest, metadata, exclusions, features_dir, ratios, runs, components):
    """Monte-Carlo evaluation at every training ratio."""
    state.update(**{
        "dataset.manifest": manifest,
        "dataset.metadata": metadata,
        "dataset.exclusions": exclusions,
        "dataset.features_dir": features_dir,
        "harness.ratios": _ratios_option(ratios),
        "harness.n_runs": runs,
        "plsr.n_components": components,
    })
    dataset = _dataset(state)
    features = _load_features(dataset, _features_dir(state), state.config.patch.spec)
    table = ratio_sweep(dataset, features, state.config.harness_config(state.jobs, not state.quiet),
                        ratios=state.config.harness.ratios)

    table_path = state.out_dir / "sweep.csv"
    meta_path = state.out_dir / "sweep.json"
    _write_table(state, table, table_path, "sweep")
    _write_json(meta_path, {"dataset": dataset.name, "rows": table.to_dict(orient="records"),
                            "provenance": state.provenance("sweep")})
    _record(state, meta_path, "report", "sweep")
    _fail_on_failed_runs(int(table["failed_runs"].sum()), int(table["n_runs"].sum()))


@cli.command()
@click.option("--manifest", default=None)
@click.option("--metadata", default=None)
@click.option("--exclusions", default=None)
@click.option("--features-dir", default=None)
@click.option("--runs", type=int, default=None)
@click.option("--ratio", type=float, default=None)
@click.option("--components", type=int, default=None)
@click.pass_obj
def compare(state: CliState, manifest, metadata, exclusions, features_dir, runs, ratio, components):
    """Median metrics of every feature structure and the ensemble on shared splits."""
    state.update(**{
        "dataset.manifest": manifest,
        "dataset.metadata": metadata,
        "dataset.exclusions": exclusions,
        "dataset.features_dir": features_dir,
        "harness.n_runs": runs,
        "harness.train_ratio": ratio,
        "plsr.n_components": components,
    })
    dataset = _dataset(state)
    features = _load_features(dataset, _features_dir(state), state.config.patch.spec)
    table, results = compare_structures(dataset, features,
                                        state.config.harness_config(state.jobs, not state.quiet))

    table_path = state.out_dir / "compare.csv"
    runs_path = state.out_dir / "compare_runs.csv"
    _write_table(state, table, table_path, "compare")
    _write_table(state, results.frame(), runs_path, "compare")
    click.echo(table.to_string(index=False))
    _fail_on_failed_runs(results.failed_runs, results.total_runs)


@cli.command()
@click.option("--runs-csv", default=None, type=click.Path(exists=True), help="Per-run Monte-Carlo table.")
@click.option("--sweep-csv", default=None, type=click.Path(exists=True))
@click.option("--scatter-csv", default=None, type=click.Path(exists=True))
@click.pass_obj
def plot(state: CliState, runs_csv, sweep_csv, scatter_csv):
    """Render PNG plots from harness tables."""
    if not (runs_csv or sweep_csv or scatter_csv):
        raise ConfigInvalid("Give at least one of --runs-csv, --sweep-csv, --scatter-csv")
    visualizer = Visualizer(
        runs=pd.read_csv(runs_csv) if runs_csv else None,
        sweep=pd.read_csv(sweep_csv) if sweep_csv else None,
        scatter=pd.read_csv(scatter_csv) if scatter_csv else None,
    )
    plot_dir = state.out_dir / "plots"
    plot_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if runs_csv:
        written.append(plot_dir / "srocc_distribution.png")
        visualizer.plot_srocc_distribution(str(written[-1]))
    if sweep_csv:
        written.append(plot_dir / "ratio_sweep.png")
        visualizer.plot_ratio_sweep(str(written[-1]))
    if scatter_csv:
        written.append(plot_dir / "scatter_band.png")
        visualizer.plot_scatter_band(str(written[-1]))
    written.append(plot_dir / "dashboard.png")
    visualizer.create_summary_dashboard(str(written[-1]))
    for path in written:
        _record(state, path, "plot", "plot")
    logger.info(f"Wrote {len(written)} plots to {plot_dir}")


@cli.command()
@click.option("--contents", type=int, default=50, show_default=True, help="Number of scenes.")
@click.option("--sigmas", default=",".join(str(s) for s in DEFAULT_SIGMAS), show_default=True,
              help="Comma-separated Gaussian blur sigmas.")
@click.option("--size", type=int, default=64, show_default=True, help="Image side in pixels.")
@click.option("--output-dir", default=None, help="Defaults to <out>/corpus.")
@click.pass_obj
def synth(state: CliState, contents, sigmas, size, output_dir):
    """Generate a synthetic blur corpus with a manifest."""
    try:
        sigma_values = [float(s) for s in sigmas.split(",") if s.strip()]
    except ValueError:
        raise ConfigInvalid(f"Cannot read sigma list {sigmas!r}")
    target = Path(output_dir) if output_dir else state.out_dir / "corpus"
    if contents < 1 or size < 2 or not sigma_values or any(s < 0 for s in sigma_values):
        raise ConfigInvalid(f"Need contents >= 1, size >= 2 and non-negative sigmas; "
                            f"got {contents}, {size}, {sigma_values}")
    manifest_path = generate_corpus(target, contents, sigma_values, size, state.seed)
    _record(state, manifest_path, "manifest", "synth")
    click.echo(str(manifest_path))


def main() -> None:
    cli(prog_name="sfa")


if __name__ == "__main__":
    main()
