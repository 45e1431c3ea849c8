"""Tests for dataset manifests and exclusion lists."""
import json

import pytest

from src.dataset.manifest import (
    DatasetManifest, ImageEntry, ScoreKind, apply_exclusions, load_exclusions,
    load_manifest, load_metadata, write_manifest,
)
from src.errors import DuplicateImageId, MissingFile, ParseError, ScoreOutOfRange


def write_dataset(directory, rows, header="image_id,path,score,content_id",
                  metadata=None):
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / "manifest.csv"
    csv_path.write_text("\n".join([header] + rows) + "\n")
    with open(directory / "manifest.json", "w") as f:
        json.dump(metadata or {"name": "toy", "score_kind": "MOS", "score_range": [0, 5]}, f)
    return csv_path


@pytest.fixture
def toy_manifest(tmp_path):
    """Three rows, two contents."""
    return write_dataset(tmp_path / "toy", [
        "a,img/a.pgm,4.5,c1",
        "b,img/b.pgm,2.0,c1",
        "c,img/c.pgm,3.25,c2",
    ])


def test_load_manifest(toy_manifest):
    """Test loading a well-formed manifest."""
    manifest = load_manifest(toy_manifest)

    assert manifest.name == "toy"
    assert manifest.score_kind is ScoreKind.MOS
    assert manifest.score_range == (0.0, 5.0)
    assert [e.image_id for e in manifest.entries] == ["a", "b", "c"]
    assert manifest.scores() == {"a": 4.5, "b": 2.0, "c": 3.25}
    assert list(manifest.content_groups()) == ["c1", "c2"]
    assert manifest.resolve(manifest.entry("a")) == toy_manifest.parent / "img" / "a.pgm"


def test_missing_content_id_column_makes_each_image_its_own_content(tmp_path):
    """Realistic databases have no reference images."""
    path = write_dataset(tmp_path, ["x,x.pgm,1.0", "y,y.pgm,2.0"], header="image_id,path,score")
    manifest = load_manifest(path)

    assert [e.content_id for e in manifest.entries] == ["x", "y"]
    assert len(manifest.content_groups()) == 2


def test_tid_style_manifest_groups_contents(tmp_path):
    """100 blur images over 25 reference contents."""
    rows = [f"i{c:02d}_{k},i{c:02d}_{k}.bmp,{1.0 + k},r{c:02d}" for c in range(25) for k in range(4)]
    path = write_dataset(tmp_path, rows, metadata={"name": "tid", "score_kind": "MOS",
                                                   "score_range": [0, 9]})
    manifest = load_manifest(path)

    assert len(manifest) == 100
    assert len(manifest.content_groups()) == 25


def test_manifest_errors(tmp_path):
    """Test that invalid rows reject the whole manifest."""
    with pytest.raises(ScoreOutOfRange) as excinfo:
        load_manifest(write_dataset(tmp_path / "range", ["a,a.pgm,7.2,c1"]))
    assert excinfo.value.image_id == "a"

    with pytest.raises(DuplicateImageId):
        load_manifest(write_dataset(tmp_path / "dup", ["a,a.pgm,1,c1", "a,b.pgm,2,c2"]))

    with pytest.raises(ParseError) as excinfo:
        load_manifest(write_dataset(tmp_path / "nan", ["a,a.pgm,1,c1", "b,b.pgm,good,c1"]))
    assert excinfo.value.line == 3

    with pytest.raises(ParseError) as excinfo:
        load_manifest(write_dataset(tmp_path / "cols", ["a,a.pgm,1,c1,x"],
                                    header="image_id,path,score,content_id,colour"))
    assert excinfo.value.line == 1

    with pytest.raises(ParseError):
        load_manifest(write_dataset(tmp_path / "empty_path", ["a,,1,c1"]))

    with pytest.raises(MissingFile):
        load_manifest(tmp_path / "nowhere.csv")


def test_dmos_direction_is_kept(tmp_path):
    """DMOS scores are stored as given."""
    path = write_dataset(tmp_path, ["a,a.pgm,80,c1"], metadata={
        "name": "live", "score_kind": "dmos", "score_range": [0, 100]})
    manifest = load_manifest(path)

    assert manifest.score_kind is ScoreKind.DMOS
    assert manifest.scores() == {"a": 80.0}


def test_yaml_sidecar(tmp_path):
    """Metadata may also come from a YAML file."""
    path = tmp_path / "meta.yaml"
    path.write_text("name: bid\nscore_kind: MOS\nscore_range: [0, 5]\n")
    metadata = load_metadata(path)

    assert metadata.name == "bid"
    assert metadata.score_range == (0.0, 5.0)


def test_exclusions(tmp_path, toy_manifest):
    """Excluded images stay in the manifest but leave the active set."""
    exclusions = tmp_path / "exclude.txt"
    exclusions.write_text("# overlap with the training set\nb\n\nmissing-id\n")
    manifest = apply_exclusions(load_manifest(toy_manifest), load_exclusions(exclusions))

    assert len(manifest) == 3
    assert [e.image_id for e in manifest.active_entries()] == ["a", "c"]
    assert manifest.scores() == {"a": 4.5, "c": 3.25}
    assert list(manifest.content_groups(include_excluded=True)["c1"])[1].excluded


def test_excluded_column(tmp_path):
    """The optional excluded column is read as a boolean."""
    path = write_dataset(tmp_path, ["a,a.pgm,1,c1,false", "b,b.pgm,2,c2,true"],
                         header="image_id,path,score,content_id,excluded")
    manifest = load_manifest(path)

    assert [e.image_id for e in manifest.active_entries()] == ["a"]


def test_write_manifest_round_trip(tmp_path):
    """Writing then loading preserves every entry."""
    manifest = DatasetManifest(
        name="written", score_kind=ScoreKind.MOS, score_range=(0.0, 5.0),
        entries=[
            ImageEntry("a", "a.pgm", 1.0 / 3.0, "c1"),
            ImageEntry("b", "b.pgm", 4.0, "c2", excluded=True),
        ],
    )
    write_manifest(manifest, tmp_path / "out" / "manifest.csv")
    loaded = load_manifest(tmp_path / "out" / "manifest.csv")

    assert loaded.entries == manifest.entries
    assert loaded.name == "written"
