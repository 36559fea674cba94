import json

import pytest

from fractenna.checkpoint import checkpoint, dumps, resume
from fractenna.exceptions import CheckpointError
from fractenna.ga_engine import GeneticOptimizer
from fractenna.schemas import GaConfig, Symmetry


def weighted(chrom):
    return float(sum((i + 1) * int(b) for i, b in enumerate(chrom.flat)) % 17)


CONFIG = GaConfig(grid_order=4, population_size=8, generations=6, symmetry=Symmetry.NONE, rng_seed=12)


def test_checkpointing_twice_gives_identical_files(tmp_path):
    optimizer = GeneticOptimizer(CONFIG, weighted)
    run = optimizer.step(optimizer.start())
    checkpoint(run, tmp_path / "a.ckpt")
    checkpoint(run, tmp_path / "b.ckpt")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()
    assert not (tmp_path / "a.ckpt.tmp").exists()
    doc = json.loads((tmp_path / "a.ckpt").read_text(encoding="utf-8"))
    assert doc["format"] == "fractenna-checkpoint" and doc["version"] == 1
    assert all("wall_time_s" not in rec for rec in doc["cache"])


def test_resume_continues_the_same_trace(tmp_path):
    straight = GeneticOptimizer(CONFIG, weighted)
    full = straight.run(straight.start())

    optimizer = GeneticOptimizer(CONFIG, weighted)
    run = optimizer.start()
    optimizer.step(run)
    optimizer.step(run)
    checkpoint(run, tmp_path / "run.ckpt")

    resumed = resume(tmp_path / "run.ckpt")
    assert resumed.generation == 2
    GeneticOptimizer(resumed.config, weighted).run(resumed)
    assert resumed.history == full.history
    assert [c.to_hex() for c in resumed.population] == [c.to_hex() for c in full.population]
    assert dumps(resumed) == dumps(full)


def test_missing_checkpoint(tmp_path):
    with pytest.raises(CheckpointError, match="not found"):
        resume(tmp_path / "nope.ckpt")


def test_version_mismatch(tmp_path):
    optimizer = GeneticOptimizer(CONFIG, weighted)
    path = tmp_path / "run.ckpt"
    checkpoint(optimizer.start(), path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    doc["version"] = 2
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(CheckpointError, match="version 2"):
        resume(path)


def test_tampered_cache_is_detected(tmp_path):
    optimizer = GeneticOptimizer(CONFIG, weighted)
    path = tmp_path / "run.ckpt"
    checkpoint(optimizer.start(), path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    doc["cache"][0]["fitness"] += 1.0
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(CheckpointError, match="digest"):
        resume(path)


def test_corrupt_checkpoint(tmp_path):
    path = tmp_path / "run.ckpt"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(CheckpointError, match="corrupt"):
        resume(path)
