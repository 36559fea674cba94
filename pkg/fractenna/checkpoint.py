"""Checkpoint / resume of an OptimizationRun as a versioned JSON document.

The document holds no timestamps or wall times, so checkpointing the same
state twice gives identical files.
"""
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from .exceptions import CheckpointError
from .ga_engine import OptimizationRun, cache_digest
from .genome import Chromosome
from .schemas import EvaluationRecord, GaConfig, GenerationStats


CHECKPOINT_FORMAT = "fractenna-checkpoint"
CHECKPOINT_VERSION = 1


class CheckpointDoc(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    format: Literal["fractenna-checkpoint"] = CHECKPOINT_FORMAT
    version: int = CHECKPOINT_VERSION
    config: GaConfig
    generation: int
    grid_order: int
    rng_state: Dict[str, Any]
    population: List[str]
    fitnesses: List[float]
    history: List[GenerationStats]
    evaluations: int
    cache_digest: str
    cache: List[EvaluationRecord]


def to_document(run: OptimizationRun) -> CheckpointDoc:
    return CheckpointDoc(
        config=run.config,
        generation=run.generation,
        grid_order=run.config.grid_order,
        rng_state=run.rng.bit_generator.state,
        population=[c.to_hex() for c in run.population],
        fitnesses=list(run.fitnesses),
        history=list(run.history),
        evaluations=run.evaluations,
        cache_digest=cache_digest(run.cache),
        cache=[run.cache[h] for h in sorted(run.cache)],
    )


def dumps(run: OptimizationRun) -> str:
    doc = to_document(run)
    return doc.model_dump_json(indent=2, exclude={"cache": {"__all__": {"wall_time_s"}}}) + "\n"


def checkpoint(run: OptimizationRun, path: Union[str, Path]) -> None:
    """Atomic write: temp file in the same directory, then rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps(run), encoding="utf-8")
    os.replace(tmp, path)
    logging.debug(f"檢查點已寫入 {path} (第 {run.generation} 代)")


def resume(path: Union[str, Path]) -> OptimizationRun:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        raw = CheckpointDoc.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ()))
        if where in ("format", "version"):
            raise CheckpointError(f"{path}: unsupported checkpoint {where}: {first.get('input')!r} "
                                  f"(expected {CHECKPOINT_FORMAT} version {CHECKPOINT_VERSION})") from e
        raise CheckpointError(f"{path}: corrupt checkpoint ({where}: {first.get('msg')})") from e
    if raw.version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: checkpoint version {raw.version} does not match "
                              f"supported version {CHECKPOINT_VERSION}")

    cache = {rec.genome_hash: rec for rec in raw.cache}
    if cache_digest(cache) != raw.cache_digest:
        raise CheckpointError(f"{path}: evaluation cache digest mismatch")
    try:
        population = [Chromosome.from_hex(raw.grid_order, h) for h in raw.population]
        bit_generator = np.random.PCG64()
        bit_generator.state = raw.rng_state
    except (ValueError, TypeError, KeyError) as e:
        raise CheckpointError(f"{path}: corrupt checkpoint ({e})") from e
    if len(population) != len(raw.fitnesses):
        raise CheckpointError(f"{path}: population and fitness lists differ in length")

    logging.info(f"從檢查點恢復: 第 {raw.generation} 代, 快取 {len(cache)} 筆")
    return OptimizationRun(config=raw.config, generation=raw.generation, population=population,
                           fitnesses=list(raw.fitnesses), history=list(raw.history),
                           rng=np.random.Generator(bit_generator), cache=cache,
                           evaluations=raw.evaluations)
