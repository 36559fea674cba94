"""Genome and layout evaluators used by the CLI and the GA.

`simulate_layout` runs one full FDTD evaluation. The two evaluator classes
turn a Chromosome into an EvaluationRecord; both are plain picklable objects
so the GA can ship them to worker processes.
"""
import hashlib
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import config
from .exceptions import FractennaError
from .fdtd import (GaussianPulse, PortPlacement, PortRecord, check_resolution, grid_for_layout,
                   rasterize, run_simulation)
from .ga_engine import fitness
from .genome import Chromosome
from .geometry import materialize
from .ntff import GainPattern, far_field_gain
from .rf_metrics import FrequencyResponse, accepted_power, extract_response, summarize_bands
from .schemas import (AntennaLayout, BandSummary, EvaluationRecord, FitnessSpec, GridSpec,
                      SolverParams)
from .surrogate import surrogate_gain, surrogate_response


def sweep_frequencies(params: SolverParams) -> np.ndarray:
    count = int(round((params.sweep_stop - params.sweep_start) / params.sweep_step)) + 1
    return params.sweep_start + params.sweep_step * np.arange(count)


def solver_grid(layout: AntennaLayout, params: SolverParams) -> GridSpec:
    preset = config.GRID_PRESETS[params.preset]
    cell = params.cell_size or preset["cell"]
    n_steps = params.n_steps or preset["n_steps"]
    return grid_for_layout(layout, cell, n_steps, params.cfl_factor, params.pml_layers)


@dataclass
class SimulationResult:
    layout: AntennaLayout
    response: FrequencyResponse
    summary: BandSummary
    pattern: Optional[GainPattern] = None
    record: Optional[PortRecord] = None
    grid: Optional[GridSpec] = None


def simulate_layout(layout: AntennaLayout, params: SolverParams, targets: Sequence[float],
                    baseline: Optional[BandSummary] = None,
                    dump_path: Optional[Union[str, Path]] = None) -> SimulationResult:
    """One FDTD run: S11 over the sweep, gain pattern at the targets, band summary."""
    grid = solver_grid(layout, params)
    check_resolution(grid, layout.substrate.eps_r, params.sweep_stop)
    material = rasterize(layout, grid, source_frequency=params.pulse_center)
    port = PortPlacement.at_feed(layout, grid, material)
    pulse = GaussianPulse(params.pulse_center, params.pulse_bandwidth)
    targets = [float(t) for t in targets]

    record, surface = run_simulation(material, grid, port, frequencies=targets, pulse=pulse,
                                     dump_path=dump_path if params.dump_fields else None)
    response = extract_response(record, sweep_frequencies(params))

    power = accepted_power(record, targets)
    pattern = None
    gains = {t: -math.inf for t in targets}
    if surface is not None and np.all(power > 0):
        pattern = far_field_gain(surface, power)
        gains = {t: pattern.peak_at(t) for t in targets}
    else:
        logging.warning("埠接受功率非正, 增益記為 -inf")

    summary = summarize_bands(response, gains, targets, baseline)
    return SimulationResult(layout, response, summary, pattern, record, grid)


def surrogate_result(chromosome: Chromosome, base: AntennaLayout, params: SolverParams,
                     targets: Sequence[float], baseline: Optional[BandSummary] = None) -> SimulationResult:
    """Same shape as simulate_layout, from the analytic cavity surrogate."""
    layout = materialize(chromosome, base)
    response = surrogate_response(chromosome, base, sweep_frequencies(params))
    gains = surrogate_gain(chromosome, base, response, targets)
    summary = summarize_bands(response, gains, targets, baseline)
    return SimulationResult(layout, response, summary)


def evaluation_scope(kind: str, base: AntennaLayout, spec: FitnessSpec, params: SolverParams) -> str:
    """Digest of everything a stored fitness depends on besides the genome."""
    digest = hashlib.sha256(kind.encode("utf-8"))
    for model in (base, spec, params):
        digest.update(model.model_dump_json().encode("utf-8"))
    return digest.hexdigest()[:16]


class _Evaluator:
    kind = ""

    def __init__(self, base: AntennaLayout, spec: FitnessSpec, params: SolverParams):
        self.base = base
        self.spec = spec
        self.params = params

    @property
    def scope(self) -> str:
        return evaluation_scope(self.kind, self.base, self.spec, self.params)

    def summarize(self, chromosome: Chromosome) -> BandSummary:
        raise NotImplementedError

    def __call__(self, chromosome: Chromosome) -> EvaluationRecord:
        start = time.perf_counter()
        summary, error = None, None
        try:
            summary = self.summarize(chromosome)
        except FractennaError as e:
            logging.info(f"基因組 {chromosome.hash_hex} 無效: {e}")
            error = str(e)
        valid = summary is not None
        return EvaluationRecord(genome_hash=chromosome.hash_hex, genome_hex=chromosome.to_hex(),
                                grid_order=chromosome.n, fitness=fitness(summary, self.spec, valid),
                                valid=valid, summary=summary, error=error,
                                wall_time_s=time.perf_counter() - start)


class SurrogateEvaluator(_Evaluator):
    kind = "surrogate"

    def summarize(self, chromosome: Chromosome) -> BandSummary:
        return surrogate_result(chromosome, self.base, self.params, self.spec.targets).summary


class FdtdEvaluator(_Evaluator):
    kind = "fdtd"

    def summarize(self, chromosome: Chromosome) -> BandSummary:
        layout = materialize(chromosome, self.base)
        return simulate_layout(layout, self.params, self.spec.targets).summary
