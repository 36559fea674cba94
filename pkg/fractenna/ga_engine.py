"""Generational genetic algorithm over pixel chromosomes.

Selection, crossover and mutation draw from one numpy Generator in a fixed
order; evaluation results are keyed by population index, so the genome
sequence depends only on the seed and never on evaluator concurrency.
"""
import hashlib
import logging
import math
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from .config import FITNESS_BIG_PENALTY, GAIN_FLOOR_DBI
from .genome import Chromosome, expand, free_gene_count, reduce, symmetrize_or
from .geometry import feed_attached_pixels, pixel_copper
from .schemas import (AntennaLayout, BandSummary, EvaluationRecord, FitnessSpec, GaConfig,
                      GenerationStats, RepairPolicy, Symmetry)


FitnessFn = Callable[[Chromosome], Union[float, EvaluationRecord]]


# --- fitness --------------------------------------------------------------

def fitness(summary: Optional[BandSummary], spec: FitnessSpec, valid: bool = True) -> float:
    """Weighted -RL plus weighted gain, minus the VSWR-cap and invalid-genome penalties."""
    if not valid or summary is None:
        return -spec.big_penalty
    total = 0.0
    over_cap = False
    for target, weight in zip(spec.targets, spec.weights):
        row = summary.at(target)
        rl = max(row.return_loss_db, spec.rl_floor_db)
        gain = row.gain_dbi if math.isfinite(row.gain_dbi) else GAIN_FLOOR_DBI
        total += weight * (-rl) + spec.gain_weight * max(gain, GAIN_FLOOR_DBI)
        over_cap = over_cap or row.vswr > spec.vswr_cap
    if over_cap:
        total -= spec.penalty
    return total


# --- repair ---------------------------------------------------------------

_NEIGHBOURS = ((-1, 0), (0, -1), (0, 1), (1, 0))


def _cheapest_path(allowed: np.ndarray, copper: np.ndarray, sources: np.ndarray,
                   target: np.ndarray) -> Optional[np.ndarray]:
    """0-1 BFS: entering a copper pixel costs 0, a removed pixel 1."""
    n_rows, n_cols = allowed.shape
    dist = np.full(allowed.shape, np.iinfo(np.int64).max, dtype=np.int64)
    parent: Dict[tuple, Optional[tuple]] = {}
    queue = deque()
    starts = [tuple(p) for p in np.argwhere(sources & allowed)]
    for p in [p for p in starts if copper[p]] + [p for p in starts if not copper[p]]:
        dist[p] = 0 if copper[p] else 1
        parent[p] = None
        queue.append(p)
    while queue:
        node = queue.popleft()
        if target[node]:
            path = np.zeros(allowed.shape, dtype=bool)
            while node is not None:
                path[node] = True
                node = parent[node]
            return path
        i, j = node
        for di, dj in _NEIGHBOURS:
            nb = (i + di, j + dj)
            if not (0 <= nb[0] < n_rows and 0 <= nb[1] < n_cols) or not allowed[nb]:
                continue
            w = 0 if copper[nb] else 1
            if dist[node] + w < dist[nb]:
                dist[nb] = dist[node] + w
                parent[nb] = node
                if w == 0:
                    queue.appendleft(nb)
                else:
                    queue.append(nb)
    return None


def _reconnect(genes: np.ndarray, allowed: np.ndarray, attached: np.ndarray) -> np.ndarray:
    genes = genes.copy()
    copper = (genes == 1) & allowed
    while True:
        labels, count = ndimage.label(copper)
        if count == 0:
            return genes
        touching = np.unique(labels[attached & copper])
        touching = touching[touching > 0]
        if touching.size == 0:
            # nothing reaches the feed: route the first island (row-major) to the junction
            sources, target = attached, labels == 1
        elif count == 1:
            return genes
        else:
            main = int(touching[0])
            other = next(label for label in range(1, count + 1) if label != main)
            sources, target = labels == main, labels == other
        path = _cheapest_path(allowed, copper, sources, target)
        if path is None:
            return genes
        flips = path & (genes == 0)
        logging.debug(f"修復: 翻轉 {int(flips.sum())} 個像素以連接孤島")
        genes[path] = 1
        copper |= path


def repair(chromosome: Chromosome, base: AntennaLayout, policy: RepairPolicy = RepairPolicy.RECONNECT,
           symmetry: Symmetry = Symmetry.NONE) -> Chromosome:
    """Joins every copper island to the feed-attached component along cheapest pixel paths.

    With symmetry the result is closed under the mirror images; connectivity and
    symmetry are re-applied until neither changes the genome.
    """
    if policy == RepairPolicy.REJECT:
        return chromosome
    n = chromosome.n
    allowed = pixel_copper(base, n)
    attached = feed_attached_pixels(base, n) & allowed
    current = chromosome
    while True:
        fixed = Chromosome(n, _reconnect(current.genes, allowed, attached))
        if symmetry != Symmetry.NONE:
            fixed = symmetrize_or(fixed, symmetry)
        if fixed == current:
            return current
        current = fixed


# --- operators ------------------------------------------------------------

def tournament_select(fitnesses: Sequence[float], size: int, rng: np.random.Generator) -> int:
    """Best of `size` draws with replacement; ties go to the lowest index."""
    picks = rng.integers(0, len(fitnesses), size=size)
    return int(min(picks, key=lambda i: (-fitnesses[i], i)))


def two_point_crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> None:
    """Swaps the segment between two cut points in place."""
    length = a.size
    if length < 2:
        return
    lo, hi = np.sort(rng.choice(np.arange(1, length + 1), size=2, replace=False)) if length > 2 else (1, 2)
    segment = a[lo:hi].copy()
    a[lo:hi] = b[lo:hi]
    b[lo:hi] = segment


def mutate(bits: np.ndarray, rate: float, rng: np.random.Generator) -> None:
    flips = rng.random(bits.size) < rate
    bits ^= flips.astype(bits.dtype)


# --- run state ------------------------------------------------------------

def cache_digest(cache: Dict[str, EvaluationRecord]) -> str:
    lines = sorted(f"{h}:{rec.fitness!r}" for h, rec in cache.items())
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()


@dataclass
class OptimizationRun:
    config: GaConfig
    generation: int
    population: List[Chromosome]
    fitnesses: List[float]
    history: List[GenerationStats]
    rng: np.random.Generator
    cache: Dict[str, EvaluationRecord] = field(default_factory=dict)
    evaluations: int = 0

    @property
    def best_index(self) -> int:
        return min(range(len(self.fitnesses)), key=lambda i: (-self.fitnesses[i], i))

    @property
    def best(self) -> Chromosome:
        return self.population[self.best_index]

    @property
    def best_fitness(self) -> float:
        return self.fitnesses[self.best_index]

    @property
    def best_record(self) -> Optional[EvaluationRecord]:
        return self.cache.get(self.best.hash_hex)

    @property
    def finished(self) -> bool:
        return self.generation >= self.config.generations


def _evaluate_one(fitness_fn: FitnessFn, invalid_fitness: float, chromosome: Chromosome) -> EvaluationRecord:
    start = time.perf_counter()
    try:
        result = fitness_fn(chromosome)
    except Exception as e:
        logging.error(f"評估失敗 {chromosome.hash_hex}: {e}")
        return EvaluationRecord(genome_hash=chromosome.hash_hex, genome_hex=chromosome.to_hex(),
                                grid_order=chromosome.n, fitness=invalid_fitness, valid=False,
                                wall_time_s=time.perf_counter() - start, error=str(e))
    if isinstance(result, EvaluationRecord):
        return result
    return EvaluationRecord(genome_hash=chromosome.hash_hex, genome_hex=chromosome.to_hex(),
                            grid_order=chromosome.n, fitness=float(result),
                            wall_time_s=time.perf_counter() - start)


class GeneticOptimizer:
    def __init__(self, config: GaConfig, fitness_fn: FitnessFn, base: Optional[AntennaLayout] = None,
                 threads: int = 1, store=None,
                 on_generation: Optional[Callable[[OptimizationRun], None]] = None,
                 invalid_fitness: float = -FITNESS_BIG_PENALTY):
        self.config = config
        self.fitness_fn = fitness_fn
        self.base = base
        self.threads = max(int(threads), 1)
        self.store = store
        self.on_generation = on_generation
        self.invalid_fitness = invalid_fitness

    # --- helpers

    def _finish(self, chromosome: Chromosome) -> Chromosome:
        cfg = self.config
        if cfg.symmetry != Symmetry.NONE:
            chromosome = symmetrize_or(chromosome, cfg.symmetry)
        if self.base is not None:
            chromosome = repair(chromosome, self.base, cfg.repair_policy, cfg.symmetry)
        return chromosome

    def _random_genome(self, rng: np.random.Generator) -> Chromosome:
        cfg = self.config
        count = free_gene_count(cfg.grid_order, cfg.symmetry)
        bits = (rng.random(count) < cfg.init_one_bias).astype(np.uint8)
        return expand(bits, cfg.grid_order, cfg.symmetry)

    def _evaluate(self, run: OptimizationRun, population: List[Chromosome]) -> List[float]:
        pending: Dict[str, Chromosome] = {}
        for chrom in population:
            h = chrom.hash_hex
            if h in run.cache:
                logging.debug(f"快取命中 {h}")
            elif h not in pending:
                pending[h] = chrom
        if pending:
            job = partial(_evaluate_one, self.fitness_fn, self.invalid_fitness)
            chroms = list(pending.values())
            if self.threads > 1 and len(chroms) > 1:
                with ProcessPoolExecutor(max_workers=min(self.threads, len(chroms))) as pool:
                    records = list(pool.map(job, chroms))
            else:
                records = [job(c) for c in chroms]
            for chrom, record in zip(chroms, records):
                run.cache[chrom.hash_hex] = record
                if self.store is not None:
                    self.store.save(record)
            run.evaluations += len(chroms)
        return [run.cache[c.hash_hex].fitness for c in population]

    def _record(self, run: OptimizationRun) -> None:
        stats = GenerationStats(gen=run.generation, best_fitness=run.best_fitness,
                                mean_fitness=float(np.mean(run.fitnesses)),
                                best_genome_hex=run.best.to_hex())
        run.history.append(stats)
        logging.info(f"第 {stats.gen} 代: best={stats.best_fitness:.4f}, mean={stats.mean_fitness:.4f}, "
                     f"累計評估 {run.evaluations} 次")
        if self.on_generation is not None:
            self.on_generation(run)

    # --- public

    def start(self, initial: Optional[Sequence[Chromosome]] = None,
              cache: Optional[Dict[str, EvaluationRecord]] = None) -> OptimizationRun:
        cfg = self.config
        rng = np.random.default_rng(cfg.rng_seed)
        population = []
        for chrom in list(initial or [])[:cfg.population_size]:
            if chrom.n != cfg.grid_order:
                raise ValueError(f"seed genome has order {chrom.n}, expected {cfg.grid_order}")
            population.append(self._finish(chrom))
        while len(population) < cfg.population_size:
            population.append(self._finish(self._random_genome(rng)))
        run = OptimizationRun(config=cfg, generation=0, population=population, fitnesses=[],
                              history=[], rng=rng, cache=dict(cache or {}))
        run.fitnesses = self._evaluate(run, population)
        self._record(run)
        return run

    def step(self, run: OptimizationRun) -> OptimizationRun:
        cfg = self.config
        rng = run.rng
        order = sorted(range(len(run.fitnesses)), key=lambda i: (-run.fitnesses[i], i))
        next_population = [run.population[i] for i in order[:cfg.elitism_count]]

        free = [reduce(c, cfg.symmetry) for c in run.population]
        rate = cfg.effective_mutation_rate
        children: List[np.ndarray] = []
        n_children = cfg.population_size - len(next_population)
        while len(children) < n_children:
            a = tournament_select(run.fitnesses, cfg.tournament_size, rng)
            b = tournament_select(run.fitnesses, cfg.tournament_size, rng)
            child_a, child_b = free[a].copy(), free[b].copy()
            if rng.random() < cfg.crossover_rate:
                two_point_crossover(child_a, child_b, rng)
            mutate(child_a, rate, rng)
            mutate(child_b, rate, rng)
            children.extend((child_a, child_b))
        for bits in children[:n_children]:
            next_population.append(self._finish(expand(bits, cfg.grid_order, cfg.symmetry)))

        run.population = next_population
        run.generation += 1
        run.fitnesses = self._evaluate(run, next_population)
        self._record(run)
        return run

    def run(self, run: OptimizationRun) -> OptimizationRun:
        while not run.finished:
            self.step(run)
        return run


def evolve(config: GaConfig, fitness_fn: FitnessFn, initial: Optional[Sequence[Chromosome]] = None,
           **kwargs) -> OptimizationRun:
    """Runs the GA for config.generations generations after the initial one."""
    optimizer = GeneticOptimizer(config, fitness_fn, **kwargs)
    return optimizer.run(optimizer.start(initial))
