import itertools

import numpy as np
import pytest

from fractenna.ga_engine import (GeneticOptimizer, cache_digest, evolve, fitness, mutate, repair,
                                 tournament_select, two_point_crossover)
from fractenna.genome import Chromosome, is_symmetric
from fractenna.geometry import materialize
from fractenna.rf_metrics import gamma_from_return_loss, vswr
from fractenna.schemas import (BandSummary, EvaluationRecord, FitnessSpec, GaConfig, RepairPolicy, Symmetry,
                               TargetMetrics)

WEIGHTS = np.array([0.9, -0.4, 1.3, 0.2, -1.1, 0.7, 0.5, -0.3, 1.0])


def onemax(chrom):
    return float(chrom.popcount)


def smooth_landscape(chrom):
    g = chrom.flat.astype(float)
    return float(WEIGHTS @ g + 0.6 * g[0] * g[8] - 0.5 * g[2] * g[6])


def config(**kwargs):
    defaults = dict(grid_order=5, population_size=20, generations=40, symmetry=Symmetry.NONE, rng_seed=3)
    defaults.update(kwargs)
    return GaConfig(**defaults)


def target(f, rl, gain):
    return TargetMetrics(frequency_hz=f, return_loss_db=rl, vswr=vswr(gamma_from_return_loss(rl)), gain_dbi=gain)


# --- fitness


def test_fitness_of_the_reference_design():
    summary = BandSummary(targets=[target(3.5e9, -12.968, 1.56), target(6.0e9, -12.184, 2.2)])
    assert fitness(summary, FitnessSpec()) == pytest.approx(28.912, abs=1e-9)


def test_vswr_cap_penalty():
    summary = BandSummary(targets=[target(3.5e9, -8.0, 1.0), target(6.0e9, -12.0, 1.0)])
    assert fitness(summary, FitnessSpec()) == pytest.approx(8.0 + 1.0 + 12.0 + 1.0 - 10.0)


def test_invalid_genome_gets_the_big_penalty():
    spec = FitnessSpec()
    assert fitness(None, spec) == -spec.big_penalty
    summary = BandSummary(targets=[target(3.5e9, -20.0, 3.0), target(6.0e9, -20.0, 3.0)])
    assert fitness(summary, spec, valid=False) == -1000.0


def test_total_reflection_without_gain_weight_scores_at_most_zero():
    summary = BandSummary(targets=[target(3.5e9, 0.0, 5.0)])
    spec = FitnessSpec(targets=[3.5e9], gain_weight=0.0)
    assert fitness(summary, spec) <= 0.0


def test_fitness_spec_validation():
    with pytest.raises(ValueError, match="one entry per target"):
        FitnessSpec(rl_weights=[1.0])
    with pytest.raises(ValueError, match="nonzero"):
        FitnessSpec(rl_weights=[0.0, 0.0], gain_weight=0.0)


# --- operators


def test_tournament_prefers_the_fittest():
    rng = np.random.default_rng(0)
    picks = [tournament_select([0.0, 5.0, 1.0, 2.0], 4, rng) for _ in range(200)]
    assert picks.count(1) > 100


def test_two_point_crossover_swaps_one_segment():
    rng = np.random.default_rng(4)
    a, b = np.zeros(10, dtype=np.uint8), np.ones(10, dtype=np.uint8)
    two_point_crossover(a, b, rng)
    assert np.array_equal(a + b, np.ones(10))
    ones = np.flatnonzero(a)
    assert ones.size > 0
    assert np.array_equal(ones, np.arange(ones[0], ones[-1] + 1))


def test_mutation_rate_extremes():
    rng = np.random.default_rng(1)
    bits = np.zeros(50, dtype=np.uint8)
    mutate(bits, 0.0, rng)
    assert not bits.any()
    mutate(bits, 1.0, rng)
    assert bits.all()


# --- repair


def test_connected_genome_is_unchanged(baseline):
    chrom = Chromosome.ones(5)
    assert repair(chrom, baseline) == chrom


def test_diagonal_island_costs_one_flip(baseline):
    genes = np.zeros((5, 5), dtype=np.uint8)
    genes[0:3, 2] = 1
    genes[3, 3] = 1
    fixed = repair(Chromosome(5, genes), baseline)
    assert int((fixed.genes != genes).sum()) == 1
    materialize(fixed, baseline)


def test_island_far_from_the_feed_is_routed(baseline):
    genes = np.zeros((5, 5), dtype=np.uint8)
    genes[4, 4] = 1
    fixed = repair(Chromosome(5, genes), baseline)
    assert fixed.genes[0, 2] == 1
    materialize(fixed, baseline)


def test_reject_policy_leaves_the_genome(baseline):
    chrom = Chromosome.zeros(5)
    assert repair(chrom, baseline, RepairPolicy.REJECT) == chrom


def test_repair_is_idempotent_and_keeps_symmetry(baseline):
    rng = np.random.default_rng(21)
    for _ in range(20):
        raw = Chromosome(9, (rng.random((9, 9)) < 0.6).astype(np.uint8))
        fixed = repair(raw, baseline, symmetry=Symmetry.MIRROR_X)
        assert repair(fixed, baseline, symmetry=Symmetry.MIRROR_X) == fixed
        assert is_symmetric(fixed, Symmetry.MIRROR_X)
        assert np.all(fixed.genes >= raw.genes)
        materialize(fixed, baseline)


# --- optimizer


def test_onemax_reaches_all_ones():
    run = evolve(config(), onemax)
    assert run.best_fitness == 25.0
    assert run.best == Chromosome.ones(5)


def test_best_fitness_never_drops():
    run = evolve(config(generations=15), onemax)
    best = [s.best_fitness for s in run.history]
    assert best == sorted(best)
    assert len(run.history) == 16


def test_population_is_fixed_without_variation():
    cfg = config(crossover_rate=0.0, mutation_rate=0.0, elitism_count=20, generations=5)
    optimizer = GeneticOptimizer(cfg, onemax)
    run = optimizer.start()
    first = sorted(c.to_hex() for c in run.population)
    optimizer.run(run)
    assert sorted(c.to_hex() for c in run.population) == first
    assert len({s.best_fitness for s in run.history}) == 1


def test_each_genome_is_evaluated_once():
    calls = []

    def counting(chrom):
        calls.append(chrom.hash_hex)
        return onemax(chrom)

    run = evolve(config(generations=10), counting)
    assert len(calls) == len(set(calls)) == run.evaluations == len(run.cache)


def test_symmetric_populations():
    run = evolve(config(grid_order=6, symmetry=Symmetry.MIRROR_X, generations=5), onemax)
    assert all(is_symmetric(c, Symmetry.MIRROR_X) for c in run.population)


def test_seed_decides_the_trace():
    a = evolve(config(generations=8), onemax)
    b = evolve(config(generations=8), onemax)
    c = evolve(config(generations=8, rng_seed=4), onemax)
    assert a.history == b.history
    assert [x.to_hex() for x in a.population] == [x.to_hex() for x in b.population]
    assert [x.to_hex() for x in a.population] != [x.to_hex() for x in c.population]


def test_worker_count_does_not_change_the_trace():
    serial = evolve(config(generations=4), onemax, threads=1)
    parallel = evolve(config(generations=4), onemax, threads=2)
    assert serial.history == parallel.history
    assert cache_digest(serial.cache) == cache_digest(parallel.cache)


def test_failing_evaluation_is_marked_invalid():
    def broken(chrom):
        raise RuntimeError("solver exploded")

    run = evolve(config(generations=1), broken, invalid_fitness=-1000.0)
    assert set(run.fitnesses) == {-1000.0}
    assert all(not rec.valid and rec.error == "solver exploded" for rec in run.cache.values())


def test_evaluation_records_pass_through():
    def recorded(chrom):
        return EvaluationRecord(genome_hash=chrom.hash_hex, genome_hex=chrom.to_hex(), grid_order=chrom.n,
                                fitness=-float(chrom.popcount))

    run = evolve(config(generations=2), recorded)
    assert run.best_fitness == max(run.fitnesses)
    assert run.best_record.fitness == run.best_fitness


def test_finds_the_optimum_of_a_small_grid():
    optimum = max(smooth_landscape(Chromosome.from_bits(3, bits)) for bits in itertools.product((0, 1), repeat=9))
    hits = 0
    for seed in range(100):
        run = evolve(config(grid_order=3, population_size=16, generations=20, rng_seed=seed), smooth_landscape)
        hits += run.best_fitness == pytest.approx(optimum, abs=1e-12)
    assert hits >= 95
