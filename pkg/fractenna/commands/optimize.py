import csv
import logging
import shutil
from pathlib import Path
from typing import List, Optional

import click

from ..checkpoint import checkpoint, resume
from ..database import EvaluationStore
from ..evaluators import FdtdEvaluator, SimulationResult, SurrogateEvaluator, simulate_layout, surrogate_result
from ..ga_engine import GeneticOptimizer, OptimizationRun
from ..genome import Chromosome, dump_genome
from ..geometry import copper_area, fractal_chromosome, materialize
from ..rf_metrics import compare
from ..schemas import AntennaLayout, RunConfig
from ..utils.artifacts import atomic_directory, partial_path, write_design, write_manifest, write_text
from ..utils.markdown_utils import comparison_block
from ..utils.run_config import dump_run_config
from .deps import CliState, base_layout, handle_errors, pass_state


CHECKPOINT = "run.ckpt"
GENERATIONS = "generations.csv"
GENERATION_COLUMNS = ("gen", "best_fitness", "mean_fitness", "best_genome_hex")
COMPARISON = "comparison.md"


def write_generations(path: Path, run: OptimizationRun) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GENERATION_COLUMNS)
        for s in run.history:
            writer.writerow([s.gen, f"{s.best_fitness:.12g}", f"{s.mean_fitness:.12g}", s.best_genome_hex])


def seed_population(cfg: RunConfig, base: AntennaLayout) -> List[Chromosome]:
    """All-ones baseline plus the fractal-cut genome; the rest is drawn at random."""
    n = cfg.ga.grid_order
    seeds = [Chromosome.ones(n)]
    fractal = fractal_chromosome(n, base, cfg.layout.cuts)
    if fractal != seeds[0]:
        seeds.append(fractal)
    return seeds


def _design_result(chrom: Chromosome, cfg: RunConfig, base: AntennaLayout, surrogate: bool) -> SimulationResult:
    if surrogate:
        return surrogate_result(chrom, base, cfg.solver, cfg.fitness.targets)
    return simulate_layout(materialize(chrom, base), cfg.solver, cfg.fitness.targets)


@click.command("optimize")
@click.option("--surrogate", is_flag=True, help="Analytic cavity surrogate fitness instead of FDTD.")
@click.option("--grid", "grid_order", type=int, default=None, help="Pixel grid order n (n x n genes).")
@click.option("--pop", "population", type=int, default=None, help="Population size (even, >= 4).")
@click.option("--gens", "generations", type=int, default=None, help="Generations after the initial one.")
@click.option("--resume", "resume_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Continue from a run.ckpt written by an earlier run.")
@pass_state
@handle_errors
def command(state: CliState, surrogate: bool, grid_order: Optional[int], population: Optional[int],
            generations: Optional[int], resume_path: Optional[Path]) -> None:
    """Genetic optimization of the patch pixels toward the target bands."""
    cfg = state.run_config(**{"ga.grid_order": grid_order, "ga.population_size": population,
                              "ga.generations": generations})
    base = base_layout(cfg)
    out = Path(cfg.output_dir)

    run: Optional[OptimizationRun] = None
    if resume_path is not None:
        run = resume(resume_path)
        if generations is not None:
            run.config = run.config.model_copy(update={"generations": generations})
        cfg = cfg.model_copy(update={"ga": run.config})
        logging.info(f"從第 {run.generation} 代繼續, 目標 {run.config.generations} 代")
    else:
        stale = partial_path(out)
        if stale.exists():
            logging.warning(f"移除上次未完成的輸出 {stale}")
            shutil.rmtree(stale)

    evaluator_cls = SurrogateEvaluator if surrogate else FdtdEvaluator
    evaluator = evaluator_cls(base, cfg.fitness, cfg.solver)
    evaluator_name = evaluator.kind

    with atomic_directory(out, keep_partial=True) as work:
        store = EvaluationStore.open(work, scope=evaluator.scope)
        logging.debug(f"評估快取範圍 {store.scope}")
        try:
            if run is not None:
                for h, record in store.load_all().items():
                    if record.grid_order == run.config.grid_order:
                        run.cache.setdefault(h, record)

            def on_generation(current: OptimizationRun) -> None:
                write_generations(work / GENERATIONS, current)
                checkpoint(current, work / CHECKPOINT)

            optimizer = GeneticOptimizer(cfg.ga, evaluator, base=base, threads=cfg.threads, store=store,
                                         on_generation=on_generation,
                                         invalid_fitness=-cfg.fitness.big_penalty)
            if run is None:
                run = optimizer.start(seed_population(cfg, base))
            else:
                on_generation(run)
            optimizer.run(run)
        finally:
            store.close()

        baseline = _design_result(Chromosome.ones(cfg.ga.grid_order), cfg, base, surrogate)
        best = _design_result(run.best, cfg, base, surrogate)
        compared = compare(best.summary, baseline.summary)
        best.summary = compared
        comments = ["fractenna optimize", f"evaluator {evaluator_name}", f"seed {cfg.ga.rng_seed}"]
        write_design(work / "baseline", baseline, comments + ["design baseline"])
        write_design(work / "best", best, comments + [f"design best {run.best.hash_hex}"])
        write_text(work / "best" / "genome.txt", dump_genome(run.best))

        table = comparison_block(baseline.summary, compared, copper_area(baseline.layout), copper_area(best.layout))
        write_text(work / COMPARISON, table)
        write_text(work / "config.txt", dump_run_config(cfg))
        write_manifest(work, [
            ("command", "optimize"),
            ("evaluator", evaluator_name),
            ("ga.rng_seed", cfg.ga.rng_seed),
            ("ga.generations", run.generation),
            ("ga.evaluations", run.evaluations),
            ("best.genome_hash", run.best.hash_hex),
            ("best.fitness", f"{run.best_fitness:.12g}"),
        ])

    click.echo(f"best fitness {run.best_fitness:.6f} after {run.generation} generations "
               f"({run.evaluations} evaluations)")
    click.echo(table, nl=False)
