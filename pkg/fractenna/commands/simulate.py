import logging
from pathlib import Path
from typing import Optional, Tuple

import click

from ..evaluators import SimulationResult, simulate_layout, surrogate_result
from ..genome import Chromosome, load_genome
from ..geometry import build_fractal_layout, fractal_chromosome, materialize
from ..schemas import AntennaLayout, RunConfig
from ..utils.artifacts import atomic_directory, write_design, write_manifest
from ..utils.markdown_utils import summary_block
from .deps import CliState, base_layout, handle_errors, pass_state


FIELD_DUMP = "fields.fpfd"


def design_chromosome(source: str, cfg: RunConfig, base: AntennaLayout,
                      genome: Optional[Path] = None) -> Chromosome:
    """Pixel encoding of a layout source at the configured grid order."""
    n = cfg.ga.grid_order
    if source == "genome":
        return load_genome(genome)
    if source == "fractal":
        return fractal_chromosome(n, base, cfg.layout.cuts)
    return Chromosome.ones(n)


def design_layout(source: str, cfg: RunConfig, base: AntennaLayout,
                  genome: Optional[Path] = None) -> AntennaLayout:
    if source == "genome":
        return materialize(load_genome(genome), base)
    if source == "fractal":
        return build_fractal_layout(base, cfg.layout.cuts)
    return base


def evaluate_design(source: str, cfg: RunConfig, base: AntennaLayout, surrogate: bool,
                    genome: Optional[Path] = None, dump_dir: Optional[Path] = None) -> SimulationResult:
    targets = cfg.fitness.targets
    if surrogate:
        chrom = design_chromosome(source, cfg, base, genome)
        return surrogate_result(chrom, base, cfg.solver, targets)
    layout = design_layout(source, cfg, base, genome)
    dump = dump_dir / FIELD_DUMP if dump_dir is not None else None
    return simulate_layout(layout, cfg.solver, targets, dump_path=dump)


def _source(layout: str, genome: Optional[Path]) -> Tuple[str, str]:
    if genome is not None:
        return "genome", f"genome {genome.name}"
    return layout, layout


@click.command("simulate")
@click.option("--layout", "layout_kind", type=click.Choice(["baseline", "fractal"]), default="baseline",
              show_default=True, help="Built-in layout to simulate.")
@click.option("--genome", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="Genome file (rows of 0/1, row 0 at the feed edge); overrides --layout.")
@click.option("--surrogate", is_flag=True, help="Use the analytic cavity surrogate instead of FDTD.")
@pass_state
@handle_errors
def command(state: CliState, layout_kind: str, genome: Optional[Path], surrogate: bool) -> None:
    """One evaluation: .s1p, sweep CSV, gain CSV and band summary."""
    cfg = state.run_config()
    source, label = _source(layout_kind, genome)
    base = base_layout(cfg)
    evaluator = "surrogate" if surrogate else "fdtd"
    logging.info(f"模擬 {label} ({evaluator}, preset {cfg.solver.preset})")

    with atomic_directory(cfg.output_dir) as work:
        result = evaluate_design(source, cfg, base, surrogate, genome, work)
        write_design(work, result, comments=["fractenna simulate", f"layout {label}", f"evaluator {evaluator}"])
        write_manifest(work, [
            ("command", "simulate"),
            ("layout", label),
            ("evaluator", evaluator),
            ("solver.preset", cfg.solver.preset),
            ("fitness.targets", [f"{t:.9g}" for t in cfg.fitness.targets]),
        ])
    click.echo(summary_block(result.summary, title=f"{label} ({evaluator})"), nl=False)
