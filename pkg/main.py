# -*- coding: utf-8 -*-
import logging
from pathlib import Path

import click

from fractenna import __version__
from fractenna.commands import design as design_command
from fractenna.commands import optimize as optimize_command
from fractenna.commands import report as report_command
from fractenna.commands import simulate as simulate_command
from fractenna.commands.deps import CliState
from fractenna.config import GRID_PRESETS


@click.group()
@click.version_option(__version__, prog_name="fractenna")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Run config file (dotted keys, SI units).")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Output directory.")
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None, help="GA random seed.")
@click.option("--threads", type=click.IntRange(1), default=None, help="Concurrent evaluators.")
@click.option("--preset", type=click.Choice(sorted(GRID_PRESETS)), default=None, help="FDTD grid preset.")
@click.option("-v", "--verbose", count=True, help="More logging.")
@click.option("-q", "--quiet", is_flag=True, help="Warnings and errors only.")
@click.pass_context
def cli(ctx: click.Context, config_path, out, seed, threads, preset, verbose, quiet) -> None:
    """Pixelated fractal patch antenna design, FDTD simulation and GA optimization."""
    if quiet:
        logging.getLogger().setLevel(logging.WARNING)
    elif verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    ctx.obj = CliState(config_path=config_path, out=out, seed=seed, threads=threads, preset=preset,
                       verbosity=-1 if quiet else verbose)


# 掛載各子命令
cli.add_command(design_command.command)
cli.add_command(simulate_command.command)
cli.add_command(optimize_command.command)
cli.add_command(report_command.command)


if __name__ == "__main__":
    cli()
