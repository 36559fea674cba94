import csv
from pathlib import Path

import click

from ..exceptions import MissingArtifactError
from ..geometry import copper_area
from ..rf_metrics import compare
from ..touchstone import read_sweep_csv
from ..utils.artifacts import read_layout, read_summary, sweep_path, write_text
from ..utils.markdown_utils import comparison_block
from .deps import handle_errors


DESIGNS = ("baseline", "best")
PLOTS = {"rl_vs_freq.csv": ("s11_db", "rl_db"), "vswr_vs_freq.csv": ("vswr", "vswr")}


def write_plot_csv(path: Path, column: str, header: str, sweeps: dict) -> None:
    """Long format: one row per design and frequency."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["design", "freq_hz", header])
        for design in DESIGNS:
            for row in sweeps[design]:
                writer.writerow([design, f"{row['freq_hz']:.9g}", f"{row[column]:.9g}"])


def build_report(run_dir: Path) -> str:
    summaries = {d: read_summary(run_dir / d) for d in DESIGNS}
    layouts = {d: read_layout(run_dir / d) for d in DESIGNS}
    sweeps = {}
    for design in DESIGNS:
        path = sweep_path(run_dir / design)
        try:
            sweeps[design] = read_sweep_csv(path)
        except (ValueError, KeyError) as e:
            raise MissingArtifactError(f"unreadable artifact {path}: {e}") from e

    compared = compare(summaries["best"], summaries["baseline"])
    table = comparison_block(summaries["baseline"], compared,
                             copper_area(layouts["baseline"]), copper_area(layouts["best"]))
    write_text(run_dir / "comparison.md", table)
    for name, (column, header) in PLOTS.items():
        write_plot_csv(run_dir / name, column, header, sweeps)
    return table


@click.command("report")
@click.argument("run_dir", type=click.Path(file_okay=False, path_type=Path))
@handle_errors
def command(run_dir: Path) -> None:
    """Baseline vs best comparison and plot data of a finished optimize run."""
    click.echo(build_report(run_dir), nl=False)
