import logging

import click

from .. import config
from ..analytics import design_patch
from ..schemas import DesignInputs
from ..utils.artifacts import atomic_directory, write_manifest
from ..utils.markdown_utils import design_table
from ..utils.units import FREQUENCY, LENGTH
from .deps import CliState, handle_errors, pass_state


@click.command("design")
@click.option("--freq", "f_r", type=FREQUENCY, default=config.DESIGN_FREQUENCY, show_default=True,
              help="Design frequency, e.g. 7GHz or 7e9.")
@click.option("--er", "eps_r", type=float, default=config.FR4_EPS_R, show_default=True,
              help="Substrate relative permittivity.")
@click.option("--h", "height_h", type=LENGTH, default=config.SUBSTRATE_HEIGHT, show_default=True,
              help="Substrate height, e.g. 1.57mm or 1.57e-3.")
@pass_state
@handle_errors
def command(state: CliState, f_r: float, eps_r: float, height_h: float) -> None:
    """Patch width, effective permittivity, length extension and length."""
    inputs = DesignInputs(f_r=f_r, eps_r=eps_r, height_h=height_h)
    cfg = state.run_config()
    dims = design_patch(inputs)
    click.echo(design_table(inputs, dims), nl=False)

    with atomic_directory(cfg.output_dir) as work:
        write_manifest(work, [
            ("command", "design"),
            ("design.f_r", f"{inputs.f_r:.9g}"),
            ("design.eps_r", f"{inputs.eps_r:.9g}"),
            ("design.height_h", f"{inputs.height_h:.9g}"),
            ("design.width_W", f"{dims.width_W:.9g}"),
            ("design.eps_eff", f"{dims.eps_eff:.9g}"),
            ("design.delta_L", f"{dims.delta_L:.9g}"),
            ("design.length_L", f"{dims.length_L:.9g}"),
        ])
    logging.info(f"設計完成: W={dims.width_W * 1e3:.3f} mm, L={dims.length_L * 1e3:.3f} mm")
