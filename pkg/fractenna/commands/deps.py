"""Shared pieces for the subcommands: global options, config resolution, error exits."""
import functools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

import click
from pydantic import ValidationError

from ..analytics import patch_from_geometry
from ..exceptions import FractennaError
from ..geometry import build_baseline_layout, table_i_stairs
from ..schemas import AntennaLayout, FeedSpec, GroundSpec, RunConfig
from ..utils.run_config import load_run_config


EXIT_USAGE = 2


@dataclass
class CliState:
    config_path: Optional[Path] = None
    out: Optional[Path] = None
    seed: Optional[int] = None
    threads: Optional[int] = None
    preset: Optional[str] = None
    verbosity: int = 0

    def run_config(self, **extra: Any) -> RunConfig:
        overrides: Dict[str, Any] = {
            "output_dir": str(self.out) if self.out is not None else None,
            "ga.rng_seed": self.seed,
            "threads": self.threads,
            "solver.preset": self.preset,
            "verbosity": self.verbosity,
        }
        overrides.update(extra)
        return load_run_config(self.config_path, overrides)


pass_state = click.make_pass_decorator(CliState, ensure=True)


def handle_errors(func):
    """Turns library errors into the documented exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except FractennaError as e:
            logging.error(f"{type(e).__name__}: {e}")
            click.echo(f"error: {e}", err=True)
            ctx.exit(e.exit_code)
        except ValidationError as e:
            first = e.errors()[0]
            msg = first.get("msg", str(e))
            if msg.startswith("Value error, "):
                msg = msg[len("Value error, "):]
            click.echo(f"error: {msg}", err=True)
            ctx.exit(EXIT_USAGE)

    return wrapper


def base_layout(cfg: RunConfig) -> AntennaLayout:
    """Unoptimized layout described by the run config."""
    lp = cfg.layout
    patch = patch_from_geometry(lp.patch_width, lp.patch_length, cfg.substrate)
    feed = FeedSpec(feed_length_FL=lp.feed_length, feed_width_FW=lp.feed_width,
                    inset_depth=lp.inset_depth, inset_gap=lp.inset_gap,
                    stairs=table_i_stairs() if lp.stairs else ())
    ground = GroundSpec(ground_length_Lg=lp.ground_length, slot_width_Gw=lp.slot_width,
                        slot_depth=lp.slot_depth)
    return build_baseline_layout(cfg.substrate, patch, feed, ground)
