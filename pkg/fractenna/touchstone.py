"""Text artifacts of one evaluation: Touchstone v1 .s1p, sweep CSV, gain CSV."""
import csv
from pathlib import Path
from typing import Iterable, List, Optional, Union

import numpy as np
import skrf

from .ntff import GainPattern
from .rf_metrics import FrequencyResponse


SWEEP_COLUMNS = ("freq_hz", "s11_db", "vswr", "zin_re", "zin_im")
GAIN_COLUMNS = ("freq_hz", "theta_deg", "phi_deg", "gain_dbi")


def _g(value: float) -> str:
    return f"{value:.9g}"


def write_s1p(path: Union[str, Path], resp: FrequencyResponse, comments: Optional[Iterable[str]] = None) -> None:
    """One-port Touchstone v1, real/imaginary pairs, 9 significant digits."""
    lines = [f"! {c}" for c in (comments or [])]
    lines.append(f"# HZ S RI R {resp.z0:g}")
    for f, g in zip(resp.frequencies, resp.gamma):
        lines.append(f"{_g(f)} {_g(g.real)} {_g(g.imag)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_s1p(path: Union[str, Path]) -> FrequencyResponse:
    network = skrf.Network(str(path))
    if network.nports != 1:
        raise ValueError(f"{path}: expected a one-port network, got {network.nports} ports")
    z0 = float(np.real(network.z0[0, 0]))
    return FrequencyResponse(network.f, network.s[:, 0, 0], z0)


def write_sweep_csv(path: Union[str, Path], resp: FrequencyResponse) -> None:
    z_in = resp.z_in
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for f, rl, sw, z in zip(resp.frequencies, resp.return_loss_db, resp.vswr, z_in):
            writer.writerow([_g(f), _g(rl), _g(sw), _g(z.real), _g(z.imag)])


def read_sweep_csv(path: Union[str, Path]) -> List[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        return [{k: float(v) for k, v in row.items()} for row in reader]


def write_gain_csv(path: Union[str, Path], pattern: Optional[GainPattern]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GAIN_COLUMNS)
        if pattern is None:
            return
        for f, theta, phi, gain in pattern.rows():
            writer.writerow([_g(f), _g(theta), _g(phi), _g(gain)])
