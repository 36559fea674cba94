"""Analytic cavity surrogate for fast, FDTD-free fitness.

Two cavity modes stand in for the patch: a TM10-like mode along the feed axis
and a TM11-like mode. Their resonant lengths are the geodesic current paths
through the feed-connected copper pixels, so cuts that force the current to
meander lower the resonances. Each mode is a parallel RLC; the modes add in
series, which keeps Re(Z) >= 0 and therefore |Gamma| <= 1.
"""
import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import config
from .analytics import effective_permittivity, length_extension
from .genome import Chromosome
from .geometry import feed_attached_pixels, pixel_copper
from .rf_metrics import FrequencyResponse
from .schemas import AntennaLayout, DesignInputs


# Partial ground and slot widen the bandwidth well beyond a full-ground patch
_Q_BROADENING = 3.0
_DIPOLE_DIRECTIVITY = 1.5


@dataclass(frozen=True)
class CavityModes:
    length_y: float      # geodesic length along the feed axis, meters
    length_x: float      # geodesic length across the patch, meters
    eps_eff: float
    delta_L: float
    fill: float          # connected copper fraction of the patch
    f10: float
    f11: float


def _bfs(mask: np.ndarray, sources: np.ndarray) -> np.ndarray:
    """4-neighbour hop distance from the source pixels inside mask (-1 = unreachable)."""
    dist = np.full(mask.shape, -1, dtype=int)
    queue = deque()
    for i, j in zip(*np.nonzero(sources & mask)):
        dist[i, j] = 0
        queue.append((i, j))
    n_rows, n_cols = mask.shape
    while queue:
        i, j = queue.popleft()
        for di, dj in ((-1, 0), (0, -1), (0, 1), (1, 0)):
            a, b = i + di, j + dj
            if 0 <= a < n_rows and 0 <= b < n_cols and mask[a, b] and dist[a, b] < 0:
                dist[a, b] = dist[i, j] + 1
                queue.append((a, b))
    return dist


def connected_copper(chromosome: Chromosome, base: AntennaLayout) -> np.ndarray:
    n = chromosome.n
    mask = (chromosome.genes == 1) & pixel_copper(base, n)
    return _bfs(mask, feed_attached_pixels(base, n)) >= 0


def cavity_modes(chromosome: Chromosome, base: AntennaLayout) -> Optional[CavityModes]:
    """None when no copper connects to the feed."""
    n = chromosome.n
    copper = connected_copper(chromosome, base)
    if not copper.any():
        return None
    outline = base.patch_outline
    pixel_w, pixel_l = outline.width / n, outline.height / n

    feed_dist = _bfs(copper, feed_attached_pixels(base, n))
    rows = np.flatnonzero(copper.any(axis=1))
    far_row = rows.max()
    # the far edge is reached by the shortest path to the farthest copper row
    hops_y = feed_dist[far_row][copper[far_row]].min()
    length_y = (hops_y + 1) * pixel_l

    cols = np.flatnonzero(copper.any(axis=0))
    left = np.zeros_like(copper)
    left[:, cols.min()] = True
    side_dist = _bfs(copper, left)
    right = side_dist[:, cols.max()]
    reached = right[right >= 0]
    # pieces joined only through the feed: fall back to the straight span
    hops_x = reached.min() if reached.size else cols.max() - cols.min()
    length_x = (hops_x + 1) * pixel_w

    sub = base.substrate
    inputs = DesignInputs(f_r=1.0, eps_r=sub.eps_r, height_h=sub.height_h)
    eps_eff = effective_permittivity(inputs, length_x)
    delta = length_extension(eps_eff, length_x, sub.height_h)
    c_eff = config.SPEED_OF_LIGHT / math.sqrt(eps_eff)
    ly, lx = length_y + 2.0 * delta, length_x + 2.0 * delta
    f10 = c_eff / (2.0 * ly)
    f11 = 0.5 * c_eff * math.sqrt(1.0 / ly ** 2 + 1.0 / lx ** 2)
    fill = float(copper.sum()) / (n * n)
    return CavityModes(length_y, length_x, eps_eff, delta, fill, f10, f11)


def _quality_factor(modes: CavityModes, f_res: float, base: AntennaLayout) -> float:
    h = base.substrate.height_h
    q_rad = config.SPEED_OF_LIGHT * math.sqrt(modes.eps_eff) / (4.0 * f_res * h)
    return q_rad / _Q_BROADENING


def _mode_resistances(modes: CavityModes, base: AntennaLayout) -> Tuple[float, float]:
    er = base.substrate.eps_r
    edge = 90.0 * er ** 2 / (er - 1.0)
    aspect = modes.length_y / modes.length_x
    r10 = edge * aspect ** 2 * modes.fill ** 2
    r11 = 0.5 * edge * modes.fill ** 2
    return r10, r11


def input_impedance(modes: CavityModes, base: AntennaLayout, frequencies: Sequence[float]) -> np.ndarray:
    f = np.asarray(frequencies, dtype=float)
    z = np.zeros(f.shape, dtype=complex)
    for f_res, r in zip((modes.f10, modes.f11), _mode_resistances(modes, base)):
        q = _quality_factor(modes, f_res, base)
        z += r / (1.0 + 1j * q * (f / f_res - f_res / f))
    return z


def surrogate_response(chromosome: Chromosome, base: AntennaLayout, frequencies: Sequence[float],
                       z0: float = config.REFERENCE_IMPEDANCE) -> FrequencyResponse:
    modes = cavity_modes(chromosome, base)
    f = np.asarray(frequencies, dtype=float)
    if modes is None:
        return FrequencyResponse(f, np.ones(f.shape, dtype=complex), z0)
    z = input_impedance(modes, base, f)
    return FrequencyResponse(f, (z - z0) / (z + z0), z0)


def surrogate_gain(chromosome: Chromosome, base: AntennaLayout, response: FrequencyResponse,
                   targets: Sequence[float]) -> Dict[float, float]:
    """Crude realized gain: dipole floor plus aperture term, times mismatch and dielectric loss."""
    modes = cavity_modes(chromosome, base)
    out = {}
    for target in targets:
        if modes is None:
            out[float(target)] = -math.inf
            continue
        wavelength = config.SPEED_OF_LIGHT / target
        area = modes.fill * modes.length_x * modes.length_y
        directivity = _DIPOLE_DIRECTIVITY + 4.0 * math.pi * area / wavelength ** 2
        q = _quality_factor(modes, target, base)
        efficiency = 1.0 / (1.0 + base.substrate.loss_tangent * q)
        gamma = response.gamma_at(target)
        mismatch = 1.0 - min(abs(gamma), 1.0) ** 2
        realized = directivity * efficiency * mismatch
        out[float(target)] = 10.0 * math.log10(realized) if realized > 0 else -math.inf
    return out

