"""Convolutional PML on the six faces of the Yee grid.

Graded profiles (polynomial order m):
    sigma(d) = sigma_max * d^m
    kappa(d) = 1 + (kappa_max - 1) * d^m
    alpha(d) = alpha_max * (1 - d)
with d in [0, 1] the normalized depth into the layer. Recursive convolution:
    b = exp(-(sigma / kappa + alpha) * dt / eps0)
    c = sigma / (sigma * kappa + kappa^2 * alpha) * (b - 1)
    psi = b * psi + c * dF
    dF_stretched = dF / kappa + psi
Auxiliary psi arrays exist only inside the two slabs of the stretched axis.
"""
import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from . import config


@dataclass(frozen=True)
class AxisProfile:
    inv_kappa: np.ndarray
    b: np.ndarray
    c: np.ndarray
    # number of leading / trailing entries inside the layer
    lo: int
    hi: int


def sigma_max(cell: float, order: int = config.PML_GRADING_ORDER,
              ratio: float = config.PML_SIGMA_RATIO) -> float:
    sigma_opt = (order + 1) / (150.0 * math.pi * cell)
    return ratio * sigma_opt


def axis_profile(positions: np.ndarray, n_cells: int, layers: int, cell: float, dt: float,
                 order: int = config.PML_GRADING_ORDER,
                 kappa_max: float = config.PML_KAPPA_MAX,
                 alpha_max: float = config.PML_ALPHA_MAX,
                 ratio: float = config.PML_SIGMA_RATIO) -> AxisProfile:
    """Profile sampled at `positions` (in cell units, 0 = first node of the axis)."""
    positions = np.asarray(positions, dtype=float)
    depth = np.zeros_like(positions)
    low = positions < layers
    high = positions > n_cells - layers
    depth[low] = (layers - positions[low]) / layers
    depth[high] = (positions[high] - (n_cells - layers)) / layers
    graded = depth ** order

    sigma = sigma_max(cell, order, ratio) * graded
    kappa = 1.0 + (kappa_max - 1.0) * graded
    alpha = np.where(low | high, alpha_max * (1.0 - depth), 0.0)

    b = np.exp(-(sigma / kappa + alpha) * dt / config.EPS_0)
    denom = sigma * kappa + kappa ** 2 * alpha
    c = np.zeros_like(sigma)
    np.divide(sigma * (b - 1.0), denom, out=c, where=denom > 0)
    return AxisProfile(inv_kappa=1.0 / kappa, b=b, c=c,
                       lo=int(np.count_nonzero(low)), hi=int(np.count_nonzero(high)))


def _shape_along(axis: int, values: np.ndarray) -> np.ndarray:
    shape = [1, 1, 1]
    shape[axis] = values.size
    return values.reshape(shape)


def _slab(axis: int, start: int, stop: int) -> Tuple[slice, ...]:
    index = [slice(None)] * 3
    index[axis] = slice(start, stop)
    return tuple(index)


class StretchedDerivative:
    """CPML correction for one spatial derivative of one field component."""

    def __init__(self, profile: AxisProfile, axis: int, shape: Tuple[int, int, int]):
        n = shape[axis]
        if profile.inv_kappa.size != n:
            raise ValueError(f"profile length {profile.inv_kappa.size} does not match axis length {n}")
        self.axis = axis
        self.inv_kappa = _shape_along(axis, profile.inv_kappa)
        self.slabs = []
        for start, stop in ((0, profile.lo), (n - profile.hi, n)):
            if stop <= start:
                continue
            sl = _slab(axis, start, stop)
            psi_shape = list(shape)
            psi_shape[axis] = stop - start
            self.slabs.append((sl,
                               _shape_along(axis, profile.b[start:stop]),
                               _shape_along(axis, profile.c[start:stop]),
                               np.zeros(psi_shape)))

    def apply(self, derivative: np.ndarray) -> np.ndarray:
        for sl, b, c, psi in self.slabs:
            psi *= b
            psi += c * derivative[sl]
        derivative *= self.inv_kappa
        for sl, _, _, psi in self.slabs:
            derivative[sl] += psi
        return derivative


class Cpml:
    """Holds the twelve stretched derivatives of the Yee update.

    Keys are (field, axis) with field one of 'ex'...'hz' (the component being
    updated) and axis the derivative direction.
    """

    def __init__(self, grid, dt: float):
        self.layers = grid.pml_layers
        n = (grid.nx, grid.ny, grid.nz)
        d = (grid.dx, grid.dy, grid.dz)
        node, half = [], []
        for a in range(3):
            node.append(axis_profile(np.arange(1, n[a]), n[a], self.layers, d[a], dt))
            half.append(axis_profile(np.arange(n[a]) + 0.5, n[a], self.layers, d[a], dt))

        nx, ny, nz = n
        # interior shapes of the E updates, full shapes of the H updates
        shapes: Dict[str, Tuple[int, int, int]] = {
            "ex": (nx, ny - 1, nz - 1), "ey": (nx - 1, ny, nz - 1), "ez": (nx - 1, ny - 1, nz),
            "hx": (nx + 1, ny, nz), "hy": (nx, ny + 1, nz), "hz": (nx, ny, nz + 1),
        }
        pairs = {"ex": (1, 2), "ey": (0, 2), "ez": (0, 1), "hx": (1, 2), "hy": (0, 2), "hz": (0, 1)}
        self.terms: Dict[Tuple[str, int], StretchedDerivative] = {}
        for field, axes in pairs.items():
            profiles = node if field.startswith("e") else half
            for axis in axes:
                self.terms[(field, axis)] = StretchedDerivative(profiles[axis], axis, shapes[field])

    def __call__(self, field: str, axis: int, derivative: np.ndarray) -> np.ndarray:
        return self.terms[(field, axis)].apply(derivative)
