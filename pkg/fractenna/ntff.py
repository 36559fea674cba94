"""Near-to-far-field transform from a closed Huygens box.

The solver samples tangential E and H at the face-cell centres of a box just
inside the PML and accumulates their running DFT. Equivalent currents
J = n x H, M = -n x E radiate the far field:

    N = sum J exp(j k r.r') dS,   L = sum M exp(j k r.r') dS
    U = k^2 / (32 pi^2 eta) (|L_phi + eta N_theta|^2 + |L_theta - eta N_phi|^2)
    G = 4 pi U / P_accepted
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import config


@dataclass
class FieldSnapshotSurface:
    frequencies: np.ndarray   # (F,)
    positions: np.ndarray     # (M, 3) face-cell centres, meters
    normals: np.ndarray       # (M, 3) outward unit normals
    areas: np.ndarray         # (M,)
    e: np.ndarray             # (F, M, 3) tangential E phasors
    h: np.ndarray             # (F, M, 3) tangential H phasors

    def scaled(self, factor: float) -> "FieldSnapshotSurface":
        return FieldSnapshotSurface(self.frequencies, self.positions, self.normals, self.areas,
                                    self.e * factor, self.h * factor)


@dataclass
class GainPattern:
    frequencies: np.ndarray
    theta_deg: np.ndarray
    phi_deg: np.ndarray
    gain_dbi: np.ndarray      # (F, n_theta, n_phi)

    @property
    def peak_dbi(self) -> np.ndarray:
        flat = self.gain_dbi.reshape(len(self.frequencies), -1)
        return flat.max(axis=1)

    def peak_at(self, frequency: float) -> float:
        idx = int(np.argmin(np.abs(self.frequencies - frequency)))
        return float(self.peak_dbi[idx])

    def rows(self) -> Iterator[Tuple[float, float, float, float]]:
        for fi, f in enumerate(self.frequencies):
            for ti, theta in enumerate(self.theta_deg):
                for pi_, phi in enumerate(self.phi_deg):
                    yield float(f), float(theta), float(phi), float(self.gain_dbi[fi, ti, pi_])


def default_angles() -> Tuple[np.ndarray, np.ndarray]:
    return np.arange(0.0, 180.0 + 1e-9, 5.0), np.arange(0.0, 360.0 - 1e-9, 5.0)


def far_field_gain(surface: FieldSnapshotSurface, accepted_power: Union[float, Sequence[float]],
                   theta_deg: Optional[np.ndarray] = None, phi_deg: Optional[np.ndarray] = None,
                   chunk: int = 256) -> GainPattern:
    """Gain pattern in dBi; all-zero fields give -inf."""
    if theta_deg is None or phi_deg is None:
        theta_deg, phi_deg = default_angles()
    theta_deg = np.asarray(theta_deg, dtype=float)
    phi_deg = np.asarray(phi_deg, dtype=float)
    freqs = np.asarray(surface.frequencies, dtype=float)
    power = np.broadcast_to(np.asarray(accepted_power, dtype=float), freqs.shape)
    if np.any(~(power > 0)):
        raise ValueError("accepted power must be positive")

    th, ph = np.meshgrid(np.radians(theta_deg), np.radians(phi_deg), indexing="ij")
    th, ph = th.ravel(), ph.ravel()
    r_hat = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)
    theta_hat = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=1)
    phi_hat = np.stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)], axis=1)

    eta = config.ETA_0
    gain = np.empty((freqs.size, th.size))
    for fi, f in enumerate(freqs):
        k = 2.0 * math.pi * f / config.SPEED_OF_LIGHT
        j_w = np.cross(surface.normals, surface.h[fi]) * surface.areas[:, None]
        m_w = -np.cross(surface.normals, surface.e[fi]) * surface.areas[:, None]
        for start in range(0, th.size, chunk):
            sl = slice(start, start + chunk)
            phase = np.exp(1j * k * (r_hat[sl] @ surface.positions.T))
            n_vec = phase @ j_w
            l_vec = phase @ m_w
            n_th = np.einsum("dc,dc->d", n_vec, theta_hat[sl])
            n_ph = np.einsum("dc,dc->d", n_vec, phi_hat[sl])
            l_th = np.einsum("dc,dc->d", l_vec, theta_hat[sl])
            l_ph = np.einsum("dc,dc->d", l_vec, phi_hat[sl])
            u = k ** 2 / (32.0 * math.pi ** 2 * eta) * (
                np.abs(l_ph + eta * n_th) ** 2 + np.abs(l_th - eta * n_ph) ** 2)
            gain[fi, sl] = 4.0 * math.pi * u / power[fi]

    with np.errstate(divide="ignore"):
        gain_dbi = 10.0 * np.log10(gain)
    pattern = GainPattern(freqs, theta_deg, phi_deg, gain_dbi.reshape(freqs.size, theta_deg.size, phi_deg.size))
    for f, peak in zip(freqs, pattern.peak_dbi):
        logging.debug(f"遠場增益: {f / 1e9:.3f} GHz 峰值 {peak:.3f} dBi")
    return pattern


# --- on-the-fly surface DFT -----------------------------------------------

# Yee staggering of each component, in cell units
_OFFSETS = {
    "ex": (0.5, 0.0, 0.0), "ey": (0.0, 0.5, 0.0), "ez": (0.0, 0.0, 0.5),
    "hx": (0.0, 0.5, 0.5), "hy": (0.5, 0.0, 0.5), "hz": (0.5, 0.5, 0.0),
}
_AXIS = {"x": 0, "y": 1, "z": 2}


def _axis_taps(targets: np.ndarray, offset: float) -> List[Tuple[np.ndarray, float]]:
    base = targets - offset
    lower = np.floor(base + 1e-9).astype(int)
    if np.allclose(base, lower):
        return [(lower, 1.0)]
    return [(lower, 0.5), (lower + 1, 0.5)]


class _FaceSampler:
    """Averages the staggered tangential components onto one face's cell centres."""

    def __init__(self, normal_axis: int, side: int, targets: List[np.ndarray], shapes: dict):
        self.normal_axis = normal_axis
        self.side = side
        self.size = int(np.prod([t.size for t in targets]))
        tangential = [a for a in range(3) if a != normal_axis]
        self.taps = {}
        for kind in "eh":
            for a in tangential:
                name = f"{kind}{'xyz'[a]}"
                per_axis = [_axis_taps(targets[ax], _OFFSETS[name][ax]) for ax in range(3)]
                terms = []
                for combo in itertools.product(*per_axis):
                    idx = np.meshgrid(*(c[0] for c in combo), indexing="ij")
                    weight = float(np.prod([c[1] for c in combo]))
                    terms.append((np.ravel_multi_index([i.ravel() for i in idx], shapes[name]), weight))
                self.taps[name] = (a, terms)

    def sample(self, fields: dict, kind: str) -> np.ndarray:
        out = np.zeros((self.size, 3))
        for name, (a, terms) in self.taps.items():
            if name[0] != kind:
                continue
            arr = fields[name]
            for flat, weight in terms:
                out[:, a] += weight * np.take(arr, flat)
        return out


class SurfaceRecorder:
    """Running DFT of the box fields at the requested frequencies."""

    def __init__(self, grid, frequencies: Sequence[float], stride: int = 1, inset: Optional[int] = None):
        self.frequencies = np.asarray(frequencies, dtype=float)
        self.stride = max(int(stride), 1)
        self.dt = grid.dt
        inset = grid.pml_layers + 2 if inset is None else inset
        n = (grid.nx, grid.ny, grid.nz)
        d = (grid.dx, grid.dy, grid.dz)
        lo = [inset] * 3
        hi = [n[a] - inset for a in range(3)]
        if any(hi[a] - lo[a] < 2 for a in range(3)):
            raise ValueError("grid too small for a Huygens box inside the PML")
        nx, ny, nz = n
        shapes = {
            "ex": (nx, ny + 1, nz + 1), "ey": (nx + 1, ny, nz + 1), "ez": (nx + 1, ny + 1, nz),
            "hx": (nx + 1, ny, nz), "hy": (nx, ny + 1, nz), "hz": (nx, ny, nz + 1),
        }

        self.faces: List[_FaceSampler] = []
        positions, normals, areas = [], [], []
        for a in range(3):
            for side, plane in ((-1, lo[a]), (1, hi[a])):
                targets = []
                for ax in range(3):
                    if ax == a:
                        targets.append(np.array([float(plane)]))
                    else:
                        targets.append(np.arange(lo[ax], hi[ax]) + 0.5)
                face = _FaceSampler(a, side, targets, shapes)
                self.faces.append(face)
                grids = np.meshgrid(*targets, indexing="ij")
                pos = np.stack([grid.origin[ax] + grids[ax].ravel() * d[ax] for ax in range(3)], axis=1)
                positions.append(pos)
                normal = np.zeros((face.size, 3))
                normal[:, a] = side
                normals.append(normal)
                t1, t2 = [ax for ax in range(3) if ax != a]
                areas.append(np.full(face.size, d[t1] * d[t2]))

        self.positions = np.concatenate(positions)
        self.normals = np.concatenate(normals)
        self.areas = np.concatenate(areas)
        m = self.positions.shape[0]
        self.e_acc = np.zeros((self.frequencies.size, m, 3), dtype=complex)
        self.h_acc = np.zeros((self.frequencies.size, m, 3), dtype=complex)
        self._omega = 2.0 * math.pi * self.frequencies

    def _accumulate(self, acc: np.ndarray, fields: dict, kind: str, t: float) -> None:
        values = np.concatenate([face.sample(fields, kind) for face in self.faces])
        weight = np.exp(-1j * self._omega * t) * (self.stride * self.dt)
        acc += weight[:, None, None] * values[None, :, :]

    def record_e(self, step: int, fields: dict) -> None:
        """E at time step * dt."""
        if step % self.stride == 0:
            self._accumulate(self.e_acc, fields, "e", step * self.dt)

    def record_h(self, step: int, fields: dict) -> None:
        """H at time (step + 1/2) * dt."""
        if step % self.stride == 0:
            self._accumulate(self.h_acc, fields, "h", (step + 0.5) * self.dt)

    def snapshot(self) -> FieldSnapshotSurface:
        return FieldSnapshotSurface(self.frequencies.copy(), self.positions, self.normals, self.areas,
                                    self.e_acc.copy(), self.h_acc.copy())
