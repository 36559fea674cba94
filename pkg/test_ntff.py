import math

import numpy as np
import pytest

from fractenna.config import ETA_0, SPEED_OF_LIGHT
from fractenna.ntff import FieldSnapshotSurface, SurfaceRecorder, default_angles, far_field_gain
from fractenna.schemas import GridSpec


def dipole_fields(points, k):
    """Exact E and H of a unit z-directed Hertzian dipole (Il = 1) at the origin."""
    x, y, z = points.T
    r = np.sqrt(x * x + y * y + z * z)
    theta = np.arccos(z / r)
    phi = np.arctan2(y, x)
    kr = k * r
    wave = np.exp(-1j * kr)
    h_phi = 1j * k * np.sin(theta) / (4 * np.pi * r) * (1 + 1 / (1j * kr)) * wave
    e_r = ETA_0 * np.cos(theta) / (2 * np.pi * r ** 2) * (1 + 1 / (1j * kr)) * wave
    e_theta = 1j * ETA_0 * k * np.sin(theta) / (4 * np.pi * r) * (1 + 1 / (1j * kr) - 1 / kr ** 2) * wave

    r_hat = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=1)
    theta_hat = np.stack([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -np.sin(theta)], axis=1)
    phi_hat = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=1)
    e = e_r[:, None] * r_hat + e_theta[:, None] * theta_hat
    h = h_phi[:, None] * phi_hat
    return e, h


def dipole_box(half_side, per_face, frequency):
    """Huygens cube around the dipole, sampled at patch centres."""
    k = 2 * np.pi * frequency / SPEED_OF_LIGHT
    step = 2 * half_side / per_face
    centres = -half_side + step * (np.arange(per_face) + 0.5)
    u, v = np.meshgrid(centres, centres, indexing="ij")
    u, v = u.ravel(), v.ravel()
    positions, normals = [], []
    for axis in range(3):
        a, b = [ax for ax in range(3) if ax != axis]
        for side in (-1, 1):
            p = np.zeros((u.size, 3))
            p[:, axis] = side * half_side
            p[:, a], p[:, b] = u, v
            n = np.zeros((u.size, 3))
            n[:, axis] = side
            positions.append(p)
            normals.append(n)
    positions = np.concatenate(positions)
    normals = np.concatenate(normals)
    e, h = dipole_fields(positions, k)
    # keep only the tangential parts
    e -= np.sum(e * normals, axis=1)[:, None] * normals
    h -= np.sum(h * normals, axis=1)[:, None] * normals
    areas = np.full(positions.shape[0], step * step)
    power = ETA_0 * k ** 2 / (12 * np.pi)
    surface = FieldSnapshotSurface(np.array([frequency]), positions, normals, areas, e[None], h[None])
    return surface, power


@pytest.fixture(scope="module")
def dipole():
    return dipole_box(0.4, 20, SPEED_OF_LIGHT)


def test_dipole_peak_gain(dipole):
    surface, power = dipole
    pattern = far_field_gain(surface, power)
    assert pattern.peak_at(SPEED_OF_LIGHT) == pytest.approx(10 * math.log10(1.5), abs=0.2)


def test_dipole_pattern_shape(dipole):
    surface, power = dipole
    pattern = far_field_gain(surface, power, theta_deg=np.array([0.0, 45.0, 90.0]), phi_deg=np.array([0.0, 90.0]))
    gain = pattern.gain_dbi[0]
    assert gain[0].max() < -30
    # sin^2 pattern: 45 degrees sits 3 dB below broadside
    assert gain[2, 0] - gain[1, 0] == pytest.approx(10 * math.log10(2), abs=0.2)
    assert gain[2, 0] == pytest.approx(gain[2, 1], abs=0.05)


def test_gain_is_invariant_to_excitation_scale(dipole):
    surface, power = dipole
    theta, phi = np.array([90.0]), np.array([0.0])
    a = far_field_gain(surface, power, theta, phi)
    b = far_field_gain(surface.scaled(2.0), 4 * power, theta, phi)
    assert b.gain_dbi[0, 0, 0] == pytest.approx(a.gain_dbi[0, 0, 0], abs=1e-9)


def test_zero_fields_give_minus_infinity(dipole):
    surface, power = dipole
    pattern = far_field_gain(surface.scaled(0.0), power, np.array([90.0]), np.array([0.0]))
    assert pattern.gain_dbi[0, 0, 0] == -math.inf


def test_accepted_power_must_be_positive(dipole):
    surface, _ = dipole
    with pytest.raises(ValueError, match="positive"):
        far_field_gain(surface, 0.0)


def test_default_angles():
    theta, phi = default_angles()
    assert theta[0] == 0.0 and theta[-1] == 180.0
    assert phi.size == 72


def test_surface_recorder_box():
    grid = GridSpec(dx=1e-3, dy=1e-3, dz=1e-3, nx=20, ny=20, nz=20, pml_layers=6, n_steps=10)
    recorder = SurfaceRecorder(grid, [10e9, 20e9])
    # inset 8: each face has 4 x 4 samples
    assert recorder.positions.shape == (96, 3)
    assert np.allclose(np.linalg.norm(recorder.normals, axis=1), 1.0)
    assert np.allclose(recorder.areas, 1e-6)
    snap = recorder.snapshot()
    assert snap.e.shape == (2, 96, 3)
    assert not snap.e.any()
