import math

import numpy as np
import pytest
from pydantic import ValidationError

from fractenna.analytics import cavity_resonance
from fractenna.config import DEFAULT_TARGETS, PATCH_LENGTH, PATCH_WIDTH, SPEED_OF_LIGHT
from fractenna.evaluators import simulate_layout
from fractenna.exceptions import GridFitError
from fractenna.fdtd import (GaussianPulse, MaterialGrid, PortPlacement, YeeSolver, check_resolution,
                            dump_fields, grid_for_layout, rasterize, read_field_dump, run_simulation)
from fractenna.geometry import build_fractal_layout
from fractenna.schemas import FractalCutSpec, GridSpec, SolverParams

MM = 1e-3


def cube(n, cell=1 * MM, pml=6, n_steps=100, **kwargs):
    return GridSpec(dx=cell, dy=cell, dz=cell, nx=n, ny=n, nz=n, pml_layers=pml, n_steps=n_steps, **kwargs)


def test_courant_factor_above_one_is_rejected():
    with pytest.raises(ValidationError, match="Courant"):
        cube(20, cfl_factor=1.2)


def test_time_step_follows_courant_limit():
    grid = cube(20)
    assert grid.dt == pytest.approx(0.99 * MM / (SPEED_OF_LIGHT * math.sqrt(3)), rel=1e-12)


def test_pulse_spectrum_is_down_20_db_at_band_edges():
    pulse = GaussianPulse(center=5.5e9, bandwidth=9e9)
    edge = math.exp(-(math.pi * pulse.tau * 4.5e9) ** 2)
    assert 20 * math.log10(edge) == pytest.approx(-20.0, abs=1e-9)
    assert abs(float(pulse(0.0))) < 1e-6


def test_patch_rasterizes_to_38_by_38_cells(baseline):
    grid = grid_for_layout(baseline, 0.5 * MM, n_steps=10)
    material = rasterize(baseline, grid)
    assert int(material.patch_cells.sum()) == 38 * 38
    assert material.k_top > material.k_gnd
    assert (material.eps_r[:, :, material.k_gnd:material.k_top] > 1).any()


def test_empty_layout_has_no_patch_cells(baseline):
    empty = baseline.model_copy(update={"copper_regions": ()})
    material = rasterize(empty, grid_for_layout(empty, 0.5 * MM, n_steps=10))
    assert not material.patch_cells.any()
    assert material.feed_cells.any()


def test_layout_without_margin_does_not_fit(baseline):
    grid = GridSpec(dx=0.5 * MM, dy=0.5 * MM, dz=0.3925 * MM, nx=100, ny=100, nz=40, n_steps=10)
    with pytest.raises(GridFitError, match="margin"):
        rasterize(baseline, grid)


def test_resolution_check(baseline):
    coarse = grid_for_layout(baseline, 2 * MM, n_steps=10)
    with pytest.raises(GridFitError, match="cells per wavelength"):
        check_resolution(coarse, 4.4, 10e9)
    fine = grid_for_layout(baseline, 0.5 * MM, n_steps=10)
    assert check_resolution(fine, 4.4, 10e9) > 20


def test_port_sits_under_the_feed(baseline):
    grid = grid_for_layout(baseline, 0.5 * MM, n_steps=10)
    material = rasterize(baseline, grid)
    port = PortPlacement.at_feed(baseline, grid, material)
    assert port.k_lo == material.k_gnd and port.k_hi == material.k_top
    assert material.feed_cells[port.i_lo:port.i_hi, port.j].all()


def test_energy_is_conserved_in_a_closed_box():
    grid = cube(20)
    solver = YeeSolver(grid, MaterialGrid.vacuum(grid), boundary="pec")
    solver.ez[10, 10, 10] = 1.0
    energies = []
    for _ in range(300):
        previous = {name: getattr(solver, name).copy() for name in ("ex", "ey", "ez")}
        solver.step()
        energies.append(solver.energy(previous))
    energies = np.array(energies)
    assert energies[0] > 0
    growth = np.diff(energies) / energies[0]
    assert growth.max() <= 1e-6
    assert abs(energies[-1] - energies[0]) <= 1e-6 * energies[0]


def _small_run(polarity=1, **kwargs):
    grid = cube(16, n_steps=200)
    port = PortPlacement(i_lo=7, i_hi=8, j=8, k_lo=7, k_hi=9, polarity=polarity)
    record, _ = run_simulation(MaterialGrid.vacuum(grid), grid, port,
                               pulse=GaussianPulse(20e9, 30e9), progress_every=0, **kwargs)
    return record


def test_runs_are_bit_identical():
    a, b = _small_run(), _small_run()
    assert np.array_equal(a.voltage, b.voltage)
    assert np.array_equal(a.current, b.current)


def test_reversed_port_polarity_negates_the_voltage():
    a, b = _small_run(), _small_run(polarity=-1)
    assert np.array_equal(b.voltage, -a.voltage)
    assert np.abs(a.voltage).max() > 0


def test_field_dump_round_trip(tmp_path):
    path = tmp_path / "fields.fpfd"
    _small_run(dump_path=path)
    dumped = read_field_dump(path)
    assert dumped["ex"].shape == (16, 17, 17)
    assert dumped["ez"].shape == (17, 17, 16)
    assert dumped["hz"].shape == (16, 16, 17)

    grid = cube(16)
    solver = YeeSolver(grid, MaterialGrid.vacuum(grid), boundary="pec")
    solver.ez[8, 8, 8] = 1.0
    solver.step()
    dump_fields(solver, path)
    for name, arr in read_field_dump(path).items():
        assert np.array_equal(arr, solver.fields[name])


def test_field_dump_rejects_other_files(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOPE" + bytes(16))
    with pytest.raises(ValueError, match="FPFD"):
        read_field_dump(path)


def test_guided_wave_phase_velocity():
    # TE10-like mode between PEC walls: E along z, sin profile across y
    cell = 1 * MM
    nx, ny, nz = 240, 60, 14
    grid = GridSpec(dx=cell, dy=cell, dz=cell, nx=nx, ny=ny, nz=nz, pml_layers=6, n_steps=1)
    solver = YeeSolver(grid, MaterialGrid.vacuum(grid), boundary="pec")
    f0 = SPEED_OF_LIGHT / (20 * cell)
    pulse = GaussianPulse(center=f0, bandwidth=f0)
    profile = np.sin(np.pi * np.arange(1, ny) / ny)[:, None]
    solver.add_point_source("ez", (20, slice(1, ny), slice(None)), lambda t: pulse(t) * profile)

    near, far = [], []
    for _ in range(560):
        solver.step()
        near.append(solver.ez[60, ny // 2, nz // 2])
        far.append(solver.ez[100, ny // 2, nz // 2])
    times = (np.arange(560) + 1) * solver.dt
    kernel = np.exp(-2j * np.pi * f0 * times)
    ratio = (np.asarray(far) @ kernel) / (np.asarray(near) @ kernel)

    fc = SPEED_OF_LIGHT / (2 * ny * cell)
    vp_expected = SPEED_OF_LIGHT / math.sqrt(1 - (fc / f0) ** 2)
    spacing = 40 * cell
    k_expected = 2 * np.pi * f0 / vp_expected
    phase = np.angle(ratio)
    m = round((k_expected * spacing + phase) / (2 * np.pi))
    k = (2 * np.pi * m - phase) / spacing
    assert 2 * np.pi * f0 / k == pytest.approx(vp_expected, rel=0.01)


def _peak_time(trace, dt):
    """Peak of a Gaussian-shaped trace: vertex of the parabola through log|E| at the top sample."""
    i = int(np.argmax(np.abs(trace)))
    y0, y1, y2 = np.log(np.abs(trace[i - 1:i + 2]))
    return (i + 0.5 * (y0 - y2) / (y0 - 2 * y1 + y2) + 1) * dt


def test_vacuum_pulse_transit_speed():
    # plane sheet source across y and z; the box is large enough that wall echoes
    # reach the sample points only after both peaks have passed
    cell = 1 * MM
    nx, ny, nz = 160, 200, 14
    grid = GridSpec(dx=cell, dy=cell, dz=cell, nx=nx, ny=ny, nz=nz, pml_layers=6, n_steps=1)
    solver = YeeSolver(grid, MaterialGrid.vacuum(grid), boundary="pec")
    f_max = SPEED_OF_LIGHT / (20 * cell)
    tau = math.sqrt(math.log(10)) / (math.pi * f_max)
    solver.add_point_source("ez", (40, slice(1, ny), slice(None)),
                            lambda t: math.exp(-((t - 4 * tau) / tau) ** 2))

    near, far = [], []
    for _ in range(260):
        solver.step()
        near.append(solver.ez[60, ny // 2, nz // 2])
        far.append(solver.ez[100, ny // 2, nz // 2])
    transit = _peak_time(np.asarray(far), solver.dt) - _peak_time(np.asarray(near), solver.dt)
    assert 40 * cell / transit == pytest.approx(SPEED_OF_LIGHT, rel=0.01)


@pytest.mark.slow
def test_cpml_matches_a_large_reference():
    cell = 1 * MM
    f0 = SPEED_OF_LIGHT / (10 * cell)
    pulse = GaussianPulse(center=f0, bandwidth=f0)
    n_steps = 150

    def sampled_trace(n, pml):
        grid = GridSpec(dx=cell, dy=cell, dz=cell, nx=n, ny=n, nz=n, pml_layers=pml, n_steps=n_steps)
        solver = YeeSolver(grid, MaterialGrid.vacuum(grid), boundary="cpml")
        c = n // 2
        solver.add_point_source("ez", (c, c, c), pulse)
        trace = []
        for _ in range(n_steps):
            solver.step()
            trace.append(solver.ez[c + 8, c, c])
        return np.asarray(trace)

    small = sampled_trace(40, 10)
    reference = sampled_trace(120, 10)
    assert np.max(np.abs(small - reference)) <= 1e-3 * np.max(np.abs(reference))


# --- full patch runs (minutes at the coarse preset, much longer at fine)


def dominant_resonance(result):
    assert result.summary.resonances, "no return-loss minimum below -10 dB"
    return min(result.summary.resonances, key=lambda r: r.rl_min_db).f_res


@pytest.fixture(scope="module")
def coarse_baseline(baseline):
    return simulate_layout(baseline, SolverParams(preset="coarse"), DEFAULT_TARGETS)


@pytest.fixture(scope="module")
def fine_baseline(baseline):
    return simulate_layout(baseline, SolverParams(preset="fine"), DEFAULT_TARGETS)


@pytest.fixture(scope="module")
def cavity_estimate(substrate):
    return cavity_resonance(PATCH_WIDTH, PATCH_LENGTH, substrate)


@pytest.mark.slow
@pytest.mark.xfail(strict=False, reason="patch sits beyond the partial ground; coarse run measured "
                                        "4.64 GHz against a 3.71 GHz cavity estimate (+25 %)")
def test_baseline_patch_benchmark(coarse_baseline, cavity_estimate):
    f_res = dominant_resonance(coarse_baseline)
    assert abs(f_res - cavity_estimate) / cavity_estimate <= 0.07


@pytest.mark.slow
def test_fine_grid_moves_toward_the_cavity_estimate(coarse_baseline, fine_baseline, cavity_estimate):
    coarse_error = abs(dominant_resonance(coarse_baseline) - cavity_estimate)
    fine_error = abs(dominant_resonance(fine_baseline) - cavity_estimate)
    assert fine_error <= coarse_error


@pytest.mark.slow
def test_halving_the_cell_keeps_the_resonance(coarse_baseline, fine_baseline):
    coarse = dominant_resonance(coarse_baseline)
    assert dominant_resonance(fine_baseline) == pytest.approx(coarse, rel=0.03)


@pytest.mark.slow
@pytest.mark.xfail(strict=False, reason="coarse run measured minima at 2.71, 5.73 and 8.73 GHz; "
                                        "only one lies in 3-7 GHz")
def test_fractal_layout_is_dual_band(baseline):
    fractal = build_fractal_layout(baseline, FractalCutSpec())
    result = simulate_layout(fractal, SolverParams(preset="coarse"), DEFAULT_TARGETS)
    in_band = [r.f_res for r in result.summary.resonances if 3e9 <= r.f_res <= 7e9]
    assert len(in_band) >= 2, f"minima below -10 dB: {[r.f_res for r in result.summary.resonances]}"
