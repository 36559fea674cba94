"""3-D Yee FDTD solver for the microstrip antenna.

Field layout (nx, ny, nz cells, node (i, j, k) at origin + (i dx, j dy, k dz)):
    Ex (nx, ny+1, nz+1)  Ey (nx+1, ny, nz+1)  Ez (nx+1, ny+1, nz)
    Hx (nx+1, ny, nz)    Hy (nx, ny+1, nz)    Hz (nx, ny, nz+1)
Tangential E on the outer walls stays zero (PEC behind the CPML). Copper and
ground are zero-thickness PEC sheets on the node planes k_top and k_gnd.

The lumped port is a resistive voltage source on the vertical Ez edges under
the feed at the board edge, spanning the substrate.
"""
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import config
from .cpml import Cpml
from .exceptions import GridFitError, SolverDivergenceError
from .geometry import cell_mask, cell_span
from .ntff import FieldSnapshotSurface, SurfaceRecorder
from .schemas import AntennaLayout, GridSpec


# --- grid and materials ---------------------------------------------------

def grid_for_layout(layout: AntennaLayout, cell_size: float, n_steps: int,
                    cfl_factor: float = config.CFL_FACTOR,
                    pml_layers: int = config.PML_LAYERS) -> GridSpec:
    """Uniform lateral cells; dz splits the substrate into an integer number of cells."""
    sub = layout.substrate
    n_sub = max(int(math.ceil(sub.height_h / cell_size - 1e-9)), 1)
    dz = sub.height_h / n_sub
    pad_xy = pml_layers + config.AIR_CELLS_LATERAL
    nx = 2 * pad_xy + int(math.ceil(sub.width_sub / cell_size - 1e-9))
    ny = 2 * pad_xy + int(math.ceil(sub.length_sub / cell_size - 1e-9))
    nz = 2 * pml_layers + config.AIR_CELLS_BELOW + n_sub + config.AIR_CELLS_ABOVE
    origin = (-pad_xy * cell_size, -pad_xy * cell_size, -(pml_layers + config.AIR_CELLS_BELOW) * dz)
    return GridSpec(dx=cell_size, dy=cell_size, dz=dz, nx=nx, ny=ny, nz=nz,
                    cfl_factor=cfl_factor, pml_layers=pml_layers, n_steps=n_steps, origin=origin)


def check_resolution(grid: GridSpec, eps_r: float, f_max: float) -> float:
    """Cells per wavelength at f_max inside the substrate; below 15 is rejected."""
    wavelength = config.SPEED_OF_LIGHT / (f_max * math.sqrt(eps_r))
    per_lambda = wavelength / max(grid.dx, grid.dy, grid.dz)
    if per_lambda < 15:
        raise GridFitError(f"only {per_lambda:.1f} cells per wavelength at {f_max / 1e9:.2f} GHz (need 15)")
    if per_lambda < 20:
        logging.warning(f"解析度偏低: {per_lambda:.1f} cells/lambda at {f_max / 1e9:.2f} GHz")
    return per_lambda


@dataclass
class MaterialGrid:
    eps_r: np.ndarray         # (nx, ny, nz) per cell
    sigma: np.ndarray         # (nx, ny, nz) S/m
    pec_x: np.ndarray         # (nx, ny+1, nz+1) per Ex edge
    pec_y: np.ndarray         # (nx+1, ny, nz+1) per Ey edge
    patch_cells: np.ndarray   # (nx, ny) in-plane cells
    feed_cells: np.ndarray
    ground_cells: np.ndarray
    k_gnd: int
    k_top: int

    @classmethod
    def vacuum(cls, grid: GridSpec) -> "MaterialGrid":
        nx, ny, nz = grid.nx, grid.ny, grid.nz
        empty = np.zeros((nx, ny), dtype=bool)
        return cls(np.ones((nx, ny, nz)), np.zeros((nx, ny, nz)),
                   np.zeros((nx, ny + 1, nz + 1), dtype=bool), np.zeros((nx + 1, ny, nz + 1), dtype=bool),
                   empty, empty.copy(), empty.copy(), 0, 0)


def _sheet_edges(cells: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Ex / Ey edges lying on (or bounding) the PEC cells of one node plane."""
    nx, ny = cells.shape
    ex = np.zeros((nx, ny + 1), dtype=bool)
    ex[:, :-1] |= cells
    ex[:, 1:] |= cells
    ey = np.zeros((nx + 1, ny), dtype=bool)
    ey[:-1, :] |= cells
    ey[1:, :] |= cells
    return ex, ey


def rasterize(layout: AntennaLayout, grid: GridSpec,
              source_frequency: float = config.PULSE_CENTER) -> MaterialGrid:
    """Floor-snapped rasterization of substrate, copper and ground."""
    sub = layout.substrate
    ox, oy, oz = grid.origin
    margin = grid.pml_layers + 4
    i0 = int(math.floor((0.0 - ox) / grid.dx + 1e-9))
    i1 = int(math.floor((sub.width_sub - ox) / grid.dx + 1e-9))
    j0 = int(math.floor((0.0 - oy) / grid.dy + 1e-9))
    j1 = int(math.floor((sub.length_sub - oy) / grid.dy + 1e-9))
    k_gnd = int(math.floor((0.0 - oz) / grid.dz + 1e-9))
    k_top = int(math.floor((sub.height_h - oz) / grid.dz + 1e-9))
    if min(i0, j0, k_gnd) < margin or min(grid.nx - i1, grid.ny - j1, grid.nz - k_top) < margin:
        raise GridFitError(f"layout does not fit the grid with {margin} cells of margin")
    if k_top <= k_gnd:
        raise GridFitError("substrate is thinner than one cell")

    material = MaterialGrid.vacuum(grid)
    material.k_gnd, material.k_top = k_gnd, k_top
    material.eps_r[i0:i1, j0:j1, k_gnd:k_top] = sub.eps_r
    sigma = 2.0 * math.pi * source_frequency * config.EPS_0 * sub.eps_r * sub.loss_tangent
    material.sigma[i0:i1, j0:j1, k_gnd:k_top] = sigma

    shape = (grid.nx, grid.ny)
    origin, cell = (ox, oy), (grid.dx, grid.dy)
    material.patch_cells = cell_mask(layout.copper_regions, origin, cell, shape)
    material.feed_cells = cell_mask(layout.feed_regions, origin, cell, shape)
    material.ground_cells = cell_mask(layout.ground_regions, origin, cell, shape)

    ex, ey = _sheet_edges(material.patch_cells | material.feed_cells)
    material.pec_x[:, :, k_top] = ex
    material.pec_y[:, :, k_top] = ey
    ex, ey = _sheet_edges(material.ground_cells)
    material.pec_x[:, :, k_gnd] |= ex
    material.pec_y[:, :, k_gnd] |= ey
    logging.debug(f"網格化: patch {int(material.patch_cells.sum())} cells, "
                  f"ground {int(material.ground_cells.sum())} cells, k_gnd={k_gnd}, k_top={k_top}")
    return material


# --- excitation -----------------------------------------------------------

@dataclass(frozen=True)
class GaussianPulse:
    """Gaussian-modulated sine; spectrum is 20 dB down at center +/- bandwidth/2."""
    center: float = config.PULSE_CENTER
    bandwidth: float = config.PULSE_BANDWIDTH
    amplitude: float = 1.0

    @property
    def tau(self) -> float:
        return math.sqrt(math.log(10.0)) / (math.pi * 0.5 * self.bandwidth)

    @property
    def delay(self) -> float:
        return 4.0 * self.tau

    def __call__(self, t: Union[float, np.ndarray]):
        s = np.asarray(t) - self.delay
        return self.amplitude * np.exp(-(s / self.tau) ** 2) * np.sin(2.0 * math.pi * self.center * s)


@dataclass(frozen=True)
class PortPlacement:
    """Vertical Ez edges: x nodes i_lo..i_hi, node row j, edges k_lo..k_hi-1."""
    i_lo: int
    i_hi: int
    j: int
    k_lo: int
    k_hi: int
    resistance: float = config.REFERENCE_IMPEDANCE
    polarity: int = 1

    @property
    def n_parallel(self) -> int:
        return self.i_hi - self.i_lo + 1

    @property
    def n_series(self) -> int:
        return self.k_hi - self.k_lo

    @classmethod
    def at_feed(cls, layout: AntennaLayout, grid: GridSpec, material: MaterialGrid,
                resistance: float = config.REFERENCE_IMPEDANCE, polarity: int = 1) -> "PortPlacement":
        xc = 0.5 * layout.substrate.width_sub
        half = 0.5 * layout.feed.feed_width_FW
        i_lo, i_hi = cell_span(xc - half, xc + half, grid.origin[0], grid.dx, grid.nx)
        j = int(math.floor((0.0 - grid.origin[1]) / grid.dy + 1e-9))
        if i_hi <= i_lo:
            raise GridFitError("feed line is narrower than one cell")
        return cls(i_lo=i_lo, i_hi=i_hi, j=j, k_lo=material.k_gnd, k_hi=material.k_top,
                   resistance=resistance, polarity=polarity)


@dataclass
class PortRecord:
    voltage: np.ndarray       # at (n + 1/2) dt
    current: np.ndarray
    source: np.ndarray
    dt: float
    pulse_center: float
    pulse_bandwidth: float
    z0: float = config.REFERENCE_IMPEDANCE
    converged: bool = True

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.voltage.size) + 0.5) * self.dt


# --- solver ---------------------------------------------------------------

def _average_edges(cells: np.ndarray, axis: int) -> np.ndarray:
    """Mean of the four cells around each interior edge parallel to axis."""
    a, b = [ax for ax in range(3) if ax != axis]

    def sl(ax_a, ax_b):
        index = [slice(None)] * 3
        index[a] = ax_a
        index[b] = ax_b
        return tuple(index)

    lo, hi = slice(None, -1), slice(1, None)
    return 0.25 * (cells[sl(lo, lo)] + cells[sl(hi, lo)] + cells[sl(lo, hi)] + cells[sl(hi, hi)])


class YeeSolver:
    """Leapfrog update: H^{n-1/2} -> H^{n+1/2} from E^n, then E^n -> E^{n+1}."""

    def __init__(self, grid: GridSpec, material: MaterialGrid, boundary: str = "cpml",
                 port: Optional[PortPlacement] = None, pulse: Optional[GaussianPulse] = None):
        if boundary not in ("cpml", "pec"):
            raise ValueError(f"unknown boundary {boundary!r}")
        self.grid = grid
        self.dt = grid.dt
        nx, ny, nz = grid.nx, grid.ny, grid.nz
        self.ex = np.zeros((nx, ny + 1, nz + 1))
        self.ey = np.zeros((nx + 1, ny, nz + 1))
        self.ez = np.zeros((nx + 1, ny + 1, nz))
        self.hx = np.zeros((nx + 1, ny, nz))
        self.hy = np.zeros((nx, ny + 1, nz))
        self.hz = np.zeros((nx, ny, nz + 1))
        self.step_count = 0
        self._last_source = 0.0
        self.cpml = Cpml(grid, self.dt) if boundary == "cpml" else None
        self.point_sources: List[Tuple[str, Tuple[int, int, int], Callable[[float], float]]] = []

        dt = self.dt
        self._eps_edges = {}
        self._ca, self._cb = {}, {}
        for name, axis in (("ex", 0), ("ey", 1), ("ez", 2)):
            eps = config.EPS_0 * _average_edges(material.eps_r, axis)
            sig = _average_edges(material.sigma, axis)
            loss = sig * dt / (2.0 * eps)
            self._eps_edges[name] = eps
            self._ca[name] = (1.0 - loss) / (1.0 + loss)
            self._cb[name] = (dt / eps) / (1.0 + loss)
        for name, pec in (("ex", material.pec_x[:, 1:ny, 1:nz]), ("ey", material.pec_y[1:nx, :, 1:nz])):
            self._ca[name][pec] = 0.0
            self._cb[name][pec] = 0.0

        self.port = port
        self.pulse = pulse
        if port is not None:
            self._setup_port(port)

    def _setup_port(self, port: PortPlacement) -> None:
        g = self.grid
        if not (1 <= port.i_lo <= port.i_hi <= g.nx - 1 and 1 <= port.j <= g.ny - 1
                and 0 <= port.k_lo < port.k_hi <= g.nz):
            raise GridFitError("port edges fall outside the grid interior")
        # interior Ez index is (i - 1, j - 1, k)
        self._port_index = (slice(port.i_lo - 1, port.i_hi), port.j - 1, slice(port.k_lo, port.k_hi))
        r_edge = port.resistance * port.n_parallel / port.n_series
        eps = self._eps_edges["ez"][self._port_index]
        loss_total = (1.0 - self._ca["ez"][self._port_index]) / (1.0 + self._ca["ez"][self._port_index])
        beta = self.dt * g.dz / (2.0 * r_edge * eps * g.dx * g.dy)
        denom = 1.0 + loss_total + beta
        self._ca["ez"][self._port_index] = (1.0 - loss_total - beta) / denom
        self._cb["ez"][self._port_index] = (self.dt / eps) / denom
        self._port_source = (self.dt / (r_edge * eps * g.dx * g.dy)) / denom
        self._port_series = port.n_series

    # --- sources and field samplers

    def add_point_source(self, component: str, index: Tuple[int, int, int],
                         waveform: Callable[[float], float]) -> None:
        """Soft source added to one E sample after each update."""
        self.point_sources.append((component, tuple(index), waveform))

    @property
    def fields(self) -> dict:
        return {"ex": self.ex, "ey": self.ey, "ez": self.ez, "hx": self.hx, "hy": self.hy, "hz": self.hz}

    def port_voltage(self) -> float:
        """Mean over the parallel columns of sum(Ez dz)."""
        p = self.port
        column = self.ez[p.i_lo:p.i_hi + 1, p.j, p.k_lo:p.k_hi].sum(axis=1) * self.grid.dz
        return float(column.mean())

    # --- updates

    def _stretch(self, field: str, axis: int, derivative: np.ndarray) -> np.ndarray:
        if self.cpml is None:
            return derivative
        return self.cpml(field, axis, derivative)

    def _update_h(self) -> None:
        g = self.grid
        c = self.dt / config.MU_0
        ex, ey, ez = self.ex, self.ey, self.ez
        self.hx -= c * (self._stretch("hx", 1, np.diff(ez, axis=1) / g.dy)
                        - self._stretch("hx", 2, np.diff(ey, axis=2) / g.dz))
        self.hy -= c * (self._stretch("hy", 2, np.diff(ex, axis=2) / g.dz)
                        - self._stretch("hy", 0, np.diff(ez, axis=0) / g.dx))
        self.hz -= c * (self._stretch("hz", 0, np.diff(ey, axis=0) / g.dx)
                        - self._stretch("hz", 1, np.diff(ex, axis=1) / g.dy))

    def _update_e(self, port_voltage: float) -> None:
        g = self.grid
        nx, ny, nz = g.nx, g.ny, g.nz
        hx, hy, hz = self.hx, self.hy, self.hz

        curl = (self._stretch("ex", 1, np.diff(hz, axis=1)[:, :, 1:nz] / g.dy)
                - self._stretch("ex", 2, np.diff(hy, axis=2)[:, 1:ny, :] / g.dz))
        inner = self.ex[:, 1:ny, 1:nz]
        inner *= self._ca["ex"]
        inner += self._cb["ex"] * curl

        curl = (self._stretch("ey", 2, np.diff(hx, axis=2)[1:nx, :, :] / g.dz)
                - self._stretch("ey", 0, np.diff(hz, axis=0)[:, :, 1:nz] / g.dx))
        inner = self.ey[1:nx, :, 1:nz]
        inner *= self._ca["ey"]
        inner += self._cb["ey"] * curl

        curl = (self._stretch("ez", 0, np.diff(hy, axis=0)[:, 1:ny, :] / g.dx)
                - self._stretch("ez", 1, np.diff(hx, axis=1)[1:nx, :, :] / g.dy))
        inner = self.ez[1:nx, 1:ny, :]
        inner *= self._ca["ez"]
        inner += self._cb["ez"] * curl
        if self.port is not None and port_voltage != 0.0:
            inner[self._port_index] += self._port_source * (port_voltage / self._port_series)

    def step(self) -> None:
        t_half = (self.step_count + 0.5) * self.dt
        source = 0.0
        if self.port is not None and self.pulse is not None:
            source = self.port.polarity * float(self.pulse(t_half))
        self._last_source = source
        self._update_h()
        self._update_e(source)
        self.step_count += 1
        t = self.step_count * self.dt
        for component, index, waveform in self.point_sources:
            getattr(self, component)[index] += waveform(t)

    def energy(self, e_previous: dict) -> float:
        """Discrete energy 1/2 sum eps E^n . E^{n+1} + 1/2 sum mu |H^{n+1/2}|^2.

        e_previous holds E^n; the solver holds E^{n+1} and H^{n+1/2}. Conserved exactly
        by the leapfrog in a lossless PEC box without sources.
        """
        g = self.grid
        dv = g.dx * g.dy * g.dz
        nx, ny, nz = g.nx, g.ny, g.nz
        inner = {"ex": (slice(None), slice(1, ny), slice(1, nz)),
                 "ey": (slice(1, nx), slice(None), slice(1, nz)),
                 "ez": (slice(1, nx), slice(1, ny), slice(None))}
        total = 0.0
        for name, sl in inner.items():
            now = getattr(self, name)[sl]
            total += 0.5 * float(np.sum(self._eps_edges[name] * e_previous[name][sl] * now))
        for h in (self.hx, self.hy, self.hz):
            total += 0.5 * config.MU_0 * float(np.sum(h * h))
        return total * dv

    def check_finite(self, threshold: float = config.BLOWUP_THRESHOLD) -> None:
        for name, arr in self.fields.items():
            peak = float(np.max(np.abs(arr))) if arr.size else 0.0
            if not math.isfinite(peak) or peak > threshold:
                raise SolverDivergenceError(
                    f"field {name} reached {peak:.3g} at step {self.step_count} (threshold {threshold:.3g})")


# --- driver ---------------------------------------------------------------

FPFD_MAGIC = b"FPFD"
FPFD_VERSION = 1


def dump_fields(solver: YeeSolver, path: Union[str, Path]) -> None:
    """Binary dump: magic, u32 version, u32 nx/ny/nz, then Ex Ey Ez Hx Hy Hz as f64 LE."""
    g = solver.grid
    with open(path, "wb") as fh:
        fh.write(FPFD_MAGIC)
        fh.write(struct.pack("<4I", FPFD_VERSION, g.nx, g.ny, g.nz))
        for arr in solver.fields.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_field_dump(path: Union[str, Path]) -> dict:
    data = Path(path).read_bytes()
    if data[:4] != FPFD_MAGIC:
        raise ValueError("not an FPFD field dump")
    version, nx, ny, nz = struct.unpack("<4I", data[4:20])
    if version != FPFD_VERSION:
        raise ValueError(f"unsupported FPFD version {version}")
    shapes = {
        "ex": (nx, ny + 1, nz + 1), "ey": (nx + 1, ny, nz + 1), "ez": (nx + 1, ny + 1, nz),
        "hx": (nx + 1, ny, nz), "hy": (nx, ny + 1, nz), "hz": (nx, ny, nz + 1),
    }
    out, offset = {}, 20
    for name, shape in shapes.items():
        count = int(np.prod(shape))
        out[name] = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape)
        offset += 8 * count
    return out


def run_simulation(material: MaterialGrid, grid: GridSpec, port: PortPlacement,
                   frequencies: Sequence[float] = (), pulse: Optional[GaussianPulse] = None,
                   boundary: str = "cpml", dump_path: Optional[Union[str, Path]] = None,
                   blowup_threshold: float = config.BLOWUP_THRESHOLD,
                   decay_threshold: float = config.DECAY_THRESHOLD,
                   progress_every: int = config.PROGRESS_EVERY) -> Tuple[PortRecord, Optional[FieldSnapshotSurface]]:
    """Runs grid.n_steps leapfrog steps and returns the port series and surface phasors."""
    pulse = pulse or GaussianPulse()
    solver = YeeSolver(grid, material, boundary=boundary, port=port, pulse=pulse)
    recorder = None
    if len(frequencies):
        stride = max(1, int(1.0 / (20.0 * max(frequencies) * solver.dt)))
        recorder = SurfaceRecorder(grid, frequencies, stride=stride)

    n = grid.n_steps
    voltage = np.empty(n)
    source = np.empty(n)
    fields = solver.fields
    v_prev = solver.port_voltage()
    logging.info(f"FDTD 開始: {grid.nx}x{grid.ny}x{grid.nz} cells, {n} steps, dt={solver.dt:.4g} s")
    for step in range(n):
        solver.step()
        if recorder is not None:
            recorder.record_h(step, fields)
            recorder.record_e(step + 1, fields)
        v_now = solver.port_voltage()
        voltage[step] = 0.5 * (v_prev + v_now)
        source[step] = solver._last_source
        v_prev = v_now
        if not math.isfinite(v_now) or abs(v_now) > blowup_threshold:
            raise SolverDivergenceError(f"port voltage diverged at step {step + 1}")
        if (step + 1) % 100 == 0:
            solver.check_finite(blowup_threshold)
        if progress_every and (step + 1) % progress_every == 0:
            logging.info(f"FDTD 進度: {step + 1}/{n}, |V|={abs(v_now):.3e}")

    current = (source - voltage) / port.resistance
    # reflected-wave voltage V - Vs/2
    reflected = np.abs(voltage - 0.5 * source)
    peak = float(reflected.max()) if n else 0.0
    tail = float(reflected[-max(n // 10, 1):].max()) if n else 0.0
    converged = peak == 0.0 or tail <= decay_threshold * peak
    if not converged:
        logging.warning(f"FDTD 未收斂: 尾端 {tail:.3e} > {decay_threshold:g} x 峰值 {peak:.3e}")
    if dump_path is not None:
        dump_fields(solver, dump_path)

    record = PortRecord(voltage=voltage, current=current, source=source, dt=solver.dt,
                        pulse_center=pulse.center, pulse_bandwidth=pulse.bandwidth,
                        z0=port.resistance, converged=converged)
    return record, (recorder.snapshot() if recorder is not None else None)
