"""Port-signal post-processing: S11, return loss, VSWR, resonances, band summaries.

Return loss follows the plotting convention RL = 20 log10|Gamma| (negative dB
for a matched antenna).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import signal

from . import config
from .exceptions import DegenerateSpectrumError, OutOfRangeError
from .schemas import BandSummary, Resonance, TargetMetrics


PASSIVITY_TOLERANCE = 0.02
# |a(f)| below this fraction of its upper bound sum|a(t)| dt counts as no excitation
NOISE_FLOOR = 1e-6
# DFT round-off leaves an open or short at |Gamma| = 1 - 1e-16; VSWR snaps to +inf there
UNIT_GAMMA_TOLERANCE = 1e-12


@dataclass
class FrequencyResponse:
    frequencies: np.ndarray
    gamma: np.ndarray
    z0: float = config.REFERENCE_IMPEDANCE
    passivity_violations: List[int] = field(default_factory=list)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=complex)
        if self.frequencies.shape != self.gamma.shape:
            raise ValueError("frequencies and gamma must have the same length")
        if self.frequencies.size and np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if not self.passivity_violations:
            self.passivity_violations = np.flatnonzero(
                np.abs(self.gamma) > 1.0 + PASSIVITY_TOLERANCE).tolist()

    @property
    def z_in(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.z0 * (1.0 + self.gamma) / (1.0 - self.gamma)

    @property
    def return_loss_db(self) -> np.ndarray:
        return return_loss_db(self.gamma)

    @property
    def vswr(self) -> np.ndarray:
        return vswr(self.gamma)

    def gamma_at(self, frequency: float) -> complex:
        f = self.frequencies
        if not f[0] - 1e-6 <= frequency <= f[-1] + 1e-6:
            raise OutOfRangeError(
                f"target {frequency / 1e9:.4g} GHz is outside the sweep "
                f"{f[0] / 1e9:.4g}-{f[-1] / 1e9:.4g} GHz")
        re = np.interp(frequency, f, self.gamma.real)
        im = np.interp(frequency, f, self.gamma.imag)
        return complex(re, im)


def return_loss_db(gamma):
    """20 log10|Gamma|; -inf at Gamma = 0."""
    mag = np.abs(np.asarray(gamma))
    with np.errstate(divide="ignore"):
        out = 20.0 * np.log10(mag)
    return float(out) if np.ndim(out) == 0 else out


def vswr(gamma):
    """(1 + |Gamma|) / (1 - |Gamma|); +inf once |Gamma| is within UNIT_GAMMA_TOLERANCE of 1."""
    mag = np.abs(np.asarray(gamma, dtype=complex))
    out = np.full(mag.shape, math.inf)
    ok = mag < 1.0 - UNIT_GAMMA_TOLERANCE
    out[ok] = (1.0 + mag[ok]) / (1.0 - mag[ok])
    return float(out) if np.ndim(out) == 0 else out


def gamma_from_return_loss(rl_db: float) -> float:
    return 10.0 ** (rl_db / 20.0)


# --- extraction -----------------------------------------------------------

def _dft(signal: np.ndarray, times: np.ndarray, dt: float, frequencies: np.ndarray,
         chunk: int = 64) -> np.ndarray:
    out = np.empty(frequencies.size, dtype=complex)
    for start in range(0, frequencies.size, chunk):
        f = frequencies[start:start + chunk]
        kernel = np.exp(-2j * math.pi * np.outer(f, times))
        out[start:start + chunk] = kernel @ signal * dt
    return out


def port_spectra(record, frequencies: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """DFT of the port voltage and current."""
    freqs = np.asarray(frequencies, dtype=float)
    times = record.times
    return (_dft(record.voltage, times, record.dt, freqs),
            _dft(record.current, times, record.dt, freqs))


def accepted_power(record, frequencies: Sequence[float]) -> np.ndarray:
    v, i = port_spectra(record, frequencies)
    return 0.5 * np.real(v * np.conj(i))


def extract_response(record, frequencies: Sequence[float]) -> FrequencyResponse:
    """Gamma = B/A from the incident / reflected power waves at the port."""
    freqs = np.asarray(frequencies, dtype=float)
    z0 = record.z0
    root = 2.0 * math.sqrt(z0)
    a_t = (record.voltage + z0 * record.current) / root
    b_t = (record.voltage - z0 * record.current) / root
    bound = float(np.sum(np.abs(a_t)) * record.dt)
    if bound == 0.0:
        raise DegenerateSpectrumError("port record carries no incident wave")
    times = record.times
    a_f = _dft(a_t, times, record.dt, freqs)
    b_f = _dft(b_t, times, record.dt, freqs)
    weak = np.flatnonzero(np.abs(a_f) < NOISE_FLOOR * bound)
    if weak.size:
        raise DegenerateSpectrumError(
            f"incident spectrum below the noise floor at {freqs[weak[0]] / 1e9:.4g} GHz "
            f"({weak.size} of {freqs.size} frequencies)")
    response = FrequencyResponse(freqs, b_f / a_f, z0)
    if response.passivity_violations:
        worst = float(np.max(np.abs(response.gamma)))
        logging.warning(f"被動性違反: {len(response.passivity_violations)} 個頻點 |Gamma| > "
                        f"{1 + PASSIVITY_TOLERANCE:g} (max {worst:.4f})")
    if not getattr(record, "converged", True):
        logging.warning("埠訊號未完全衰減, S11 可能有截斷誤差")
    return response


# --- resonances -----------------------------------------------------------

def _crossing(f: np.ndarray, y: np.ndarray, i: int, j: int, level: float) -> float:
    """Frequency where y crosses level between samples i and j."""
    if not (math.isfinite(y[i]) and math.isfinite(y[j])) or y[i] == y[j]:
        return float(f[j])
    return float(f[i] + (level - y[i]) * (f[j] - f[i]) / (y[j] - y[i]))


def _refine(f: np.ndarray, rl: np.ndarray, i: int) -> Tuple[float, float]:
    """Parabolic vertex through the three samples around a sampled minimum."""
    f_res, rl_min = float(f[i]), float(rl[i])
    if 0 < i < f.size - 1 and np.all(np.isfinite(rl[i - 1:i + 2])):
        y0, y1, y2 = rl[i - 1], rl[i], rl[i + 1]
        curvature = y0 - 2.0 * y1 + y2
        if curvature > 0:
            p = 0.5 * (y0 - y2) / curvature
            f_res = float(f[i] + p * 0.5 * (f[i + 1] - f[i - 1]))
            rl_min = float(y1 - 0.25 * (y0 - y2) * p)
    return f_res, rl_min


def _minima(rl: np.ndarray, start: int, stop: int) -> List[int]:
    """Local minima of rl[start:stop]; a run without an interior minimum keeps its lowest sample."""
    # -inf (perfect match) would break the peak comparison
    depth = -np.where(np.isfinite(rl), rl, -1e3)
    peaks, _ = signal.find_peaks(depth)
    inside = [int(p) for p in peaks if start <= p < stop]
    return inside or [int(start + np.argmin(rl[start:stop]))]


def find_resonances(resp: FrequencyResponse, threshold_db: float = -10.0) -> List[Resonance]:
    """Every local RL minimum below threshold, ascending.

    Two minima inside one sub-threshold run share it; the run is split at the
    RL maximum between them, so neighbouring bands meet at that frequency.
    """
    f = resp.frequencies
    rl = np.asarray(resp.return_loss_db, dtype=float)
    below = rl < threshold_db
    padded = np.concatenate(([False], below, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    out: List[Resonance] = []
    for start, stop in zip(edges[0::2], edges[1::2]):
        minima = _minima(rl, int(start), int(stop))
        splits = [int(a + np.argmax(rl[a:b + 1])) for a, b in zip(minima[:-1], minima[1:])]
        lows = [float(f[start]) if start == 0 else _crossing(f, rl, start - 1, start, threshold_db)]
        lows += [float(f[s]) for s in splits]
        highs = [float(f[s]) for s in splits]
        highs.append(float(f[stop - 1]) if stop == f.size else _crossing(f, rl, stop - 1, stop, threshold_db))
        for i, f_low, f_high in zip(minima, lows, highs):
            f_res, rl_min = _refine(f, rl, i)
            out.append(Resonance(f_res=f_res, rl_min_db=rl_min, f_low=f_low, f_high=f_high))
    if len(out) > 1:
        logging.debug(f"偵測到 {len(out)} 個共振: " + ", ".join(f"{r.f_res / 1e9:.3f} GHz" for r in out))
    return out


# --- summaries ------------------------------------------------------------

def _pct(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return value


def compare_target(row: TargetMetrics, base: TargetMetrics) -> TargetMetrics:
    """Signed percentage changes against the baseline; positive means better."""
    rl_change = vswr_change = gain_change = None
    if base.return_loss_db != 0 and math.isfinite(base.return_loss_db):
        rl_change = (abs(row.return_loss_db) - abs(base.return_loss_db)) / abs(base.return_loss_db) * 100.0
    if math.isfinite(base.vswr):
        vswr_change = (base.vswr - row.vswr) / base.vswr * 100.0
    if base.gain_dbi != 0 and math.isfinite(base.gain_dbi):
        gain_change = (row.gain_dbi - base.gain_dbi) / abs(base.gain_dbi) * 100.0
    changes = {"rl_change_pct": _pct(rl_change), "vswr_change_pct": _pct(vswr_change),
               "gain_change_pct": _pct(gain_change)}
    regressions = [name for name, key in (("return_loss", "rl_change_pct"), ("vswr", "vswr_change_pct"),
                                          ("gain", "gain_change_pct"))
                   if changes[key] is not None and changes[key] < 0]
    return row.model_copy(update={**changes, "regressions": regressions})


def compare(summary: BandSummary, baseline: BandSummary) -> BandSummary:
    rows = [compare_target(row, baseline.at(row.frequency_hz)) for row in summary.targets]
    return summary.model_copy(update={"targets": rows})


def summarize_bands(resp: FrequencyResponse, gains: Union[Mapping[float, float], Sequence[float]],
                    targets: Sequence[float], baseline: Optional[BandSummary] = None,
                    threshold_db: float = -10.0) -> BandSummary:
    """RL, VSWR and gain at each target plus the detected resonances."""
    if isinstance(gains, Mapping):
        gain_list = [float(gains[t]) for t in targets]
    else:
        gain_list = [float(g) for g in gains]
    if len(gain_list) != len(targets):
        raise ValueError("one gain value per target is required")
    rows = []
    for target, gain in zip(targets, gain_list):
        gamma = resp.gamma_at(target)
        rows.append(TargetMetrics(frequency_hz=float(target), return_loss_db=return_loss_db(gamma),
                                  vswr=vswr(gamma), gain_dbi=gain))
    summary = BandSummary(targets=rows, resonances=find_resonances(resp, threshold_db))
    if baseline is not None:
        summary = compare(summary, baseline)
    return summary
