"""Transmission-line model of a rectangular microstrip patch.

Forward design equations (width, effective permittivity, fringing length
extension, physical length) and their inverse, the cavity-model resonance
estimate for a given footprint.
"""
import logging
import math

from .config import SPEED_OF_LIGHT
from .exceptions import NonPhysicalError, PoleError
from .schemas import DesignInputs, PatchDimensions, SubstrateSpec


# eps_eff value where the length-extension denominator vanishes
_POLE = 0.258


def patch_width(inputs: DesignInputs) -> float:
    """W = c / (2 f_r sqrt((eps_r + 1) / 2))"""
    return SPEED_OF_LIGHT / (2.0 * inputs.f_r * math.sqrt((inputs.eps_r + 1.0) / 2.0))


def effective_permittivity(inputs: DesignInputs, width_W: float) -> float:
    if not width_W > 0:
        raise ValueError("width_W must be positive")
    er = inputs.eps_r
    return (er + 1.0) / 2.0 + (er - 1.0) / 2.0 / math.sqrt(1.0 + 12.0 * inputs.height_h / width_W)


def length_extension(eps_eff: float, width_W: float, height_h: float) -> float:
    if eps_eff <= _POLE:
        raise PoleError(f"eps_eff = {eps_eff} is at or below the pole at {_POLE}")
    w_h = width_W / height_h
    return 0.412 * height_h * ((eps_eff + 0.3) * (w_h + 0.264)) / ((eps_eff - _POLE) * (w_h + 0.8))


def patch_length(inputs: DesignInputs, eps_eff: float, delta_L: float) -> float:
    length = SPEED_OF_LIGHT / (2.0 * inputs.f_r * math.sqrt(eps_eff)) - 2.0 * delta_L
    if length <= 0:
        raise NonPhysicalError(
            f"patch length {length:.6g} m is not positive at f_r = {inputs.f_r:.6g} Hz")
    return length


def predict_resonance(length_L: float, eps_eff: float, delta_L: float) -> float:
    """Inverse of patch_length: f_r = c / (2 (L + 2 dL) sqrt(eps_eff))."""
    if not length_L > 0:
        raise ValueError("length_L must be positive")
    return SPEED_OF_LIGHT / (2.0 * (length_L + 2.0 * delta_L) * math.sqrt(eps_eff))


def design_patch(inputs: DesignInputs) -> PatchDimensions:
    """Runs the four design equations in order."""
    width = patch_width(inputs)
    eps_eff = effective_permittivity(inputs, width)
    delta = length_extension(eps_eff, width, inputs.height_h)
    length = patch_length(inputs, eps_eff, delta)
    logging.debug(f"設計結果: W={width * 1e3:.3f} mm, eps_eff={eps_eff:.4f}, "
                  f"dL={delta * 1e3:.4f} mm, L={length * 1e3:.3f} mm")
    return PatchDimensions(width_W=width, length_L=length, eps_eff=eps_eff,
                           delta_L=delta, design_freq_fr=inputs.f_r)


def patch_from_geometry(width_W: float, length_L: float, substrate: SubstrateSpec) -> PatchDimensions:
    """PatchDimensions for a fixed footprint; the design frequency is the cavity-model prediction.

    eps_eff depends only on W and h, so no iteration is needed.
    """
    inputs = DesignInputs(f_r=1.0, eps_r=substrate.eps_r, height_h=substrate.height_h)
    eps_eff = effective_permittivity(inputs, width_W)
    delta = length_extension(eps_eff, width_W, substrate.height_h)
    f_r = predict_resonance(length_L, eps_eff, delta)
    return PatchDimensions(width_W=width_W, length_L=length_L, eps_eff=eps_eff,
                           delta_L=delta, design_freq_fr=f_r)


def cavity_resonance(width_W: float, length_L: float, substrate: SubstrateSpec) -> float:
    return patch_from_geometry(width_W, length_L, substrate).design_freq_fr
