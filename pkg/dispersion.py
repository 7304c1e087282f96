"""
Dispersion of the Sigma (common) and Delta (differential) modes of the
lumped line, with the pump-induced Bessel renormalisation of the junction
inductance (self phase modulation for the pump, cross phase modulation for
weak waves).
"""

import functools
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize, special

from errors import AboveCutoff, AmplitudeOutOfRange, PumpAboveCutoff

logger = logging.getLogger(__name__)


class ModeId(str, Enum):
    Sigma = "Sigma"
    Delta = "Delta"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PumpContext:
    epsilon_p: float
    k_p: float
    mode: ModeId = ModeId.Delta

    def __post_init__(self):
        assert self.epsilon_p >= 0, "pump amplitude must be non-negative"


@functools.lru_cache(maxsize=None)
def spm_bound():
    """x at which 2 J1(x)/x falls to 0.5."""
    return optimize.brentq(lambda x: 2 * special.j1(x) / x - 0.5, 0.5, 3.8)


@functools.lru_cache(maxsize=None)
def xpm_bound():
    """x at which J0(x) falls to 0.5."""
    return optimize.brentq(lambda x: special.j0(x) - 0.5, 0.5, 2.4)


def _bessel_argument(epsilon, ka):
    return 4 * epsilon * math.sin(ka / 2)


def spm_inductance(l_j, epsilon, ka):
    x = _bessel_argument(epsilon, ka)
    if x == 0:
        return l_j
    if abs(x) > spm_bound():
        raise AmplitudeOutOfRange(f"self phase modulation argument {x:.4f} beyond {spm_bound():.4f}")
    return l_j * x / (2 * special.j1(x))


def xpm_inductance(l_j, epsilon, ka):
    x = _bessel_argument(epsilon, ka)
    if x == 0:
        return l_j
    if abs(x) > xpm_bound():
        raise AmplitudeOutOfRange(f"cross phase modulation argument {x:.4f} beyond {xpm_bound():.4f}")
    return l_j / special.j0(x)


def flux_from_amplitude(epsilon_p, k_p):
    """Peak junction flux, in units of the reduced flux quantum."""
    assert epsilon_p >= 0
    return 4 * epsilon_p * math.sin(k_p / 2)


def amplitude_from_flux(flux, k_p):
    return flux / (4 * math.sin(k_p / 2))


def to_flux_quanta(flux):
    return flux / (2 * math.pi)


def from_flux_quanta(flux_quanta):
    return flux_quanta * 2 * math.pi


def effective_inductance(mode, cell, renorm=None, self_modulated=None):
    """Junction inductance seen by a wave on `mode` in presence of the pump `renorm`."""
    if renorm is None or renorm.epsilon_p == 0:
        return cell.l_j
    if self_modulated is None:
        self_modulated = ModeId(mode) == ModeId(renorm.mode)
    if self_modulated:
        return spm_inductance(cell.l_j, renorm.epsilon_p, renorm.k_p)
    return xpm_inductance(cell.l_j, renorm.epsilon_p, renorm.k_p)


def cutoff(mode, cell, l_j=None):
    l_j = cell.l_j if l_j is None else l_j
    return 2 / math.sqrt(l_j * (cell.mode_capacitance(mode) + 4 * cell.c_j))


def _cos_ka(omega, c, l_j, c_j):
    w2 = np.square(omega)
    with np.errstate(divide='ignore', invalid='ignore'):
        return 1 + c * l_j * w2 / (-2 + 2 * c_j * l_j * w2)


def wavevector_array(mode, omega, cell, l_j=None):
    """Vectorised k(omega); nan wherever the wave does not propagate."""
    l_j = cell.l_j if l_j is None else l_j
    arg = _cos_ka(np.asarray(omega, dtype=float), cell.mode_capacitance(mode), l_j, cell.c_j)
    arg = np.where((arg < -1) & (arg > -1 - 1e-12), -1., arg)
    ok = (arg >= -1) & (arg <= 1) & (np.asarray(omega) > 0)
    return np.where(ok, np.arccos(np.clip(arg, -1, 1)), np.nan) / cell.a


def wavevector(mode, omega, cell, renorm=None, self_modulated=None):
    if omega <= 0:
        raise ValueError(f"angular frequency must be positive, got {omega}")
    l_j = effective_inductance(mode, cell, renorm, self_modulated)
    k = float(wavevector_array(mode, omega, cell, l_j))
    if math.isnan(k):
        raise AboveCutoff(ModeId(mode), omega, cutoff(mode, cell, l_j))
    return k


def group_velocity(mode, omega, cell, renorm=None):
    """d omega / dk in cell/ns."""
    l_j = effective_inductance(mode, cell, renorm)
    k = wavevector(mode, omega, cell, renorm)
    c = cell.mode_capacitance(mode)
    dk = c * l_j * omega / ((cell.c_j * l_j * omega ** 2 - 1) ** 2 * math.sin(k * cell.a))
    return 1e-9 / dk


def phase_velocity(mode, omega, cell, renorm=None):
    return omega / wavevector(mode, omega, cell, renorm) * 1e-9


def pump_wavevector(omega_p, epsilon_p, cell, mode=ModeId.Delta, tol=1e-14, max_iter=200):
    """Self-consistent pump wavevector: k solves k = k(omega_p; L_spm(epsilon_p, k))."""
    try:
        k = wavevector(mode, omega_p, cell)
        for it in range(max_iter):
            k_new = wavevector(mode, omega_p, cell, PumpContext(epsilon_p, k, mode))
            if abs(k_new - k) < tol:
                return k_new
            k = k_new
    except AboveCutoff as e:
        raise PumpAboveCutoff(str(e))
    logger.warning(f"pump wavevector fixed point stalled at |dk|={abs(k_new - k):.2e}")
    return k


def pump_context(omega_p, epsilon_p, cell, mode=ModeId.Delta):
    return PumpContext(epsilon_p, pump_wavevector(omega_p, epsilon_p, cell, mode), mode)


def nonlinear_phase_shift(mode, omega, cell, renorm, n_cells):
    """Extra transmission phase accumulated over the line because of the pump."""
    return n_cells * (wavevector(mode, omega, cell, renorm) - wavevector(mode, omega, cell))


def dispersion_table(omegas, cell):
    """Rows of (f_GHz, k_sigma, k_delta, v_sigma, v_delta); nan above cutoff."""
    omegas = np.asarray(omegas, dtype=float)
    k_s = wavevector_array(ModeId.Sigma, omegas, cell)
    k_d = wavevector_array(ModeId.Delta, omegas, cell)
    with np.errstate(invalid='ignore', divide='ignore'):
        v_s = omegas / k_s * 1e-9
        v_d = omegas / k_d * 1e-9
    return np.column_stack([omegas / (2 * np.pi * 1e9), k_s, k_d, v_s, v_d])
