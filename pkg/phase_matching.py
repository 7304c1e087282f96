"""
Energy and momentum conservation for the three wave-mixing processes of the
line: circulation (forward Sigma signal -> backward Sigma idler at
omega_s + 2 omega_p through two backward pump photons), its aliased branch
(momentum matched modulo 2 pi / a) and the tunable coupling (same-frequency
reflection between two counterpropagating pumps).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy import optimize

import dispersion
from dispersion import ModeId
from errors import NoSolutionInBand, PumpAboveCutoff

logger = logging.getLogger(__name__)

GRID_STEP = 2 * math.pi * 10e6  # bracketing grid, rad/s
RESIDUAL_TOL = 1e-10  # rad/cell
DIRECTIONS = ("forward", "backward")


class ProcessKind(str, Enum):
    Circulation = "Circulation"
    CirculationAliased = "CirculationAliased"
    TunableCoupling = "TunableCoupling"

    def __str__(self):
        return self.value

    @property
    def label(self):
        return {"Circulation": "Ci", "CirculationAliased": "Al", "TunableCoupling": "Co"}[self.value]


@dataclass(frozen=True)
class MatchPoint:
    kind: ProcessKind
    direction: str
    omega_s: float
    omega_i: float
    omega_p: float
    k_s: float
    k_i: float
    k_p: float
    kappa: float = 0.0
    delta: float = 0.0

    @property
    def omega_probe(self):
        """Frequency at which a probe sent in `direction` meets this gap."""
        if self.kind == ProcessKind.TunableCoupling:
            return self.omega_s
        lower_is_forward = self.kind == ProcessKind.Circulation
        if (self.direction == "forward") == lower_is_forward:
            return self.omega_s
        return self.omega_i


def circulation_point_lowfreq(omega_p, v_sigma, v_delta):
    assert v_sigma >= v_delta > 0, "needs a fast Sigma mode and a slow Delta mode"
    v_s, v_i, v_p = v_sigma, -v_sigma, -v_delta
    omega_s = 2 * omega_p * (1 / v_i - 1 / v_p) / (1 / v_s - 1 / v_i)
    return omega_s, omega_s + 2 * omega_p


def coupler_point_lowfreq(omega_p, v_sigma, v_delta):
    assert v_sigma >= v_delta > 0, "needs a fast Sigma mode and a slow Delta mode"
    return omega_p * abs(v_sigma / v_delta)


class _Residual(object):
    """
    Momentum mismatch of one process as a function of omega_s, for a fixed pump.

    `epsilon_p` is one pump amplitude, or for the tunable coupling a
    (forward, backward) pair of counterpropagating pumps. A pair renormalizes
    the Sigma inductance through both Bessel factors and matches the signal to
    the mean of the two pump wavevectors.
    """

    def __init__(self, kind, omega_p, epsilon_p, cell):
        self.kind = ProcessKind(kind)
        self.omega_p = omega_p
        self.cell = cell
        if isinstance(epsilon_p, (tuple, list)):
            if self.kind != ProcessKind.TunableCoupling:
                raise ValueError(f"{self.kind}: a (forward, backward) pump pair only drives the tunable coupling")
            self.k_p, self.l_sigma = self._pump_pair(omega_p, *epsilon_p)
        else:
            self.k_p = dispersion.pump_wavevector(omega_p, epsilon_p, cell)
            renorm = dispersion.PumpContext(epsilon_p, self.k_p, ModeId.Delta)
            self.l_sigma = dispersion.effective_inductance(ModeId.Sigma, cell, renorm)
        if self.kind == ProcessKind.TunableCoupling:
            self.upper = dispersion.cutoff(ModeId.Sigma, cell, self.l_sigma)
        else:
            self.upper = dispersion.cutoff(ModeId.Sigma, cell, self.l_sigma) - 2 * omega_p

    def _pump_pair(self, omega_p, epsilon_fw, epsilon_bw):
        k_fw = dispersion.pump_wavevector(omega_p, epsilon_fw, self.cell)
        k_bw = dispersion.pump_wavevector(omega_p, epsilon_bw, self.cell)
        l_sigma = dispersion.xpm_inductance(self.cell.l_j, epsilon_fw, k_fw)
        l_sigma = dispersion.xpm_inductance(l_sigma, epsilon_bw, k_bw)
        return (k_fw + k_bw) / 2, l_sigma

    def k_sigma(self, omega):
        return dispersion.wavevector_array(ModeId.Sigma, omega, self.cell, self.l_sigma)

    def __call__(self, omega_s):
        k_p = self.k_p
        if self.kind == ProcessKind.Circulation:
            return self.k_sigma(omega_s) + self.k_sigma(omega_s + 2 * self.omega_p) - 2 * k_p
        if self.kind == ProcessKind.CirculationAliased:
            return self.k_sigma(omega_s) + self.k_sigma(omega_s + 2 * self.omega_p) + 2 * k_p - 2 * math.pi / self.cell.a
        return self.k_sigma(omega_s) - k_p

    def match_point(self, omega_s, direction):
        k_s = float(self.k_sigma(omega_s))
        if self.kind == ProcessKind.TunableCoupling:
            omega_i, k_i, k_p = omega_s, -k_s, -self.k_p
        else:
            omega_i = omega_s + 2 * self.omega_p
            k_i = -float(self.k_sigma(omega_i))
            k_p = -self.k_p
            if self.kind == ProcessKind.CirculationAliased:
                # the signal co-propagates with the pump and folds into a forward idler
                k_s, k_i = -k_s, -k_i
        return MatchPoint(kind=self.kind, direction=direction, omega_s=omega_s, omega_i=omega_i,
                          omega_p=self.omega_p, k_s=k_s, k_i=k_i, k_p=k_p,
                          kappa=float(self(omega_s)), delta=0.0)


def momentum_residual(kind, omega_s, omega_p, epsilon_p, cell):
    return float(_Residual(kind, omega_p, epsilon_p, cell)(omega_s))


def bracket_roots(f, lower, upper, step=GRID_STEP):
    """Sign changes of f on a uniform grid over (lower, upper); nan points are skipped."""
    grid = np.arange(lower + step, upper, step)
    grid = np.append(grid, upper * (1 - 1e-12))
    values = f(grid)
    ok = np.flatnonzero(np.isfinite(values))
    brackets = []
    for a, b in zip(ok[:-1], ok[1:]):
        if b != a + 1:
            continue
        if values[a] == 0:
            brackets.append((grid[a], grid[a]))
        elif values[a] * values[b] < 0:
            brackets.append((grid[a], grid[b]))
    return brackets


def solve_corrected(kind, omega_p, epsilon_p, cell, direction="forward", step=GRID_STEP):
    """
    All phase-matched signal frequencies for a pump (omega_p, epsilon_p), ascending.
    epsilon_p may be a (forward, backward) pair for the tunable coupling.
    """
    assert direction in DIRECTIONS
    residual = _Residual(kind, omega_p, epsilon_p, cell)
    if residual.upper <= 0:
        raise NoSolutionInBand(f"{kind}: idler band empty for f_p={omega_p / 2e9 / math.pi:.4g} GHz")

    points = []
    for a, b in bracket_roots(residual, 0.0, residual.upper, step):
        if a == b:
            root = a
        else:
            root = optimize.bisect(lambda w: float(residual(w)), a, b,
                                   xtol=1e-6, rtol=4 * np.finfo(float).eps, maxiter=200)
        point = residual.match_point(root, direction)
        if abs(point.kappa) > RESIDUAL_TOL:
            logger.warning(f"{kind} root at {root / 2e9 / math.pi:.6f} GHz left residual {point.kappa:.2e}")
        points.append(point)
    if not points:
        raise NoSolutionInBand(f"{kind}: no phase-matched signal below cutoff for "
                               f"f_p={omega_p / 2e9 / math.pi:.4g} GHz")
    logger.debug(f"{kind} f_p={omega_p / 2e9 / math.pi:.4f} GHz: "
                 f"{[round(p.omega_s / 2e9 / math.pi, 6) for p in points]} GHz")
    return points


def gap_map(kinds, pump_grid, cell, epsilon_p=0.0, directions=DIRECTIONS, threads=1):
    """
    Gap overlay curves.

    :param kinds: iterable of ProcessKind
    :param pump_grid: pump angular frequencies (rad/s)
    :return: dict (kind, direction) -> array of (f_pump_GHz, f_probe_GHz) rows,
             ordered by pump frequency then probe frequency
    """
    kinds = [ProcessKind(k) for k in kinds]
    tasks = [(kind, float(w)) for kind in kinds for w in pump_grid]

    def solve(task):
        kind, omega_p = task
        try:
            return solve_corrected(kind, omega_p, epsilon_p, cell)
        except (NoSolutionInBand, PumpAboveCutoff) as e:
            logger.debug(f"gap map: {e}")
            return []

    with ThreadPoolExecutor(max_workers=max(int(threads), 1)) as executor:
        results = list(executor.map(solve, tasks))

    curves = {}
    for kind in kinds:
        for direction in directions:
            curves[(kind, direction)] = []
    for (kind, omega_p), points in zip(tasks, results):
        for direction in directions:
            for p in points:
                probe = replace(p, direction=direction).omega_probe
                curves[(kind, direction)].append((omega_p / 2e9 / math.pi, probe / 2e9 / math.pi))
    return {key: np.array(sorted(rows)).reshape(-1, 2) for key, rows in curves.items()}
