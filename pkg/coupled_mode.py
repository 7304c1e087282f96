"""
Coupled envelope equations for a probe and its converted partner wave.

Waves are written eps(x) exp(i(omega t - k x)) with signed wavevectors in the
line frame (x grows from the left port). Within one phase-matched pair
(S, I) pumped by P:

    eps_S' = i c P* k_I eps_I
    eps_I' = i c P  k_S eps_S,      c = k_P**2 / 4

with P = eps_P**2 for the circulation processes and 2 eps_bw eps_fw* for the
tunable coupling.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

import dispersion
from errors import AmplitudeOutOfRange, SectionMismatch, WrongPropagationSigns
from phase_matching import ProcessKind

logger = logging.getLogger(__name__)

# dB; deeper sweep points sit at the numerical floor of the section solver
DB_FLOOR = -120.0

# waves of a line section as (direction sign, frequency slot); slot "a" is the
# frequency a forward probe is sent at, slot "b" its partner
_CIRCULATION_WAVES = ((+1, "a"), (-1, "b"), (-1, "a"), (+1, "b"))
_COUPLING_WAVES = ((+1, "a"), (-1, "a"))

# (S wave, I wave, pump) per pair, indices into the wave tuple above
_PAIRS = {
    ProcessKind.Circulation: ((0, 1, "bw"), (2, 3, "fw")),
    ProcessKind.CirculationAliased: ((1, 0, "bw"), (3, 2, "fw")),
    ProcessKind.TunableCoupling: ((0, 1, "both"),),
}


@dataclass(frozen=True)
class ProcessConfig:
    """
    One coupled-mode problem.

    k_s, k_i, k_p are the signed wavevectors of the phase-matched process as
    returned by the phase-matching solver. `sections` is a tuple of
    (start, end, pump_fw, pump_bw); empty means one section carrying
    (pump_fw, pump_bw) over [0, length]. Pump amplitudes are complex and share
    the phase origin x = 0.
    """
    kind: ProcessKind
    omega_p: float
    omega_s: float
    omega_i: float
    k_s: float
    k_i: float
    k_p: float
    pump_fw: complex = 0j
    pump_bw: complex = 0j
    length: float = 400.0
    sections: tuple = ()
    direction: str = "forward"

    @classmethod
    def from_match(cls, match, length=400.0, pump_fw=0j, pump_bw=0j, sections=()):
        return cls(kind=ProcessKind(match.kind), omega_p=match.omega_p, omega_s=match.omega_s,
                   omega_i=match.omega_i, k_s=match.k_s, k_i=match.k_i, k_p=match.k_p,
                   pump_fw=complex(pump_fw), pump_bw=complex(pump_bw), length=float(length),
                   sections=tuple(sections), direction=match.direction)

    def section_list(self):
        if not self.sections:
            return [(0.0, self.length, complex(self.pump_fw), complex(self.pump_bw))]
        return [(float(a), float(b), complex(f), complex(w)) for a, b, f, w in self.sections]

    def with_direction(self, direction):
        assert direction in ("forward", "backward")
        return replace(self, direction=direction)

    def scaled(self, amplitude):
        """Same pump profile with every pump amplitude multiplied by `amplitude`."""
        return replace(self,
                       pump_fw=self.pump_fw * amplitude,
                       pump_bw=self.pump_bw * amplitude,
                       sections=tuple((a, b, f * amplitude, w * amplitude) for a, b, f, w in self.sections))

    @property
    def coupling(self):
        return self.k_p ** 2 / 4

    @property
    def slot_frequencies(self):
        if self.kind == ProcessKind.CirculationAliased:
            return {"a": self.omega_i, "b": self.omega_s}
        return {"a": self.omega_s, "b": self.omega_i}

    @property
    def slot_wavevectors(self):
        if self.kind == ProcessKind.CirculationAliased:
            return {"a": abs(self.k_i), "b": abs(self.k_s)}
        return {"a": abs(self.k_s), "b": abs(self.k_i)}


@dataclass
class EnvelopeSolution:
    """
    Envelopes along the line, x counted in cells from the port the probe
    enters; eps_s is the probe, eps_i the converted wave leaving through
    that same port.
    """
    x: np.ndarray
    eps_s: np.ndarray
    eps_i: np.ndarray
    alpha: float
    total_attenuation: complex
    kappa: float
    k_s: float
    k_i: float

    @property
    def attenuation_db(self):
        return 20 * math.log10(abs(self.total_attenuation)) if self.total_attenuation != 0 else -math.inf

    def photon_flux(self):
        """k_s |eps_s|^2 + k_i |eps_i|^2 along x; conserved by the matched equations."""
        return self.k_s * np.abs(self.eps_s) ** 2 + self.k_i * np.abs(self.eps_i) ** 2


def _waves(kind):
    return _COUPLING_WAVES if kind == ProcessKind.TunableCoupling else _CIRCULATION_WAVES


def _pump_product(tag, pump_fw, pump_bw):
    if tag == "bw":
        return pump_bw ** 2
    if tag == "fw":
        return pump_fw ** 2
    return 2 * pump_bw * np.conj(pump_fw)


def _check_pumps(config):
    bound = dispersion.spm_bound()
    for j, (_, _, fw, bw) in enumerate(config.section_list()):
        for name, eps in (("pump_fw", fw), ("pump_bw", bw)):
            flux = dispersion.flux_from_amplitude(abs(eps), abs(config.k_p))
            if flux > bound:
                raise AmplitudeOutOfRange(f"section {j} {name}: junction flux {flux:.4f} beyond {bound:.4f}")


def _probe_frame(config, direction, pump_fw, pump_bw):
    """(k_probe > 0, k_conv < 0, effective pump product) for a probe sent in `direction`."""
    waves = _waves(config.kind)
    probe = 0 if direction == "forward" else waves.index((-1, "a"))
    kvec = config.slot_wavevectors
    for s_wave, i_wave, tag in _PAIRS[config.kind]:
        if probe in (s_wave, i_wave):
            q = _pump_product(tag, pump_fw, pump_bw)
            conv = i_wave if probe == s_wave else s_wave
            if probe != s_wave:
                q = np.conj(q)
            return kvec[waves[probe][1]], -kvec[waves[conv][1]], complex(q)
    raise AssertionError(f"no pair holds the {direction} probe")


def _alpha(c, q, k_s, k_i):
    if not k_s * k_i < 0:
        raise WrongPropagationSigns(f"signal and idler must counterpropagate, got k_s={k_s}, k_i={k_i}")
    return c * abs(q) * math.sqrt(-k_s * k_i)


def attenuation_constant(config, k_s=None, k_i=None, k_p=None):
    """Attenuation constant (1/cell) of the probe sent in config.direction, first section pumps."""
    k_s = config.k_s if k_s is None else k_s
    k_i = config.k_i if k_i is None else k_i
    k_p = config.k_p if k_p is None else k_p
    _, _, fw, bw = config.section_list()[0]
    _, _, q = _probe_frame(config, config.direction, fw, bw)
    return _alpha(k_p ** 2 / 4, q, k_s, k_i)


def total_attenuation(alpha_l):
    """eps_S(L) / eps_S(0) of a matched, reflectionless line."""
    return 2 * math.exp(-alpha_l) / (1 + math.exp(-2 * alpha_l))


def _grid(config, n_points):
    n_points = int(round(config.length)) + 1 if n_points is None else int(n_points)
    assert n_points >= 2
    return np.linspace(0.0, config.length, n_points)


def solve_uniform(config, eps_s0=1.0, n_points=None):
    if len(config.section_list()) != 1:
        raise SectionMismatch("closed-form envelopes need a single uniform section")
    _check_pumps(config)
    k_s, k_i, q = _probe_frame(config, config.direction, config.pump_fw, config.pump_bw)
    alpha = _alpha(config.coupling, q, k_s, k_i)
    length = config.length
    x = _grid(config, n_points)

    decay, growth = np.exp(-alpha * x), np.exp(-alpha * (2 * length - x))
    norm = 1 + math.exp(-2 * alpha * length)
    phase = np.exp(1j * np.angle(q)) if q != 0 else 1.0
    eps_s = eps_s0 * (decay + growth) / norm + 0j
    eps_i = -1j * phase * eps_s0 * math.sqrt(k_s / -k_i) * (decay - growth) / norm
    return EnvelopeSolution(x=x, eps_s=eps_s, eps_i=eps_i, alpha=alpha,
                            total_attenuation=complex(eps_s[-1] / eps_s0), kappa=0.0, k_s=k_s, k_i=k_i)


def _two_point_solve(m, x, eps_s0):
    """
    Solves y' = m y on the grid x with y[0](0) = eps_s0 and y[1](L) = 0 as
    one block-bidiagonal system built from exact step propagators.
    """
    n = len(x)
    step = linalg.expm(m * (x[1] - x[0]))
    identity = sparse.identity(2, format="csr")
    chain = sparse.kron(sparse.eye(n - 1, n, k=1), identity) - sparse.kron(sparse.eye(n - 1, n), sparse.csr_matrix(step))
    boundary = sparse.csr_matrix(([1.0, 1.0], ([0, 1], [0, 2 * n - 1])), shape=(2, 2 * n))
    a = sparse.vstack([chain, boundary]).tocsc()
    rhs = np.zeros(2 * n, dtype=complex)
    rhs[2 * n - 2] = eps_s0
    y = splinalg.spsolve(a, rhs)
    return y[0::2], y[1::2]


def solve_detuned(config, kappa, eps_s0=1.0, n_points=None):
    """
    Imperfectly matched pair, k_S + 2 k_P - k_I = kappa. Solved for
    eta = exp(-i kappa x) eps_I, which obeys a constant-coefficient system.

    The mismatch enters the first-order pair as exp(-i kappa x) on eps_S'
    and exp(+i kappa x) on eps_I', so the signal obeys

        eps_S'' + i kappa eps_S' - alpha^2 eps_S = 0.

    The opposite sign convention, eps_S'' - i kappa eps_S' - alpha^2 eps_S = 0,
    is solved by conj(eps_S) of this one at -kappa; |total_attenuation| is
    even in kappa either way.
    """
    if len(config.section_list()) != 1:
        raise SectionMismatch("detuned envelopes need a single uniform section")
    _check_pumps(config)
    k_s, k_i, q = _probe_frame(config, config.direction, config.pump_fw, config.pump_bw)
    c = config.coupling
    alpha = _alpha(c, q, k_s, k_i)
    x = _grid(config, n_points)
    m = np.array([[0, 1j * c * np.conj(q) * k_i],
                  [1j * c * q * k_s, -1j * kappa]], dtype=complex)
    eps_s, eta = _two_point_solve(m, x, eps_s0)
    eps_i = np.exp(1j * kappa * x) * eta
    return EnvelopeSolution(x=x, eps_s=eps_s, eps_i=eps_i, alpha=alpha,
                            total_attenuation=complex(eps_s[-1] / eps_s0), kappa=float(kappa), k_s=k_s, k_i=k_i)


def detuning_to_kappa(delta, v_sigma):
    """Momentum mismatch (rad/cell) of a probe detuned by delta (rad/s), v_sigma in cell/ns."""
    return 2 * delta / (v_sigma * 1e9)


def attenuation_vs_detuning(config, kappas, n_points=None):
    return np.array([solve_detuned(config, k, 1.0, n_points).total_attenuation for k in kappas])


def bandwidth_estimate(config, match):
    """Full isolation bandwidth (rad/s) from the kappa = 2 alpha gap edges."""
    _, _, fw, bw = config.section_list()[0]
    _, _, q = _probe_frame(config, config.direction, fw, bw)
    return 0.5 * match.k_p ** 2 * abs(q) * math.sqrt(match.omega_i * match.omega_s)


def _pair_propagators(config, pump_fw, pump_bw, length):
    waves = _waves(config.kind)
    kvec = config.slot_wavevectors
    c = config.coupling
    blocks = []
    for s_wave, i_wave, tag in _PAIRS[config.kind]:
        q = _pump_product(tag, pump_fw, pump_bw)
        k_s = waves[s_wave][0] * kvec[waves[s_wave][1]]
        k_i = waves[i_wave][0] * kvec[waves[i_wave][1]]
        m = np.array([[0, 1j * c * np.conj(q) * k_i],
                      [1j * c * q * k_s, 0]], dtype=complex)
        blocks.append(((s_wave, i_wave), linalg.expm(m * length)))
    return blocks


def _sigma_block(defect, omega):
    s = defect(omega) if callable(defect) else np.asarray(defect)
    assert s.shape == (4, 4), f"defect scattering matrix must be 4x4, got {s.shape}"
    # (Sigma,L) -> index 0, (Sigma,R) -> index 2; Delta leakage is dropped
    return s[0, 0], s[0, 2], s[2, 0], s[2, 2]


def _check_sections(config, defects):
    sections = config.section_list()
    if sections[0][0] != 0 or not math.isclose(sections[-1][1], config.length):
        raise SectionMismatch(f"sections must span [0, {config.length}]")
    for (a0, b0, _, _), (a1, b1, _, _) in zip(sections[:-1], sections[1:]):
        if not math.isclose(b0, a1) or b0 <= a0:
            raise SectionMismatch(f"sections [{a0}, {b0}] and [{a1}, {b1}] do not tile the line")
    if sections[-1][1] <= sections[-1][0]:
        raise SectionMismatch("empty last section")
    if len(defects) != len(sections) - 1:
        raise SectionMismatch(f"{len(sections)} sections need {len(sections) - 1} defects, got {len(defects)}")
    return sections


def _solve_sections(config, defects, direction, eps_s0):
    sections = _check_sections(config, defects)
    waves = _waves(config.kind)
    n_waves, n_sec = len(waves), len(sections)
    size = n_waves * n_sec
    kvec = config.slot_wavevectors
    freqs = config.slot_frequencies

    props = [_pair_propagators(config, fw, bw, end - start) for start, end, fw, bw in sections]

    def start_row(s, w):
        row = np.zeros(size, dtype=complex)
        row[s * n_waves + w] = 1
        return row

    def end_row(s, w):
        row = np.zeros(size, dtype=complex)
        for members, prop in props[s]:
            if w in members:
                pos = members.index(w)
                for q, member in enumerate(members):
                    row[s * n_waves + member] = prop[pos, q]
        return row

    rows, rhs = [], []
    probe = 0 if direction == "forward" else waves.index((-1, "a"))
    for w, (sign, _) in enumerate(waves):
        if sign > 0:
            rows.append(start_row(0, w))
        else:
            rows.append(end_row(n_sec - 1, w))
        rhs.append(eps_s0 if w == probe else 0)

    for s, defect in enumerate(defects):
        d = sections[s][1]
        for slot in sorted({slot for _, slot in waves}):
            fw = waves.index((+1, slot))
            bw = waves.index((-1, slot))
            r_l, t_rl, t_lr, r_r = _sigma_block(defect, freqs[slot])
            turn = np.exp(-2j * kvec[slot] * d)
            # wave leaving to the left, then wave leaving to the right
            rows.append(end_row(s, bw) - r_l * turn * end_row(s, fw) - t_rl * start_row(s + 1, bw))
            rhs.append(0)
            rows.append(start_row(s + 1, fw) - t_lr * end_row(s, fw) - r_r / turn * start_row(s + 1, bw))
            rhs.append(0)

    y = np.linalg.solve(np.array(rows), np.array(rhs, dtype=complex))
    if direction == "forward":
        return end_row(n_sec - 1, probe) @ y / eps_s0
    return start_row(0, probe) @ y / eps_s0


def solve_with_defect(config, defect_smatrix, eps_s0=1.0):
    """
    Forward and backward probe transmission through a line split into
    sections by defects.

    :param defect_smatrix: 4x4 array, callable omega -> 4x4 array, or a list
        of those with one entry per internal section boundary
    :return: (forward, backward) complex amplitude ratios at the forward probe
        frequency
    """
    defects = list(defect_smatrix) if isinstance(defect_smatrix, (list, tuple)) else [defect_smatrix]
    _check_pumps(config)
    forward = _solve_sections(config, defects, "forward", eps_s0)
    backward = _solve_sections(config, defects, "backward", eps_s0)
    logger.debug(f"{config.kind} sections={len(defects) + 1}: |t_fw|={abs(forward):.4g} |t_bw|={abs(backward):.4g}")
    return complex(forward), complex(backward)


def _floored_db(t, amplitude):
    db = 20 * math.log10(abs(t)) if t != 0 else -math.inf
    if db < DB_FLOOR:
        logger.debug(f"isolation sweep: amplitude {amplitude:.4g} at {db:.1f} dB, reported at the floor")
        return DB_FLOOR
    return db


def isolation_sweep(config, amplitudes, defect_smatrix=None, threads=1):
    """
    Forward and backward probe transmission (dB) against pump amplitude; the
    pump profile of `config` is scaled by each amplitude. Points beyond the
    Bessel validity bound come out as nan, transmissions under DB_FLOOR as
    DB_FLOOR.
    """
    def point(amplitude):
        cfg = config.scaled(amplitude)
        try:
            if defect_smatrix is None and len(cfg.section_list()) == 1:
                fw = solve_uniform(cfg.with_direction("forward")).total_attenuation
                bw = solve_uniform(cfg.with_direction("backward")).total_attenuation
            else:
                fw, bw = solve_with_defect(cfg, defect_smatrix if defect_smatrix is not None else [])
        except AmplitudeOutOfRange as e:
            logger.info(f"isolation sweep: amplitude {amplitude:.4g} skipped, {e}")
            return amplitude, math.nan, math.nan
        return amplitude, _floored_db(fw, amplitude), _floored_db(bw, amplitude)

    with ThreadPoolExecutor(max_workers=max(int(threads), 1)) as executor:
        rows = list(executor.map(point, [float(a) for a in amplitudes]))
    return np.array(rows).reshape(-1, 3)
