"""
Two-step harmonic balance of the pumped chain.

1. Pump: Newton iteration on the node flux phasors of the pump harmonics.
   Junction currents (1/L) sin(phi_p - phi_q) are evaluated on a time grid
   and transformed back (almost-periodic Fourier transform), the rest of the
   chain is linear and enters through network.nodal_operator.
2. Signal: each junction is linearised around the pump orbit, which couples
   the sidebands omega_probe + 2 n omega_p through the Fourier coefficients of
   cos(phi_p - phi_q). One sparse solve gives the multi-frequency scattering.

Fluxes are in units of the reduced flux quantum.
"""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import dill
import numpy as np
import torch
from scipy import sparse, special

import dispersion
import network
import utils
from dispersion import ModeId
from errors import (AboveCutoff, DriveAboveCeiling, NonConvergence, PumpAboveCutoff,
                    TruncationWarning)
from meters import AverageMeter, ConvergenceMeter

logger = logging.getLogger(__name__)

FLUX_CEILING = 0.3 * 2 * math.pi  # peak junction flux, 0.3 flux quanta
RAMP = (0.1, 0.325, 0.55, 0.775, 1.0)


@dataclass(frozen=True)
class HarmonicBasis:
    m: int = 3
    odd_only: bool = True
    n_samples: int = 64

    def __post_init__(self):
        assert self.m >= 1, "at least the fundamental is needed"
        assert self.n_samples > 4 * self.orders[-1], "time grid too coarse for the retained harmonics"

    @property
    def orders(self):
        if self.odd_only:
            return tuple(range(1, 2 * self.m, 2))
        return tuple(range(1, 2 * self.m))

    @property
    def size(self):
        return len(self.orders)


@dataclass(frozen=True)
class PumpDrive:
    port: int  # index in network.PORT_LABELS
    omega: float
    amplitude: float  # incident traveling reduced amplitude
    phase: float = 0.0

    @property
    def incident_flux(self):
        return 2 * self.amplitude * np.exp(1j * self.phase)

    @property
    def mode(self):
        return network.PORT_MODES[self.port]


@dataclass(eq=False)
class PumpSolution:
    net: network.ChainNetwork
    basis: HarmonicBasis
    drives: tuple
    omega_p: float
    phi: np.ndarray  # (n_nodes, n_harmonics) complex node flux phasors
    residual: float
    iterations: int
    history: list = field(default_factory=list)

    @property
    def junction_flux(self):
        p, q, _ = self.net.junctions
        return self.phi[p] - self.phi[q]

    def junction_samples(self, n_samples=None):
        """Junction flux over one pump period, shape (n_junctions, n_samples)."""
        return _synthesize(self.junction_flux, self.basis.orders, n_samples or self.basis.n_samples)

    def peak_junction_flux(self):
        return np.max(np.abs(self.junction_samples()), axis=1)

    def incident(self):
        inc = np.zeros(4, dtype=complex)
        for d in self.drives:
            inc[d.port] += d.incident_flux
        return inc

    def to_dict(self):
        p, q, _ = self.net.junctions
        flux = self.junction_flux
        return {
            "omega_p": self.omega_p,
            "harmonics": list(self.basis.orders),
            "drives": [{"port": network.PORT_LABELS[d.port], "omega": d.omega,
                        "amplitude": d.amplitude, "phase": d.phase} for d in self.drives],
            "junctions": {"from_node": p.tolist(), "to_node": q.tolist()},
            "junction_flux_re": flux.real.tolist(),
            "junction_flux_im": flux.imag.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "history": self.history,
        }


@dataclass
class SignalScattering:
    """
    s[n, j, m]: power-wave amplitude leaving port j at sideband n for a unit
    wave entering port m at the probe frequency.
    """
    omega_probe: float
    omega_p: float
    orders: np.ndarray
    omegas: np.ndarray
    s: np.ndarray
    propagating: np.ndarray  # (n_sidebands, 4) bool

    @property
    def center(self):
        return int(np.flatnonzero(self.orders == 0)[0])

    def transmission(self, to_port, from_port):
        return self.s[self.center, to_port, from_port]

    @property
    def forward(self):
        return self.transmission(2, 0)

    @property
    def backward(self):
        return self.transmission(0, 2)

    def sideband_powers(self, from_port=0):
        """|s|^2 per (sideband, output port); evanescent outputs count as zero."""
        return np.where(self.propagating, np.abs(self.s[:, :, from_port]) ** 2, 0.0)


def _synthesize(phasors, orders, n_samples):
    spectrum = np.zeros(phasors.shape[:-1] + (n_samples // 2 + 1,), dtype=complex)
    spectrum[..., list(orders)] = phasors * n_samples / 2
    return np.fft.irfft(spectrum, n=n_samples, axis=-1)


def _analyze(samples, orders):
    n_samples = samples.shape[-1]
    return np.fft.rfft(samples, axis=-1)[..., list(orders)] * 2 / n_samples


def _drive_mode_check(drive, cell):
    try:
        k = dispersion.wavevector(drive.mode, drive.omega, cell)
    except AboveCutoff as e:
        raise PumpAboveCutoff(str(e))
    flux = dispersion.flux_from_amplitude(drive.amplitude, k)
    if flux > FLUX_CEILING:
        raise DriveAboveCeiling(f"drive on {network.PORT_LABELS[drive.port]} gives junction flux "
                                f"{dispersion.to_flux_quanta(flux):.3f} flux quanta, ceiling is 0.3")


class _PumpSystem(object):
    """Real-valued residual and Jacobian, unknowns ordered (node, harmonic, re/im)."""

    def __init__(self, net, basis, omega_p, incident):
        self.net = net
        self.basis = basis
        self.omega_p = omega_p
        self.width = 2 * basis.size
        self.p, self.q, self.inv_l = net.junctions
        self.linear = self._linear_part()
        source = np.zeros((net.n_nodes, basis.size), dtype=complex)
        source[:, 0] = network.port_sources(net, omega_p, incident)
        self.source = self._to_real(source)
        self.norm_b = np.linalg.norm(self.source)

    def _to_real(self, z):
        return np.stack([z.real, z.imag], axis=-1).reshape(-1)

    def to_complex(self, y):
        y = y.reshape(self.net.n_nodes, self.basis.size, 2)
        return y[..., 0] + 1j * y[..., 1]

    def _linear_part(self):
        rows, cols, data = [], [], []
        for a, h in enumerate(self.basis.orders):
            k = network.nodal_operator(self.net, h * self.omega_p, inv_inductance=0.0).tocoo()
            r, c = k.row * self.width + 2 * a, k.col * self.width + 2 * a
            rows += [r, r, r + 1, r + 1]
            cols += [c, c + 1, c, c + 1]
            data += [k.data.real, -k.data.imag, k.data.imag, k.data.real]
        size = self.net.n_nodes * self.width
        return sparse.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                                 shape=(size, size)).tocsr()

    def _samples(self, phi):
        return _synthesize(phi[self.p] - phi[self.q], self.basis.orders, self.basis.n_samples)

    def residual(self, y):
        phi = self.to_complex(y)
        current = self.inv_l[:, None] * _analyze(np.sin(self._samples(phi)), self.basis.orders)
        nodal = np.zeros_like(phi)
        np.add.at(nodal, self.p, current)
        np.add.at(nodal, self.q, -current)
        return self.linear @ y + self._to_real(nodal) - self.source

    def jacobian(self, y):
        phi = self.to_complex(y)
        cos = np.cos(self._samples(phi))
        n_samples = cos.shape[-1]
        coeffs = np.fft.fft(cos, axis=-1) / n_samples
        orders = np.array(self.basis.orders)
        diff = coeffs[:, (orders[:, None] - orders[None, :]) % n_samples]
        summ = coeffs[:, (orders[:, None] + orders[None, :]) % n_samples]
        size = self.basis.size
        block = np.empty((len(self.p), 2 * size, 2 * size))
        block[:, 0::2, 0::2] = (diff + summ).real
        block[:, 0::2, 1::2] = -(diff - summ).imag
        block[:, 1::2, 0::2] = (diff + summ).imag
        block[:, 1::2, 1::2] = (diff - summ).real
        block *= self.inv_l[:, None, None]

        local = np.arange(self.width)
        li, lj = np.meshgrid(local, local, indexing="ij")
        rows, cols, data = [], [], []
        for u, v, sign in ((self.p, self.p, 1), (self.q, self.q, 1), (self.p, self.q, -1), (self.q, self.p, -1)):
            rows.append((u[:, None, None] * self.width + li).reshape(-1))
            cols.append((v[:, None, None] * self.width + lj).reshape(-1))
            data.append((sign * block).reshape(-1))
        nonlinear = sparse.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                                      shape=self.linear.shape)
        return (self.linear + nonlinear).tocsc()

    def describing_function_start(self, incident, max_iter=50, tol=1e-8):
        """Fundamental-only guess with per-junction inductance L x / (2 J1(x))."""
        rhs = network.port_sources(self.net, self.omega_p, incident)
        scale = np.ones_like(self.inv_l)
        for it in range(max_iter):
            k = network.nodal_operator(self.net, self.omega_p, inv_inductance=self.inv_l * scale)
            phi1 = network.factorize(k, "describing function").solve(rhs)
            x = np.minimum(np.abs(phi1[self.p] - phi1[self.q]), 3.0)
            safe = np.where(x > 0, x, 1.0)
            new = np.where(x > 0, 2 * special.j1(safe) / safe, 1.0)
            if np.max(np.abs(new - scale)) < tol:
                break
            scale = new
        logger.debug(f"describing function start after {it + 1} iterations")
        phi = np.zeros((self.net.n_nodes, self.basis.size), dtype=complex)
        phi[:, 0] = phi1
        return self._to_real(phi)

    def newton(self, y, tol, max_iter, meter):
        r = self.residual(y)
        meter.update(np.linalg.norm(r) / self.norm_b)
        for _ in range(max_iter):
            if meter.converged:
                return y
            step = network.factorize(self.jacobian(y), "harmonic balance jacobian").solve(-r)
            t, norm_r = 1.0, np.linalg.norm(r)
            while True:
                y_try = y + t * step
                r_try = self.residual(y_try)
                if np.linalg.norm(r_try) < norm_r or t < 1e-3:
                    break
                t /= 2
            y, r = y_try, r_try
            meter.update(np.linalg.norm(r) / self.norm_b)
            logger.debug(f"newton iteration {meter.iterations}: residual {meter.last:.3e}, step {t:g}")
        if meter.converged:
            return y
        raise NonConvergence(meter.iterations, meter.last)


def zero_pump(net, omega_p, basis=HarmonicBasis()):
    return PumpSolution(net=net, basis=basis, drives=(), omega_p=omega_p,
                        phi=np.zeros((net.n_nodes, basis.size), dtype=complex),
                        residual=0.0, iterations=0, history=[])


def pump_harmonic_balance(net, drives, basis=HarmonicBasis(), tol=1e-10, max_iter=30, writer=None):
    """
    Periodic steady state of the chain under one or more pump drives sharing
    the pump frequency. Falls back to an amplitude ramp before giving up.

    :param drives: iterable of PumpDrive, or of (port, omega_p, amplitude, phase) tuples
    """
    drives = tuple(d if isinstance(d, PumpDrive) else PumpDrive(*d) for d in drives)
    assert drives, "at least one drive is needed"
    omega_p = drives[0].omega
    assert all(math.isclose(d.omega, omega_p) for d in drives), "drives must share the pump frequency"
    for d in drives:
        _drive_mode_check(d, net.cell)

    incident = np.zeros(4, dtype=complex)
    for d in drives:
        incident[d.port] += d.incident_flux
    if not np.any(incident):
        return zero_pump(net, omega_p, basis)

    meter = ConvergenceMeter(tol)
    system = _PumpSystem(net, basis, omega_p, incident)
    y0 = system.describing_function_start(incident)
    try:
        y = system.newton(y0, tol, max_iter, meter)
    except NonConvergence as e:
        logger.info(f"pump Newton failed from the warm start ({e}), ramping the drive")
        y = np.zeros_like(y0)
        for fraction in RAMP:
            meter.reset()
            ramped = _PumpSystem(net, basis, omega_p, incident * fraction)
            y = ramped.newton(y, tol, max_iter, meter)
            logger.debug(f"ramp {fraction:.3f}: converged in {meter.iterations} iterations")

    if writer is not None:
        for i, r in enumerate(meter.history):
            writer.add_scalar("pump/residual", r, i)
    logger.info(f"pump f_p={utils.omega_to_ghz(omega_p):.4f} GHz converged: residual {meter.last:.2e} "
                f"after {meter.iterations} iterations")
    return PumpSolution(net=net, basis=basis, drives=drives, omega_p=omega_p, phi=system.to_complex(y),
                        residual=meter.last, iterations=meter.iterations, history=list(meter.history))


def pump_harmonics_at_ports(pump):
    """Outgoing power (W) per port (rows, network.PORT_LABELS order) and pump harmonic (columns)."""
    net = pump.net
    incident = pump.incident()
    power = np.zeros((4, pump.basis.size))
    for a, h in enumerate(pump.basis.orders):
        omega = h * pump.omega_p
        outgoing = network.port_mode_flux(net, pump.phi[:, a]) - (incident if h == 1 else 0)
        flux = utils.PHI0_REDUCED * np.abs(outgoing)
        power[:, a] = (omega * flux) ** 2 / net.port_impedances(omega)
    return power


def incident_power(pump):
    """Power (W) delivered by each drive."""
    z = pump.net.port_impedances(pump.omega_p)
    return np.array([(pump.omega_p * utils.PHI0_REDUCED * abs(d.incident_flux)) ** 2 / z[d.port]
                     for d in pump.drives])


def conversion_coefficients(pump, n_sidebands):
    """c[j, q] = Fourier coefficient of cos(junction flux) at 2 q omega_p, q in [-2N, 2N]."""
    samples = pump.junction_samples()
    n_samples = samples.shape[-1]
    assert n_samples > 8 * n_sidebands, "time grid too coarse for the sideband count"
    coeffs = np.fft.fft(np.cos(samples), axis=-1) / n_samples
    q = np.arange(-2 * n_sidebands, 2 * n_sidebands + 1)
    return coeffs[:, (2 * q) % n_samples]


def _safe_probe(omega_probe, omega_p):
    ratio = omega_probe / omega_p
    if abs(ratio - round(ratio)) < 1e-9:
        shifted = omega_probe + 1e-6 * omega_p
        logger.debug(f"probe at a multiple of the pump frequency, moved by {1e-6 * omega_p:.3g} rad/s")
        return shifted
    return omega_probe


def signal_sidebands(net, pump, omega_probe, n_sidebands=2, coefficients=None, warn=True):
    """
    Linearised scattering of a weak probe and its sidebands omega_probe + 2 n omega_p.

    Sidebands with negative frequency stand for conjugated waves; their port
    loads use the impedance at |omega|.
    """
    if not omega_probe > 0:
        raise ValueError(f"probe angular frequency must be positive, got {omega_probe}")
    omega_probe = _safe_probe(omega_probe, pump.omega_p)
    n = int(n_sidebands)
    orders = np.arange(-n, n + 1)
    omegas = omega_probe + 2 * orders * pump.omega_p
    width = len(orders)
    size = net.n_nodes * width

    rows, cols, data = [], [], []
    for a, w in enumerate(omegas):
        k = network.nodal_operator(net, w, inv_inductance=0.0).tocoo()
        rows.append(k.row * width + a)
        cols.append(k.col * width + a)
        data.append(k.data)

    c = conversion_coefficients(pump, n) if coefficients is None else coefficients
    p, q, inv_l = net.junctions
    # sideband a receives c_{2(a-b)} from sideband b
    block = c[:, (orders[:, None] - orders[None, :]) + 2 * n] * inv_l[:, None, None]
    li, lj = np.meshgrid(np.arange(width), np.arange(width), indexing="ij")
    for u, v, sign in ((p, p, 1), (q, q, 1), (p, q, -1), (q, p, -1)):
        rows.append((u[:, None, None] * width + li).reshape(-1))
        cols.append((v[:, None, None] * width + lj).reshape(-1))
        data.append((sign * block).reshape(-1))
    matrix = sparse.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                               shape=(size, size)).tocsc()
    lu = network.factorize(matrix, f"sideband system at {utils.omega_to_ghz(omega_probe):.6g} GHz")

    center = n
    z0 = net.port_impedances(omega_probe)
    incident = np.diag(np.sqrt(z0)).astype(complex)
    rhs = np.zeros((size, 4), dtype=complex)
    rhs[center::width] = network.port_sources(net, omega_probe, incident)
    phi = lu.solve(rhs).reshape(net.n_nodes, width, 4)

    s = np.empty((width, 4, 4), dtype=complex)
    propagating = np.empty((width, 4), dtype=bool)
    for a, w in enumerate(omegas):
        outgoing = network.port_mode_flux(net, phi[:, a, :])
        if a == center:
            outgoing = outgoing - incident
        z = net.port_impedances(w)
        s[a] = outgoing / np.sqrt(z)[:, None] * abs(w) / omega_probe
        for j, mode in enumerate(network.PORT_MODES):
            propagating[a, j] = abs(w) < dispersion.cutoff(mode, net.cell)

    result = SignalScattering(omega_probe=omega_probe, omega_p=pump.omega_p, orders=orders,
                              omegas=omegas, s=s, propagating=propagating)
    if warn and n > 0:
        _check_truncation(result)
    return result


def _check_truncation(result, fraction=0.01):
    for port in range(4):
        powers = result.sideband_powers(port)
        total = powers.sum()
        outer = powers[[0, -1]].sum()
        if total > 0 and outer > fraction * total:
            warnings.warn(f"outermost sidebands carry {outer / total:.2%} of the power scattered from "
                          f"{network.PORT_LABELS[port]} at {utils.omega_to_ghz(result.omega_probe):.4f} GHz",
                          TruncationWarning)
            return


def photon_flux_balance(scattering, from_port=0, propagating_only=False):
    """
    Outgoing photon flux over incoming, counting conjugated (negative
    frequency) sidebands negatively. A lossless pumped chain gives 1.
    """
    weights = np.sign(scattering.omegas) * scattering.omega_probe / np.abs(scattering.omegas)
    power = np.abs(scattering.s[:, :, from_port]) ** 2
    if propagating_only:
        power = np.where(scattering.propagating, power, 0.0)
    return float(np.sum(weights[:, None] * power))


@dataclass
class TransmissionMap:
    f_pump: np.ndarray  # GHz
    f_probe: np.ndarray  # GHz
    forward_db: np.ndarray  # (n_pump, n_probe)
    backward_db: np.ndarray
    converged: np.ndarray  # (n_pump,) bool

    def rows(self):
        """(f_pump_GHz, f_probe_GHz, S_fw_dB, S_bw_dB) sorted by grid coordinates."""
        out = []
        for i, fp in enumerate(self.f_pump):
            for j, fs in enumerate(self.f_probe):
                out.append((float(fp), float(fs), float(self.forward_db[i, j]), float(self.backward_db[i, j])))
        return out


def transmission_map(net, pump_grid, probe_grid, pump_amplitude, pump_ports=(3,), basis=HarmonicBasis(),
                     n_sidebands=2, threads=1, writer=None, tol=1e-10, max_iter=30):
    """
    Forward (Sigma_L -> Sigma_R) and backward transmission in dB over a pump x
    probe grid. Pump points whose harmonic balance fails become nan rows.
    """
    pump_grid = np.asarray(pump_grid, dtype=float)
    probe_grid = np.asarray(probe_grid, dtype=float)

    def row(omega_p):
        try:
            drives = [PumpDrive(port, omega_p, pump_amplitude) for port in pump_ports]
            if pump_amplitude > 0:
                pump = pump_harmonic_balance(net, drives, basis, tol=tol, max_iter=max_iter)
            else:
                pump = zero_pump(net, omega_p, basis)
        except NonConvergence as e:
            logger.warning(f"pump at {utils.omega_to_ghz(omega_p):.4f} GHz: {e}; row left empty")
            return None
        coeffs = conversion_coefficients(pump, n_sidebands)
        fw, bw = np.empty(len(probe_grid)), np.empty(len(probe_grid))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            for j, w in enumerate(probe_grid):
                result = signal_sidebands(net, pump, w, n_sidebands, coefficients=coeffs)
                fw[j] = 20 * math.log10(abs(result.forward))
                bw[j] = 20 * math.log10(abs(result.backward))
        return fw, bw, pump.iterations

    with ThreadPoolExecutor(max_workers=max(int(threads), 1)) as executor:
        rows = list(executor.map(row, pump_grid))

    shape = (len(pump_grid), len(probe_grid))
    forward, backward = np.full(shape, np.nan), np.full(shape, np.nan)
    converged = np.zeros(len(pump_grid), dtype=bool)
    iterations = AverageMeter()
    for i, r in enumerate(rows):
        if r is None:
            continue
        forward[i], backward[i], n_iter = r
        converged[i] = True
        iterations.update(n_iter)
        if writer is not None:
            writer.add_scalar("map/min_forward_db", float(np.min(r[0])), i)
            writer.add_scalar("map/min_backward_db", float(np.min(r[1])), i)
    logger.info(f"map: {int(converged.sum())}/{len(pump_grid)} pump points converged, "
                f"{iterations.avg:.1f} Newton iterations on average")
    return TransmissionMap(f_pump=utils.omega_to_ghz(pump_grid), f_probe=utils.omega_to_ghz(probe_grid),
                           forward_db=forward, backward_db=backward, converged=converged)


def save_pump(pump, path):
    with open(path, "wb") as f:
        torch.save(pump, f, pickle_module=dill)
    logger.debug(f"pump solution saved to {path}")


def load_pump(path):
    with open(path, "rb") as f:
        return torch.load(f, pickle_module=dill, weights_only=False)
