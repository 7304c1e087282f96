"""
Linear nodal model of the two-electrode chain.

Unknowns are node fluxes (Wb), two per cell boundary, interleaved as
a_0, b_0, a_1, b_1, ... Junction a_n (b_n) joins a_n and a_{n+1}
(b_n and b_{n+1}). Each boundary carries C_g to ground on both electrodes and
C_i between them; end boundaries carry half of those shunts, so every cell is
a symmetric pi section. Branch admittances are written in flux form:
1/L for inductors, -omega^2 C for capacitors, i omega / Z for port loads.

Ports live in the Sigma/Delta basis at both ends, ordered
(Sigma,L), (Delta,L), (Sigma,R), (Delta,R).
"""

import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

import device
import dispersion
from dispersion import ModeId
from errors import DecompositionIllConditioned, SingularNetwork

logger = logging.getLogger(__name__)

PORT_MODES = (ModeId.Sigma, ModeId.Delta, ModeId.Sigma, ModeId.Delta)
PORT_LABELS = ("Sigma_L", "Delta_L", "Sigma_R", "Delta_R")


@dataclass(frozen=True, eq=False)
class ChainNetwork:
    spec: device.LineSpec
    inductance: np.ndarray  # (n_cells, 2), inf marks a removed junction branch

    @property
    def cell(self):
        return self.spec.cell

    @property
    def n_cells(self):
        return self.spec.n_cells

    @property
    def n_nodes(self):
        return 2 * (self.n_cells + 1)

    def node(self, boundary, electrode):
        return 2 * boundary + electrode

    def port_nodes(self, side):
        boundary = 0 if side == "L" else self.n_cells
        return self.node(boundary, 0), self.node(boundary, 1)

    @functools.cached_property
    def junctions(self):
        """(from_node, to_node, 1/L) of every junction still present."""
        cells, electrodes = np.nonzero(np.isfinite(self.inductance))
        return (2 * cells + electrodes, 2 * (cells + 1) + electrodes,
                1.0 / self.inductance[cells, electrodes])

    @functools.cached_property
    def open_cells(self):
        return np.unique(np.nonzero(~np.isfinite(self.inductance))[0])

    def port_impedances(self, omega):
        """Reference impedances (ohm) of the four ports at |omega|."""
        z_sigma, z_delta = port_reference(self.spec, abs(omega))
        return np.array([z_sigma, z_delta, z_sigma, z_delta])


def bloch_impedance(cell, mode, omega):
    """Image impedance of the half-shunt-terminated cell; nan above cutoff."""
    z_series = 1j * omega * cell.l_j / (1 - omega ** 2 * cell.l_j * cell.c_j)
    y_shunt = 1j * omega * cell.mode_capacitance(mode)
    z2 = z_series / (y_shunt * (1 + z_series * y_shunt / 4))
    if z2.real <= 0:
        return math.nan
    return math.sqrt(z2.real)


def port_reference(spec, omega):
    """(Z_sigma, Z_delta) of the port preset of `spec` at angular frequency omega."""
    if spec.ports == "taper":
        return device.TAPER_IMPEDANCES
    constants = device.derive_constants(spec.cell)
    nominal = (constants.z_sigma, constants.z_delta)
    if spec.ports == "nominal" or omega == 0:
        return nominal
    z = [bloch_impedance(spec.cell, mode, omega) for mode in (ModeId.Sigma, ModeId.Delta)]
    return tuple(n if math.isnan(b) else b for b, n in zip(z, nominal))


def build_chain(spec):
    spec = device.validate(spec)
    net = ChainNetwork(spec=spec, inductance=device.sample_disorder(spec))
    logger.debug(f"chain of {spec.n_cells} cells, open junctions at {list(net.open_cells)}, ports={spec.ports}")
    return net


def _stamp(triplet, i, j, y):
    """Adds branch admittances y between node arrays i and j (j < 0 is ground)."""
    data, rows, cols = triplet
    i, j, y = np.broadcast_arrays(np.atleast_1d(i), np.atleast_1d(j), np.atleast_1d(y))
    grounded = j < 0
    data += [y, y[~grounded], -y[~grounded], -y[~grounded]]
    rows += [i, j[~grounded], i[~grounded], j[~grounded]]
    cols += [i, j[~grounded], j[~grounded], i[~grounded]]


def nodal_operator(net, omega, inv_inductance=None, ports=True):
    """
    Flux-domain nodal matrix K(omega), so that K @ phi = injected current.

    inv_inductance overrides 1/L of the junctions listed in net.junctions;
    the harmonic balance passes zeros and supplies junction currents itself.
    """
    cell = net.cell
    w2 = omega ** 2
    n = net.n_cells
    triplet = ([], [], [])

    p, q, inv_l = net.junctions
    if inv_inductance is not None:
        inv_l = np.broadcast_to(inv_inductance, inv_l.shape)
    y_junction = inv_l - w2 * cell.c_j
    _stamp(triplet, p, q, y_junction)

    weight = np.ones(n + 1)
    weight[[0, -1]] = 0.5
    boundaries = np.arange(n + 1)
    for electrode in (0, 1):
        _stamp(triplet, 2 * boundaries + electrode, -1, -w2 * cell.c_g * weight)
    _stamp(triplet, 2 * boundaries, 2 * boundaries + 1, -w2 * cell.c_i * weight)

    if ports:
        z = net.port_impedances(omega)
        for side, (zs, zd) in (("L", z[:2]), ("R", z[2:])):
            a, b = net.port_nodes(side)
            g_s, g_d = 1j * omega / zs, 1j * omega / zd
            # common mode sees g_s per electrode, differential mode g_d
            _stamp(triplet, [a, b], -1, g_s)
            _stamp(triplet, a, b, (g_d - g_s) / 2)

    data, rows, cols = (np.concatenate(t) for t in triplet)
    return sparse.coo_matrix((data.astype(complex), (rows, cols)), shape=(net.n_nodes, net.n_nodes)).tocsc()


def port_sources(net, omega, incident):
    """
    Norton currents of the four port loads for incident mode fluxes
    `incident` (array of 4, or 4 x m for m excitations).
    """
    incident = np.asarray(incident, dtype=complex)
    z = net.port_impedances(omega)
    g = 1j * omega / z
    rhs = np.zeros((net.n_nodes,) + incident.shape[1:], dtype=complex)
    for side, offset in (("L", 0), ("R", 2)):
        a, b = net.port_nodes(side)
        common = 2 * g[offset] * incident[offset]
        differential = 2 * g[offset + 1] * incident[offset + 1]
        rhs[a] += common + differential
        rhs[b] += common - differential
    return rhs


def port_mode_flux(net, phi):
    """Sigma and Delta mode fluxes at the four ports from node fluxes."""
    out = []
    for side in ("L", "R"):
        a, b = net.port_nodes(side)
        out += [(phi[a] + phi[b]) / 2, (phi[a] - phi[b]) / 2]
    return np.array(out)


def factorize(matrix, what="network"):
    try:
        return splinalg.splu(matrix)
    except RuntimeError as e:
        raise SingularNetwork(f"{what}: {e}")


def linear_scattering(net, omega):
    """4 x 4 complex S-matrix in power-wave normalisation."""
    if not omega > 0:
        raise ValueError(f"angular frequency must be positive, got {omega}")
    lu = factorize(nodal_operator(net, omega), f"chain at {omega / 2e9 / math.pi:.6g} GHz")
    incident = np.eye(4, dtype=complex)
    phi = lu.solve(port_sources(net, omega, incident))
    outgoing = port_mode_flux(net, phi) - incident
    root_z = np.sqrt(net.port_impedances(omega))
    return outgoing / root_z[:, None] * root_z[None, :]


def scattering_sweep(net, omegas, threads=1):
    """S-matrices over a frequency grid, shape (n_freq, 4, 4), grid order kept."""
    with ThreadPoolExecutor(max_workers=max(int(threads), 1)) as executor:
        return np.array(list(executor.map(lambda w: linear_scattering(net, float(w)), omegas)))


def defect_scattering(spec, omega, kind="open_junction"):
    """Scattering of a single defective cell between reflectionless ports."""
    single = replace(spec, n_cells=1, defects=((0, kind),), disorder=0.0, ports="bloch")
    return linear_scattering(build_chain(single), omega)


def scattering_fractions(s):
    """Power fractions of a Sigma wave and of a Delta wave sent from the left port."""
    p = np.abs(s) ** 2
    return {
        "sigma_transmitted": float(p[2, 0]),
        "sigma_reflected": float(p[0, 0]),
        "sigma_to_delta_forward": float(p[3, 0]),
        "sigma_to_delta_backward": float(p[1, 0]),
        "delta_transmitted": float(p[3, 1]),
        "delta_reflected": float(p[1, 1]),
        "delta_to_sigma_forward": float(p[2, 1]),
        "delta_to_sigma_backward": float(p[0, 1]),
    }


@dataclass
class WaveProfile:
    """Forward and backward power-wave amplitudes per cell, rows ordered (Sigma, Delta)."""
    cells: np.ndarray
    forward: np.ndarray
    backward: np.ndarray

    def net_power(self):
        return np.abs(self.forward) ** 2 - np.abs(self.backward) ** 2


def wave_amplitude_profile(net, drive, omega):
    """
    Splits the linear node solution into counterpropagating waves of each
    mode using adjacent boundaries: V_n = F_n + G_n,
    V_{n+1} = F_n exp(-ik) + G_n exp(ik). Cells holding a removed junction are nan.

    :param drive: port index (0..3) fed with a unit incident power wave
    """
    port = int(drive)
    assert 0 <= port < 4
    lu = factorize(nodal_operator(net, omega))
    z_port = net.port_impedances(omega)
    incident = np.zeros(4, dtype=complex)
    incident[port] = math.sqrt(z_port[port])
    phi = lu.solve(port_sources(net, omega, incident))
    a, b = phi[0::2], phi[1::2]

    n = net.n_cells
    forward = np.empty((2, n), dtype=complex)
    backward = np.empty((2, n), dtype=complex)
    for row, mode in enumerate((ModeId.Sigma, ModeId.Delta)):
        k = dispersion.wavevector(mode, omega, net.cell)
        if abs(math.sin(k)) < 1e-3:
            raise DecompositionIllConditioned(f"{mode} mode: |sin(ka)| = {abs(math.sin(k)):.2e} near cutoff")
        v = (a + b) / 2 if mode == ModeId.Sigma else (a - b) / 2
        g = (v[1:] - v[:-1] * np.exp(-1j * k)) / (2j * math.sin(k))
        f = v[:-1] - g
        z_b = bloch_impedance(net.cell, mode, omega)
        forward[row], backward[row] = f / math.sqrt(z_b), g / math.sqrt(z_b)
    forward[:, net.open_cells] = np.nan
    backward[:, net.open_cells] = np.nan
    return WaveProfile(cells=np.arange(n), forward=forward, backward=backward)
