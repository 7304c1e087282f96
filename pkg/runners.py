"""
Subcommands of run.py. Each runner resolves its command-specific defaults
in `prepare` and writes its outputs in `execute`; rows are always written in
grid order.
"""

import logging
import math
import os
from dataclasses import replace

import numpy as np

import compute_metrics
import coupled_mode
import device
import dispersion
import harmonic_balance
import network
import phase_matching
import tdr
import touchstone
import utils
from ExperimentRunner import ExperimentRunner
from dispersion import ModeId
from errors import NoPeakAboveThreshold, NoSolutionInBand
from phase_matching import ProcessKind

logger = logging.getLogger(__name__)

KINDS = {"Ci": ProcessKind.Circulation, "Al": ProcessKind.CirculationAliased, "Co": ProcessKind.TunableCoupling}


def _default(args, name, value):
    if getattr(args, name, None) is None:
        setattr(args, name, value)
    return getattr(args, name)


def _freq_grid(args, start, stop, points):
    _default(args, "freq_start_ghz", start)
    _default(args, "freq_stop_ghz", stop)
    _default(args, "freq_points", points)
    return utils.ghz_to_omega(utils.uniform_grid(args.freq_start_ghz, args.freq_stop_ghz, args.freq_points))


def _pump_grid(args):
    return utils.ghz_to_omega(utils.uniform_grid(args.pump_start_ghz, args.pump_stop_ghz, args.pump_points))


def _ghz(omega):
    return utils.omega_to_ghz(omega)


def pump_amplitudes(pump_ports, amplitude):
    """(forward, backward) Delta pump amplitudes for pumps entering at the given ports."""
    fw = amplitude if 1 in pump_ports else 0.0
    bw = amplitude if 3 in pump_ports else 0.0
    return fw, bw


def first_match(kind, omega_p, epsilon_p, cell, direction="forward"):
    return phase_matching.solve_corrected(kind, omega_p, epsilon_p, cell, direction)[0]


def pump_sections(spec, omega_p, pump_fw, pump_bw):
    """
    Section list (start, end, fw, bw) of a line cut at its defects. The pump
    entering from each end is carried across every defect once through the
    Delta block of the defect scattering matrix; its reflection is added to
    the counterpropagating pump of the same section.
    """
    defects = sorted(spec.defects)
    if not defects:
        return ()
    n_sec = len(defects) + 1
    blocks = [network.defect_scattering(spec, omega_p, kind) for _, kind in defects]
    into_fw = np.zeros(n_sec, dtype=complex)  # pump from the left entering each section
    into_bw = np.zeros(n_sec, dtype=complex)  # pump from the right entering each section
    into_fw[0], into_bw[-1] = pump_fw, pump_bw
    for s, block in enumerate(blocks):
        into_fw[s + 1] = block[3, 1] * into_fw[s]
    for s in reversed(range(len(blocks))):
        into_bw[s] = blocks[s][1, 3] * into_bw[s + 1]
    fw, bw = into_fw.copy(), into_bw.copy()
    for s, block in enumerate(blocks):
        bw[s] += block[1, 1] * into_fw[s]
        fw[s + 1] += block[3, 3] * into_bw[s + 1]
    edges = [0.0] + [float(i) for i, _ in defects] + [float(spec.n_cells)]
    return tuple((edges[s], edges[s + 1], complex(fw[s]), complex(bw[s])) for s in range(n_sec))


class DispersionRunner(ExperimentRunner):
    command = "dispersion"

    def prepare(self, args):
        self.omegas = _freq_grid(args, 0.05, 25.0, 500)

    def execute(self):
        table = dispersion.dispersion_table(self.omegas, self.cell)
        self.write_csv("dispersion.csv",
                       ["f_GHz", "k_sigma_rad_per_cell", "k_delta_rad_per_cell",
                        "v_sigma_cell_per_ns", "v_delta_cell_per_ns"], table.tolist())
        c = device.derive_constants(self.cell)
        self.write_json("constants.json", {
            "v_sigma0_cell_per_ns": c.v_sigma0, "v_delta0_cell_per_ns": c.v_delta0,
            "z_sigma_ohm": c.z_sigma, "z_delta_ohm": c.z_delta,
            "f_sigma_cutoff_GHz": _ghz(c.omega_sigma_co), "f_delta_cutoff_GHz": _ghz(c.omega_delta_co),
            "f_plasma_GHz": _ghz(c.omega_j), "mu": c.mu,
        })

        def draw(fig):
            ax = fig.add_subplot(111)
            ax.plot(table[:, 1], table[:, 0], label="Sigma")
            ax.plot(table[:, 2], table[:, 0], label="Delta")
            ax.set_xlabel("k (rad/cell)")
            ax.set_ylabel("f (GHz)")
            ax.legend()
        self.save_svg("dispersion.svg", draw)


class PhaseMatchRunner(ExperimentRunner):
    command = "phase-match"

    def prepare(self, args):
        _default(args, "process", list(KINDS))
        self.omega_p = utils.ghz_to_omega(args.pump_ghz)

    def execute(self):
        args = self.args
        c = device.derive_constants(self.cell)
        rows = []
        for label in args.process:
            kind = KINDS[label]
            try:
                points = phase_matching.solve_corrected(kind, self.omega_p, args.pump_amplitude, self.cell,
                                                        args.direction)
            except NoSolutionInBand as e:
                logger.warning(str(e))
                continue
            if kind == ProcessKind.Circulation:
                estimate = phase_matching.circulation_point_lowfreq(self.omega_p, c.v_sigma0, c.v_delta0)[0]
            elif kind == ProcessKind.TunableCoupling:
                estimate = phase_matching.coupler_point_lowfreq(self.omega_p, c.v_sigma0, c.v_delta0)
            else:
                estimate = math.nan
            for p in points:
                rows.append([label, p.direction, _ghz(p.omega_p), _ghz(p.omega_s), _ghz(p.omega_i),
                             _ghz(p.omega_probe), p.k_s, p.k_i, p.k_p, p.kappa, _ghz(estimate)])
                logger.info(f"{label} {p.direction}: probe {_ghz(p.omega_probe):.6f} GHz")
        self.write_csv("match_points.csv",
                       ["process", "direction", "f_pump_GHz", "f_signal_GHz", "f_idler_GHz", "f_probe_GHz",
                        "k_s_rad_per_cell", "k_i_rad_per_cell", "k_p_rad_per_cell", "residual_rad_per_cell",
                        "f_lowfreq_estimate_GHz"], rows)


def write_gap_curves(runner, pump_grid):
    args = runner.args
    curves = phase_matching.gap_map([KINDS[p] for p in args.process], pump_grid, runner.cell,
                                    args.pump_amplitude, threads=args.threads)
    for (kind, direction), rows in curves.items():
        runner.write_csv(f"gaps_{kind.label}_{direction}.csv", ["f_pump_GHz", "f_probe_GHz"], rows.tolist())
    return curves


def draw_gap_curves(ax, curves):
    markers = {"forward": "o", "backward": "x"}
    for (kind, direction), rows in curves.items():
        if len(rows):
            ax.plot(rows[:, 0], rows[:, 1], markers[direction], markersize=2, linestyle="none",
                    label=f"{kind.label} {direction}")
    ax.set_xlabel("pump frequency (GHz)")
    ax.set_ylabel("probe frequency (GHz)")


class GapsMapRunner(ExperimentRunner):
    command = "gaps-map"

    def prepare(self, args):
        _default(args, "process", list(KINDS))
        self.pump_grid = _pump_grid(args)

    def execute(self):
        curves = write_gap_curves(self, self.pump_grid)

        def draw(fig):
            ax = fig.add_subplot(111)
            draw_gap_curves(ax, curves)
            ax.legend(fontsize="small")
        self.save_svg("gaps_map.svg", draw)


class EnvelopeRunner(ExperimentRunner):
    command = "envelope"

    def prepare(self, args):
        _default(args, "process", ["Ci"])
        self.omega_p = utils.ghz_to_omega(args.pump_ghz)

    def execute(self):
        args = self.args
        kind = KINDS[args.process[0]]
        match = first_match(kind, self.omega_p, args.pump_amplitude, self.cell, args.direction)
        fw, bw = pump_amplitudes(args.pump_ports, args.pump_amplitude)
        if kind == ProcessKind.TunableCoupling and not (fw and bw):
            logger.warning("tunable coupling needs pumps from both Delta ports (--pump-ports 1 3)")
        config = coupled_mode.ProcessConfig.from_match(match, length=self.spec.n_cells, pump_fw=fw, pump_bw=bw)
        config = config.with_direction(args.direction)

        if args.detuning_mhz:
            v_sigma = device.derive_constants(self.cell).v_sigma0
            kappa = coupled_mode.detuning_to_kappa(2 * math.pi * args.detuning_mhz * 1e6, v_sigma)
            solution = coupled_mode.solve_detuned(config, kappa, n_points=args.x_points)
        else:
            solution = coupled_mode.solve_uniform(config, n_points=args.x_points)

        rows = np.column_stack([solution.x, np.abs(solution.eps_s), np.abs(solution.eps_i),
                                np.angle(solution.eps_s), np.angle(solution.eps_i)])
        self.write_csv("envelope.csv", ["x_cell", "abs_eps_s", "abs_eps_i", "phase_s_rad", "phase_i_rad"],
                       rows.tolist())
        self.write_json("envelope_summary.json", {
            "process": kind.label, "direction": args.direction,
            "f_pump_GHz": _ghz(match.omega_p), "f_probe_GHz": _ghz(match.omega_probe),
            "alpha_per_cell": solution.alpha, "alpha_L": solution.alpha * config.length,
            "kappa_rad_per_cell": solution.kappa,
            "total_attenuation_dB": solution.attenuation_db,
            "bandwidth_estimate_MHz": coupled_mode.bandwidth_estimate(config, match) / (2 * math.pi * 1e6),
        })

        def draw(fig):
            ax = fig.add_subplot(111)
            ax.plot(solution.x, np.abs(solution.eps_s), label="|eps_s|")
            ax.plot(solution.x, np.abs(solution.eps_i), label="|eps_i|")
            ax.set_xlabel("x (cell)")
            ax.legend()
        self.save_svg("envelope.svg", draw)


class IsolateRunner(ExperimentRunner):
    command = "isolate"

    def prepare(self, args):
        self.omega_p = utils.ghz_to_omega(args.pump_ghz)
        self.amplitudes = utils.uniform_grid(args.amplitude_start, args.amplitude_stop, args.amplitude_points)

    def sweep(self):
        args = self.args
        match = first_match(ProcessKind.Circulation, self.omega_p, args.pump_amplitude, self.cell)
        fw, bw = pump_amplitudes(args.pump_ports, 1.0)
        sections = pump_sections(self.spec, self.omega_p, fw, bw)
        config = coupled_mode.ProcessConfig.from_match(match, length=self.spec.n_cells, pump_fw=fw, pump_bw=bw,
                                                       sections=sections)
        defects = None
        if sections:
            spec = self.spec
            defects = [lambda omega, kind=kind: network.defect_scattering(spec, omega, kind)
                       for _, kind in sorted(spec.defects)]
        logger.info(f"isolation sweep at f_probe={_ghz(match.omega_probe):.4f} GHz, {len(sections) or 1} section(s)")
        rows = coupled_mode.isolation_sweep(config, self.amplitudes, defects, threads=args.threads)
        for i, (a, f, b) in enumerate(rows):
            self.write_summary({"isolate/forward_db": f, "isolate/backward_db": b}, i)
        return match, rows

    def execute(self):
        _, rows = self.sweep()
        self.write_csv("isolation.csv", ["pump_amplitude", "forward_dB", "backward_dB"], rows.tolist())

        def draw(fig):
            ax = fig.add_subplot(111)
            ax.plot(rows[:, 0], rows[:, 1], "--", label="forward")
            ax.plot(rows[:, 0], rows[:, 2], "--", label="backward")
            ax.set_xlabel("pump amplitude")
            ax.set_ylabel("transmission (dB)")
            ax.legend()
        self.save_svg("isolation.svg", draw)


class NldRunner(ExperimentRunner):
    """Shared chain and pump set-up of the harmonic-balance commands."""

    def build(self):
        self.net = network.build_chain(self.spec)
        self.basis = harmonic_balance.HarmonicBasis(m=self.args.harmonics)

    def pump_cache_path(self, drives):
        if self.args.pump_cache is None:
            return None
        key = utils.config_hash({"line": device.to_document(self.spec), "m": self.basis.m,
                                 "tol": self.args.tol, "max_iter": self.args.max_iter,
                                 "drives": [(d.port, d.omega, d.amplitude, d.phase) for d in drives]})
        return os.path.join(utils.ensure_dir(self.args.pump_cache), f"{key}.pkl")

    def solve_pump(self, omega_p, amplitude):
        drives = [harmonic_balance.PumpDrive(port, omega_p, amplitude) for port in self.args.pump_ports]
        cache = self.pump_cache_path(drives)
        if cache is not None and os.path.exists(cache):
            logging.info(f"pump solution loaded from {cache}")
            return harmonic_balance.load_pump(cache)
        pump = harmonic_balance.pump_harmonic_balance(self.net, drives, self.basis, tol=self.args.tol,
                                                      max_iter=self.args.max_iter, writer=self.summary_writer)
        if cache is not None:
            harmonic_balance.save_pump(pump, cache)
        return pump


class NldSimRunner(NldRunner):
    command = "nld-sim"

    def prepare(self, args):
        self.omega_p = utils.ghz_to_omega(args.pump_ghz)
        if args.probe_ghz is None:
            match = first_match(ProcessKind.Circulation, self.omega_p, args.pump_amplitude, self.cell)
            args.probe_ghz = _ghz(match.omega_probe)
        self.build()

    def execute(self):
        args = self.args
        pump = self.solve_pump(self.omega_p, args.pump_amplitude)
        self.write_json("pump.json", pump.to_dict())

        harmonics = harmonic_balance.pump_harmonics_at_ports(pump)
        rows = []
        for j, label in enumerate(network.PORT_LABELS):
            for a, h in enumerate(self.basis.orders):
                rows.append([label, h, harmonics[j, a], float(utils.power_db(harmonics[j, a] / 1e-3))])
        self.write_csv("pump_harmonics.csv", ["port", "harmonic", "power_W", "power_dBm"], rows)

        result = harmonic_balance.signal_sidebands(self.net, pump, utils.ghz_to_omega(args.probe_ghz),
                                                   args.sidebands)
        rows = []
        for a, order in enumerate(result.orders):
            for m in range(4):
                for j in range(4):
                    s = result.s[a, j, m]
                    rows.append([int(order), _ghz(result.omegas[a]), network.PORT_LABELS[m],
                                 network.PORT_LABELS[j], abs(s), float(utils.amplitude_db(s)),
                                 bool(result.propagating[a, j])])
        self.write_csv("sidebands.csv", ["sideband", "f_GHz", "from_port", "to_port", "abs_s", "s_dB",
                                         "propagating"], rows)
        self.write_json("nld_summary.json", {
            "f_pump_GHz": _ghz(pump.omega_p), "f_probe_GHz": _ghz(result.omega_probe),
            "forward_dB": float(utils.amplitude_db(result.forward)),
            "backward_dB": float(utils.amplitude_db(result.backward)),
            "photon_flux_balance": harmonic_balance.photon_flux_balance(result),
            "peak_junction_flux_quanta": float(dispersion.to_flux_quanta(np.max(pump.peak_junction_flux()))),
            "residual": pump.residual, "iterations": pump.iterations,
        })


class NldMapRunner(NldRunner):
    command = "nld-map"

    def prepare(self, args):
        self.pump_grid = _pump_grid(args)
        self.probe_grid = _freq_grid(args, 0.5, 20.0, 196)
        self.build()

    def compute_map(self):
        args = self.args
        tmap = harmonic_balance.transmission_map(self.net, self.pump_grid, self.probe_grid, args.pump_amplitude,
                                                 pump_ports=tuple(args.pump_ports), basis=self.basis,
                                                 n_sidebands=args.sidebands, threads=args.threads,
                                                 writer=self.summary_writer, tol=args.tol, max_iter=args.max_iter)
        self.write_csv("nld_map.csv", ["f_pump_GHz", "f_probe_GHz", "S_fw_dB", "S_bw_dB"], tmap.rows())
        self.flag_missing([float(f) for f, ok in zip(tmap.f_pump, tmap.converged) if not ok])
        return tmap

    @staticmethod
    def draw_map(fig, tmap, overlay=None):
        for col, (title, values) in enumerate((("forward", tmap.forward_db), ("backward", tmap.backward_db))):
            ax = fig.add_subplot(1, 2, col + 1)
            mesh = ax.pcolormesh(tmap.f_pump, tmap.f_probe, values.T, shading="nearest", vmin=-30, vmax=0)
            if overlay is not None:
                overlay(ax)
            ax.set_title(title)
            ax.set_xlabel("pump frequency (GHz)")
            ax.set_ylabel("probe frequency (GHz)")
        fig.colorbar(mesh, ax=fig.axes, label="transmission (dB)")

    def execute(self):
        tmap = self.compute_map()
        self.save_svg("nld_map.svg", lambda fig: self.draw_map(fig, tmap), figsize=(11, 4.8))


class ScatterRunner(ExperimentRunner):
    command = "scatter"

    def prepare(self, args):
        self.omegas = _freq_grid(args, 4.0, 8.0, 1601)

    def execute(self):
        net = network.build_chain(self.spec)
        s = network.scattering_sweep(net, self.omegas, self.args.threads)
        z = np.array([net.port_impedances(w) for w in self.omegas])
        comments = [f"two-mode Josephson line, {self.spec.n_cells} cells, defects {list(self.spec.defects)}, "
                    f"seed {self.spec.seed}",
                    "ports: 1 Sigma_L, 2 Delta_L, 3 Sigma_R, 4 Delta_R"]
        z_ref = device.derive_constants(self.cell).z_sigma
        touchstone.export_touchstone(self.path("line.s4p"), self.omegas / (2 * math.pi), s, z_ref,
                                     port_labels=network.PORT_LABELS, port_impedances=z, comments=comments)
        self.record("line.s4p")

        names = list(network.scattering_fractions(s[0]))
        rows = []
        for w, matrix in zip(self.omegas, s):
            fractions = network.scattering_fractions(matrix)
            unitarity = float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(4))))
            rows.append([_ghz(w)] + [fractions[n] for n in names] + [unitarity])
        self.write_csv("scattering_fractions.csv", ["f_GHz"] + names + ["unitarity_error"], rows)

        def draw(fig):
            ax = fig.add_subplot(111)
            f = _ghz(self.omegas)
            for (j, m), label in (((2, 0), "S(Sigma_R, Sigma_L)"), ((0, 0), "S(Sigma_L, Sigma_L)"),
                                  ((3, 0), "S(Delta_R, Sigma_L)"), ((1, 1), "S(Delta_L, Delta_L)")):
                ax.plot(f, utils.amplitude_db(s[:, j, m]), label=label)
            ax.set_xlabel("f (GHz)")
            ax.set_ylabel("|S| (dB)")
            ax.legend(fontsize="small")
        self.save_svg("scattering.svg", draw)


class TdrRunner(ExperimentRunner):
    command = "tdr"

    def prepare(self, args):
        if args.input is None:
            self.omegas = _freq_grid(args, 4.0, 8.0, 401)

    def sweeps(self):
        """(name, side, FrequencySweep) of every trace to analyse."""
        args = self.args
        if args.input is not None:
            freqs, values = touchstone.read_sweep(args.input, tuple(args.sweep_port))
            return [("input", "L", tdr.FrequencySweep(freqs, values, tuple(args.sweep_port)))]
        net = network.build_chain(self.spec)
        s = network.scattering_sweep(net, self.omegas, args.threads)
        freqs = self.omegas / (2 * math.pi)
        return [("left", "L", tdr.FrequencySweep(freqs, s[:, 0, 0], (0, 0))),
                ("right", "R", tdr.FrequencySweep(freqs, s[:, 2, 2], (2, 2)))]

    def execute(self):
        args = self.args
        report, traces, failure = {}, {}, None
        for name, side, sweep in self.sweeps():
            impulse = tdr.impulse_response(sweep, args.window, args.beta)
            self.write_csv(f"tdr_{name}.csv", ["t_ns", "magnitude", "phase_rad"],
                           np.column_stack([impulse.time_ns, impulse.magnitude, np.angle(impulse.values)]).tolist())
            traces[name] = impulse
            f_center = (sweep.freqs[0] + sweep.freqs[-1]) / 2
            velocity = args.velocity or tdr.default_velocity(self.cell, f_center, args.velocity_convention)
            entry = {"resolution_ns": impulse.resolution_ns, "window": impulse.window, "velocity_cell_per_ns": velocity,
                     "offset_ns": args.offset_ns,
                     "peaks": [{"time_ns": p.time_ns, "magnitude": p.magnitude} for p in tdr.find_peaks(impulse)]}
            try:
                loc = tdr.locate_defect(impulse, velocity, args.offset_ns)
            except NoPeakAboveThreshold as e:
                failure = failure or e
                entry["location"] = None
            else:
                from_left = loc.cell if side == "L" else self.spec.n_cells - loc.cell
                entry["location"] = {"cell_from_port": loc.cell, "cell_from_left": from_left,
                                     "uncertainty_cells": loc.uncertainty, "time_ns": loc.time_ns,
                                     "magnitude": loc.magnitude}
            report[name] = entry
        self.write_json("tdr_peaks.json", report)

        def draw(fig):
            ax = fig.add_subplot(111)
            for name, impulse in traces.items():
                ax.plot(impulse.time_ns, impulse.magnitude, label=name)
            ax.set_xlabel("t (ns)")
            ax.set_ylabel("|h|")
            ax.set_xlim(0, min(20.0, traces[next(iter(traces))].time_ns[-1]))
            ax.legend()
        self.save_svg("tdr.svg", draw)
        if failure is not None:
            raise failure


class Fig2Runner(NldMapRunner):
    """Gap overlays of all three processes, optionally over the harmonic-balance map."""
    command = "reproduce-fig"

    def prepare(self, args):
        args.process = list(KINDS)
        self.pump_grid = _pump_grid(args)
        if args.with_nld:
            self.probe_grid = _freq_grid(args, 0.5, 20.0, 196)
            self.build()

    def execute(self):
        curves = write_gap_curves(self, self.pump_grid)
        tmap = self.compute_map() if self.args.with_nld else None

        def draw(fig):
            if tmap is not None:
                self.draw_map(fig, tmap, overlay=lambda ax: draw_gap_curves(ax, curves))
                return
            ax = fig.add_subplot(111)
            draw_gap_curves(ax, curves)
            ax.legend(fontsize="small")
        self.save_svg("fig2.svg", draw, figsize=(11, 4.8) if tmap is not None else (6.4, 4.8))


class Fig3bRunner(IsolateRunner):
    command = "reproduce-fig"

    def execute(self):
        match, rows = self.sweep()
        self.write_csv("fig3b.csv", ["pump_amplitude", "forward_dB", "backward_dB"], rows.tolist())
        ratio = compute_metrics.isolation_db(rows[:, 1], rows[:, 2])
        self.write_json("fig3b_summary.json", {
            "f_pump_GHz": _ghz(match.omega_p), "f_probe_GHz": _ghz(match.omega_probe),
            "defects": [list(d) for d in self.spec.defects],
            "max_isolation_dB": float(np.nanmax(ratio)) if np.isfinite(ratio).any() else None,
        })

        def draw(fig):
            ax = fig.add_subplot(111)
            ax.plot(rows[:, 0], rows[:, 1], "--", label="forward")
            ax.plot(rows[:, 0], rows[:, 2], "--", label="backward")
            ax.set_xlabel("pump amplitude")
            ax.set_ylabel("attenuation (dB)")
            ax.legend()
        self.save_svg("fig3b.svg", draw)


class FigS6Runner(ExperimentRunner):
    """Wave profiles across the defect at 5 GHz and the defect scattering fractions against frequency."""
    command = "reproduce-fig"

    def prepare(self, args):
        self.omegas = _freq_grid(args, 1.0, 9.0, 81)
        self.omega = utils.ghz_to_omega(5.0)

    def execute(self):
        net = network.build_chain(self.spec)
        profiles = {}
        for port in (0, 1):
            profile = network.wave_amplitude_profile(net, port, self.omega)
            name = network.PORT_LABELS[port]
            profiles[name] = profile
            rows = np.column_stack([profile.cells, np.abs(profile.forward[0]), np.abs(profile.backward[0]),
                                    np.abs(profile.forward[1]), np.abs(profile.backward[1])])
            self.write_csv(f"profile_{name}.csv", ["cell", "sigma_forward", "sigma_backward", "delta_forward",
                                                   "delta_backward"], rows.tolist())

        fractions = [network.scattering_fractions(network.defect_scattering(self.spec, w)) for w in self.omegas]
        names = list(fractions[0])
        self.write_csv("defect_fractions.csv", ["f_GHz"] + names,
                       [[_ghz(w)] + [f[n] for n in names] for w, f in zip(self.omegas, fractions)])
        self.write_json("defect_fractions_5GHz.json",
                        network.scattering_fractions(network.linear_scattering(net, self.omega)))

        def draw(fig):
            for col, (name, profile) in enumerate(profiles.items()):
                ax = fig.add_subplot(1, 2, col + 1)
                for row, mode in enumerate((ModeId.Sigma, ModeId.Delta)):
                    ax.plot(profile.cells, np.abs(profile.forward[row]), label=f"{mode} forward")
                    ax.plot(profile.cells, np.abs(profile.backward[row]), label=f"{mode} backward")
                ax.set_title(f"driven from {name}")
                ax.set_xlabel("cell")
                ax.legend(fontsize="small")
        self.save_svg("figS6.svg", draw, figsize=(11, 4.8))


class FigS4Runner(TdrRunner):
    """TDR of the disordered defect line seen from both ports."""
    command = "reproduce-fig"

    def prepare(self, args):
        if args.disorder is None:
            args.disorder = 0.05
            self.spec = device.validate(replace(self.spec, disorder=args.disorder))
        args.input = None
        super(FigS4Runner, self).prepare(args)


class MetricsRunner(ExperimentRunner):
    command = "metrics"

    def prepare(self, args):
        self.source = args.target

    def execute(self):
        entries = compute_metrics.compute(self.source)
        self.write_json("metrics.json", entries)
        header = list(entries[0])
        self.write_csv("metrics.csv", header, [[e[k] for k in header] for e in entries])


COMMANDS = {
    "dispersion": DispersionRunner,
    "phase-match": PhaseMatchRunner,
    "gaps-map": GapsMapRunner,
    "envelope": EnvelopeRunner,
    "isolate": IsolateRunner,
    "nld-sim": NldSimRunner,
    "nld-map": NldMapRunner,
    "scatter": ScatterRunner,
    "tdr": TdrRunner,
    "metrics": MetricsRunner,
}

FIGURES = {
    "2": Fig2Runner,
    "3b": Fig3bRunner,
    "S6": FigS6Runner,
    "S4": FigS4Runner,
}
