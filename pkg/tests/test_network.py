import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import sparse

import device
import dispersion
import network
from dispersion import ModeId
from errors import ConfigError, DecompositionIllConditioned, SingularNetwork
from tests.conftest import omega


def _unitarity_error(s):
    return np.max(np.abs(s.conj().T @ s - np.eye(s.shape[0])))


class TestChain:
    def test_open_junction_removed(self, defect_line):
        net = network.build_chain(defect_line)
        assert list(net.open_cells) == [165]
        assert len(net.junctions[0]) == 2 * 400 - 1
        assert net.n_nodes == 802

    def test_operator_is_symmetric(self, short_line):
        net = network.build_chain(short_line)
        k = network.nodal_operator(net, omega(5.0))
        assert abs(k - k.T).max() == 0

    def test_singular_matrix(self):
        with pytest.raises(SingularNetwork):
            network.factorize(sparse.csc_matrix((4, 4), dtype=complex))

    def test_rejects_invalid_spec(self, fitted_cell):
        with pytest.raises(ConfigError):
            network.build_chain(device.LineSpec(cell=fitted_cell, n_cells=0))


class TestPortReference:
    def test_presets(self, fitted_cell):
        constants = device.derive_constants(fitted_cell)
        spec = device.LineSpec(cell=fitted_cell)
        assert network.port_reference(spec, omega(5.0)) == (constants.z_sigma, constants.z_delta)
        assert network.port_reference(replace(spec, ports="taper"), omega(5.0)) == device.TAPER_IMPEDANCES

    def test_bloch_tends_to_nominal(self, fitted_cell):
        constants = device.derive_constants(fitted_cell)
        z_s, z_d = network.port_reference(device.LineSpec(cell=fitted_cell, ports="bloch"), omega(0.1))
        assert z_s == pytest.approx(constants.z_sigma, rel=1e-3)
        assert z_d == pytest.approx(constants.z_delta, rel=1e-3)

    def test_bloch_above_cutoff_falls_back(self, fitted_cell):
        constants = device.derive_constants(fitted_cell)
        _, z_d = network.port_reference(device.LineSpec(cell=fitted_cell, ports="bloch"), omega(12.0))
        assert z_d == constants.z_delta
        assert math.isnan(network.bloch_impedance(fitted_cell, ModeId.Delta, omega(12.0)))


class TestUniformLine:
    def test_matched_transmission(self, fitted_cell):
        spec = device.LineSpec(cell=fitted_cell, n_cells=60, ports="bloch")
        s = network.linear_scattering(network.build_chain(spec), omega(5.0))
        assert abs(s[2, 0]) == pytest.approx(1.0, abs=1e-6)
        assert abs(s[3, 1]) == pytest.approx(1.0, abs=1e-6)
        assert abs(s[0, 0]) < 1e-6
        assert np.max(np.abs(s[[1, 3], 0])) < 1e-8
        assert np.max(np.abs(s[[0, 2], 1])) < 1e-8

    @pytest.mark.parametrize("mode,row,col", [(ModeId.Sigma, 2, 0), (ModeId.Delta, 3, 1)])
    def test_transmission_phase(self, fitted_cell, mode, row, col):
        n = 10
        spec = device.LineSpec(cell=fitted_cell, n_cells=n, ports="bloch")
        w = omega(5.0)
        s = network.linear_scattering(network.build_chain(spec), w)
        k = dispersion.wavevector(mode, w, fitted_cell)
        assert abs(np.angle(s[row, col] * np.exp(1j * n * k))) < 1e-4 * n

    def test_nominal_ports_reflect_only_mildly(self, fitted_cell):
        spec = device.LineSpec(cell=fitted_cell, n_cells=60, ports="nominal")
        s = network.linear_scattering(network.build_chain(spec), omega(1.0))
        assert abs(s[0, 0]) < 0.05
        assert _unitarity_error(s) < 1e-8


class TestDefectLine:
    def test_unitary_and_reciprocal(self, defect_line):
        for ports in ("nominal", "taper", "bloch"):
            s = network.linear_scattering(network.build_chain(replace(defect_line, ports=ports)), omega(5.0))
            assert _unitarity_error(s) < 1e-8
            np.testing.assert_allclose(s, s.T, atol=1e-8)

    def test_fractions_at_5ghz(self, defect_line):
        s = network.linear_scattering(network.build_chain(defect_line), omega(5.0))
        fr = network.scattering_fractions(s)
        assert abs(fr["sigma_transmitted"] - 0.60) < 0.10
        assert abs(fr["sigma_to_delta_forward"] - 0.20) < 0.10
        assert abs(fr["sigma_to_delta_backward"] - 0.20) < 0.10
        assert abs(fr["sigma_reflected"] - 0.05) < 0.10
        assert abs(fr["delta_transmitted"] - 0.05) < 0.10
        assert abs(fr["delta_reflected"] - 0.60) < 0.10
        assert sum(v for k, v in fr.items() if k.startswith("sigma")) == pytest.approx(1.0, abs=1e-8)

    def test_single_cell_matches_full_line(self, defect_line):
        w = omega(5.0)
        full = network.linear_scattering(network.build_chain(defect_line), w)
        single = network.defect_scattering(defect_line, w)
        np.testing.assert_allclose(np.abs(full), np.abs(single), atol=1e-7)
        assert _unitarity_error(single) < 1e-8

    def test_sweep_keeps_order_with_threads(self, defect_line):
        spec = replace(defect_line, n_cells=200, defects=((80, "open_junction"),))
        net = network.build_chain(spec)
        grid = omega(np.linspace(4.0, 6.0, 9))
        single = network.scattering_sweep(net, grid, threads=1)
        pooled = network.scattering_sweep(net, grid, threads=3)
        assert single.shape == (9, 4, 4)
        np.testing.assert_array_equal(single, pooled)

    def test_disorder_keeps_unitarity(self, defect_line):
        spec = replace(defect_line, disorder=0.05, seed=4)
        s = network.linear_scattering(network.build_chain(spec), omega(5.0))
        assert _unitarity_error(s) < 1e-8


class TestWaveProfile:
    def test_matched_line_has_no_backward_wave(self, fitted_cell):
        spec = device.LineSpec(cell=fitted_cell, n_cells=80, ports="bloch")
        profile = network.wave_amplitude_profile(network.build_chain(spec), 0, omega(5.0))
        np.testing.assert_allclose(np.abs(profile.forward[0]), 1.0, atol=1e-6)
        assert np.max(np.abs(profile.backward[0])) < 1e-6
        assert np.max(np.abs(profile.forward[1])) < 1e-6

    def test_power_conserved_across_defect(self, defect_line):
        profile = network.wave_amplitude_profile(network.build_chain(defect_line), 0, omega(5.0))
        power = profile.net_power()
        left, right = power[:, :160], power[:, 170:]
        assert np.ptp(left, axis=1).max() < 1e-8
        assert np.ptp(right, axis=1).max() < 1e-8
        assert left[:, 0].sum() == pytest.approx(right[:, 0].sum(), abs=1e-8)
        assert np.all(np.isnan(profile.forward[:, 165]))

    def test_profile_matches_scattering(self, defect_line):
        w = omega(5.0)
        net = network.build_chain(defect_line)
        s = network.linear_scattering(net, w)
        profile = network.wave_amplitude_profile(net, 0, w)
        assert abs(profile.forward[0, -1]) == pytest.approx(abs(s[2, 0]), abs=1e-6)
        assert abs(profile.forward[1, -1]) == pytest.approx(abs(s[3, 0]), abs=1e-6)

    def test_near_cutoff(self, fitted_cell):
        spec = device.LineSpec(cell=fitted_cell, n_cells=20, ports="nominal")
        w = dispersion.cutoff(ModeId.Delta, fitted_cell) * (1 - 1e-9)
        with pytest.raises(DecompositionIllConditioned):
            network.wave_amplitude_profile(network.build_chain(spec), 0, w)
