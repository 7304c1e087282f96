import math

import numpy as np
import pytest
from scipy import integrate

import coupled_mode as cm
import network
import phase_matching as pm
from coupled_mode import ProcessConfig
from errors import AmplitudeOutOfRange, SectionMismatch, WrongPropagationSigns
from phase_matching import ProcessKind
from tests.conftest import omega


@pytest.fixture
def match(fitted_cell):
    return pm.solve_corrected(ProcessKind.Circulation, omega(4.63), 0.0, fitted_cell)[0]


@pytest.fixture
def config(match):
    return ProcessConfig.from_match(match, length=400, pump_bw=0.15)


class TestUniform:
    def test_idler_boundary_and_total(self, config):
        sol = cm.solve_uniform(config)
        assert abs(sol.eps_i[-1]) < 1e-14
        assert sol.eps_s[0] == pytest.approx(1.0)
        assert sol.total_attenuation == pytest.approx(cm.total_attenuation(sol.alpha * 400))
        assert sol.attenuation_db < 0
        assert len(sol.x) == 401

    def test_matches_direct_integration(self, config):
        sol = cm.solve_uniform(config)
        c, q = config.coupling, config.pump_bw ** 2
        k_s, k_i = sol.k_s, sol.k_i

        def rhs(x, y):
            return [1j * c * np.conj(q) * k_i * y[1], 1j * c * q * k_s * y[0]]

        out = integrate.solve_ivp(rhs, (0, 400), [complex(sol.eps_s[0]), complex(sol.eps_i[0])],
                                  rtol=1e-10, atol=1e-12)
        assert out.y[0, -1] == pytest.approx(sol.eps_s[-1], abs=1e-6)
        assert abs(out.y[1, -1]) < 1e-6

    def test_manley_rowe(self, config):
        rng = np.random.default_rng(0)
        unit = cm.attenuation_constant(config.scaled(1 / config.pump_bw))
        eps_max = math.sqrt(5.0 / (400 * unit))
        for _ in range(100):
            fw, bw = rng.uniform(0, eps_max, size=2) * np.exp(2j * math.pi * rng.uniform(size=2))
            direction = "forward" if rng.uniform() < 0.5 else "backward"
            cfg = ProcessConfig.from_match(config.with_direction(direction), length=400, pump_fw=fw, pump_bw=bw)
            sol = cm.solve_uniform(cfg)
            assert sol.alpha * 400 <= 5.0 + 1e-9
            flux = sol.photon_flux()
            np.testing.assert_allclose(flux, flux[0], rtol=1e-9)

    def test_attenuation_scales_with_pump_squared(self, config):
        amplitudes = np.array([0.05, 0.1, 0.15, 0.2])
        alphas = [cm.attenuation_constant(config.scaled(a / config.pump_bw)) for a in amplitudes]
        slope = np.polyfit(np.log(amplitudes), np.log(alphas), 1)[0]
        assert slope == pytest.approx(2.0, abs=1e-9)

    def test_no_pump_is_transparent(self, match):
        sol = cm.solve_uniform(ProcessConfig.from_match(match))
        assert sol.alpha == 0
        assert sol.total_attenuation == 1.0

    def test_backward_probe_needs_forward_pump(self, config):
        forward = cm.solve_uniform(config.with_direction("forward"))
        backward = cm.solve_uniform(config.with_direction("backward"))
        assert forward.attenuation_db < -3
        assert backward.attenuation_db == 0

    def test_wrong_signs(self, config):
        with pytest.raises(WrongPropagationSigns):
            cm.attenuation_constant(config, k_s=0.3, k_i=0.2)

    def test_amplitude_out_of_range(self, match):
        with pytest.raises(AmplitudeOutOfRange):
            cm.solve_uniform(ProcessConfig.from_match(match, pump_bw=3.0))

    def test_sections_rejected(self, config):
        cfg = ProcessConfig.from_match(config, sections=((0, 200, 0, 0.1), (200, 400, 0, 0.1)))
        with pytest.raises(SectionMismatch):
            cm.solve_uniform(cfg)



class TestDetuned:
    def test_zero_detuning_matches_closed_form(self, config):
        closed = cm.solve_uniform(config)
        detuned = cm.solve_detuned(config, 0.0)
        np.testing.assert_allclose(detuned.eps_s, closed.eps_s, atol=1e-8)
        np.testing.assert_allclose(detuned.eps_i, closed.eps_i, atol=1e-8)

    def test_even_in_detuning(self, config):
        alpha = cm.attenuation_constant(config)
        for kappa in (0.5 * alpha, 2 * alpha, 5 * alpha):
            plus = cm.solve_detuned(config, kappa).total_attenuation
            minus = cm.solve_detuned(config, -kappa).total_attenuation
            assert abs(plus) == pytest.approx(abs(minus), abs=1e-10)

    def test_second_order_form(self, config):
        alpha = cm.attenuation_constant(config)
        kappa = 2 * alpha
        sol = cm.solve_detuned(config, kappa, n_points=801)
        dx = sol.x[1] - sol.x[0]
        d1 = np.gradient(sol.eps_s, dx)
        d2 = np.gradient(d1, dx)
        inner = slice(4, -4)
        residual = d2 + 1j * kappa * d1 - alpha ** 2 * sol.eps_s
        flipped = d2 - 1j * kappa * d1 - alpha ** 2 * sol.eps_s
        assert np.abs(residual[inner]).max() < 1e-2 * alpha ** 2
        assert np.abs(flipped[inner]).max() > 0.1 * alpha ** 2

    def test_opposite_convention_is_conjugate(self, config):
        alpha = cm.attenuation_constant(config)
        plus = cm.solve_detuned(config, 2 * alpha)
        minus = cm.solve_detuned(config, -2 * alpha)
        np.testing.assert_allclose(minus.eps_s, np.conj(plus.eps_s), atol=1e-9)

    def test_far_detuned_probe_passes(self, config):
        alpha = cm.attenuation_constant(config)
        far = cm.solve_detuned(config, 20 * alpha).total_attenuation
        assert abs(far) > 0.98

    def test_gap_shape(self, config):
        alpha = cm.attenuation_constant(config)
        kappas = alpha * np.array([0.0, 1.0, 4.0, 20.0])
        t = np.abs(cm.attenuation_vs_detuning(config, kappas))
        assert t[0] == t.min()
        assert t[3] > 0.98

    def test_detuning_to_kappa(self):
        assert cm.detuning_to_kappa(omega(0.1), 93.6) == pytest.approx(2 * omega(0.1) / 93.6e9)

    def test_bandwidth_range(self, match):
        cfg = ProcessConfig.from_match(match, pump_bw=0.3)
        bandwidth = cm.bandwidth_estimate(cfg, match)
        assert 20e6 < bandwidth / (2 * math.pi) < 2e9
        double = cm.bandwidth_estimate(ProcessConfig.from_match(match, pump_bw=0.6), match)
        assert double / bandwidth == pytest.approx(4.0)


class TestSections:
    def _transparent(self):
        s = np.zeros((4, 4), dtype=complex)
        s[0, 2] = s[2, 0] = s[1, 3] = s[3, 1] = 1
        return s

    def test_transparent_defect_is_uniform(self, match):
        uniform = ProcessConfig.from_match(match, pump_fw=0.1, pump_bw=0.15)
        split = ProcessConfig.from_match(match, sections=((0, 170, 0.1, 0.15), (170, 400, 0.1, 0.15)))
        forward, backward = cm.solve_with_defect(split, self._transparent())
        assert forward == pytest.approx(cm.solve_uniform(uniform.with_direction("forward")).total_attenuation,
                                        abs=1e-9)
        assert backward == pytest.approx(cm.solve_uniform(uniform.with_direction("backward")).total_attenuation,
                                         abs=1e-9)

    def test_unpumped_defect_transmits_sigma_block(self, match, defect_line):
        split = ProcessConfig.from_match(match, sections=((0, 165, 0, 0), (165, 400, 0, 0)))
        s = network.defect_scattering(defect_line, match.omega_s)
        forward, backward = cm.solve_with_defect(split, lambda w: network.defect_scattering(defect_line, w))
        assert forward == pytest.approx(s[2, 0], abs=1e-12)
        assert backward == pytest.approx(s[0, 2], abs=1e-12)

    def test_gap_between_sections(self, match):
        split = ProcessConfig.from_match(match, sections=((0, 160, 0, 0.1), (170, 400, 0, 0.1)))
        with pytest.raises(SectionMismatch):
            cm.solve_with_defect(split, self._transparent())

    def test_defect_count(self, match):
        split = ProcessConfig.from_match(match, sections=((0, 160, 0, 0.1), (160, 400, 0, 0.1)))
        with pytest.raises(SectionMismatch):
            cm.solve_with_defect(split, [])


class TestIsolationSweep:
    def test_uniform_sweep(self, match):
        unit = ProcessConfig.from_match(match, pump_bw=1.0)
        rows = cm.isolation_sweep(unit, [0.0, 0.05, 0.1, 3.0])
        assert rows.shape == (4, 3)
        assert rows[0, 1] == 0 and rows[0, 2] == 0
        assert rows[2, 1] < rows[1, 1] < 0
        assert np.all(rows[:3, 2] == 0)
        assert np.isnan(rows[3, 1]) and np.isnan(rows[3, 2])

    def test_deep_attenuation_is_floored(self, match):
        unit = ProcessConfig.from_match(match, pump_bw=1.0)
        deep = math.sqrt(16.0 / (400 * cm.attenuation_constant(unit)))
        rows = cm.isolation_sweep(unit, deep * np.array([0.25, 0.5, 0.75, 1.0]))
        assert rows[0, 1] > cm.DB_FLOOR
        assert rows[-1, 1] == cm.DB_FLOOR
        assert np.all(rows[:, 1] >= cm.DB_FLOOR)
        assert np.all(np.diff(rows[:, 1]) <= 0)
        assert np.all(rows[:, 2] == 0)

    def test_threads_do_not_change_result(self, match):
        unit = ProcessConfig.from_match(match, pump_bw=1.0)
        amplitudes = np.linspace(0, 0.2, 9)
        np.testing.assert_array_equal(cm.isolation_sweep(unit, amplitudes),
                                      cm.isolation_sweep(unit, amplitudes, threads=3))

    def test_tunable_coupling_is_reciprocal(self, fitted_cell):
        co = pm.solve_corrected(ProcessKind.TunableCoupling, omega(2.0), 0.0, fitted_cell)[0]
        rows = cm.isolation_sweep(ProcessConfig.from_match(co, pump_fw=1.0, pump_bw=1.0), [0.05, 0.1])
        np.testing.assert_allclose(rows[:, 1], rows[:, 2], atol=1e-9)
        assert np.all(rows[:, 1] < 0)
