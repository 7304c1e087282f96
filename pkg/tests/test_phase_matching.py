import math

import numpy as np
import pytest

import phase_matching as pm
from errors import AmplitudeOutOfRange, NoSolutionInBand, PumpAboveCutoff
from phase_matching import MatchPoint, ProcessKind
from tests.conftest import FIT_V_DELTA, FIT_V_SIGMA, omega


class TestLowFrequencyEstimates:
    def test_circulation_formula(self):
        w_s, w_i = pm.circulation_point_lowfreq(omega(1.0), FIT_V_SIGMA, FIT_V_DELTA)
        assert w_s == pytest.approx(omega(1.0) * (FIT_V_SIGMA / FIT_V_DELTA - 1))
        assert w_i - w_s == pytest.approx(2 * omega(1.0))

    def test_coupler_formula(self):
        assert pm.coupler_point_lowfreq(omega(1.0), FIT_V_SIGMA, FIT_V_DELTA) == pytest.approx(
            omega(1.0) * FIT_V_SIGMA / FIT_V_DELTA)

    def test_needs_slow_delta(self):
        with pytest.raises(AssertionError):
            pm.circulation_point_lowfreq(omega(1.0), 30.0, 90.0)


class TestCorrectedSolver:
    @pytest.mark.parametrize("f_p", [0.1, 0.25])
    def test_converges_to_linear_estimate(self, fitted_cell, f_p):
        estimate, _ = pm.circulation_point_lowfreq(omega(f_p), FIT_V_SIGMA, FIT_V_DELTA)
        points = pm.solve_corrected(ProcessKind.Circulation, omega(f_p), 0.0, fitted_cell)
        assert len(points) == 1
        assert points[0].omega_s == pytest.approx(estimate, rel=1e-3)

    def test_dispersion_pulls_root_down(self, fitted_cell):
        estimate, _ = pm.circulation_point_lowfreq(omega(4.63), FIT_V_SIGMA, FIT_V_DELTA)
        point = pm.solve_corrected(ProcessKind.Circulation, omega(4.63), 0.0, fitted_cell)[0]
        assert point.omega_s < estimate

    def test_residual_at_root(self, fitted_cell):
        point = pm.solve_corrected(ProcessKind.Circulation, omega(4.63), 0.0, fitted_cell)[0]
        assert abs(point.kappa) < pm.RESIDUAL_TOL
        again = pm.momentum_residual(ProcessKind.Circulation, point.omega_s, omega(4.63), 0.0, fitted_cell)
        assert abs(again) < pm.RESIDUAL_TOL

    def test_circulation_signs(self, fitted_cell):
        point = pm.solve_corrected(ProcessKind.Circulation, omega(3.0), 0.0, fitted_cell)[0]
        assert point.k_s > 0
        assert point.k_i < 0
        assert point.k_p < 0
        assert point.omega_i == pytest.approx(point.omega_s + 2 * omega(3.0))

    def test_coupler_root(self, fitted_cell):
        point = pm.solve_corrected(ProcessKind.TunableCoupling, omega(0.2), 0.0, fitted_cell)[0]
        assert point.omega_s == pytest.approx(pm.coupler_point_lowfreq(omega(0.2), FIT_V_SIGMA, FIT_V_DELTA),
                                              rel=1e-3)
        assert point.omega_i == point.omega_s
        assert point.k_i == -point.k_s

    def test_pump_shifts_root(self, fitted_cell):
        bare = pm.solve_corrected(ProcessKind.Circulation, omega(3.0), 0.0, fitted_cell)[0]
        pumped = pm.solve_corrected(ProcessKind.Circulation, omega(3.0), 0.3, fitted_cell)[0]
        assert pumped.omega_s != bare.omega_s
        assert abs(pumped.kappa) < pm.RESIDUAL_TOL

    def test_pump_above_cutoff(self, fitted_cell):
        with pytest.raises(PumpAboveCutoff):
            pm.solve_corrected(ProcessKind.Circulation, omega(10.0), 0.0, fitted_cell)


class TestAliasedCirculation:
    def test_root_and_signs(self, fitted_cell):
        points = pm.solve_corrected(ProcessKind.CirculationAliased, omega(6.0), 0.0, fitted_cell)
        assert points
        for point in points:
            assert abs(point.kappa) < pm.RESIDUAL_TOL
            assert point.k_s < 0
            assert point.k_i > 0
            assert point.k_p < 0
            assert point.omega_i - point.omega_s == pytest.approx(2 * omega(6.0))
            folded = abs(point.k_s) + abs(point.k_i) + 2 * abs(point.k_p)
            assert folded == pytest.approx(2 * math.pi / fitted_cell.a, abs=1e-8)

    def test_forward_gap_sits_at_idler(self, fitted_cell):
        point = pm.solve_corrected(ProcessKind.CirculationAliased, omega(6.0), 0.0, fitted_cell)[0]
        assert point.omega_probe == point.omega_i
        backward = pm.solve_corrected(ProcessKind.CirculationAliased, omega(6.0), 0.0, fitted_cell, "backward")[0]
        assert backward.omega_probe == backward.omega_s

    @pytest.mark.parametrize("f_p", [2.5, 3.5, 4.5])
    def test_no_root_at_low_pump(self, fitted_cell, f_p):
        with pytest.raises(NoSolutionInBand):
            pm.solve_corrected(ProcessKind.CirculationAliased, omega(f_p), 0.0, fitted_cell)


class TestCouplerPumpPair:
    def test_silent_pair_matches_unpumped(self, fitted_cell):
        bare = pm.solve_corrected(ProcessKind.TunableCoupling, omega(2.0), 0.0, fitted_cell)[0]
        pair = pm.solve_corrected(ProcessKind.TunableCoupling, omega(2.0), (0.0, 0.0), fitted_cell)[0]
        assert pair.omega_s == bare.omega_s
        assert pair.k_p == bare.k_p

    def test_pair_is_symmetric(self, fitted_cell):
        ab = pm.solve_corrected(ProcessKind.TunableCoupling, omega(2.0), (0.1, 0.25), fitted_cell)[0]
        ba = pm.solve_corrected(ProcessKind.TunableCoupling, omega(2.0), (0.25, 0.1), fitted_cell)[0]
        assert ab.omega_s == pytest.approx(ba.omega_s, rel=1e-12)
        assert abs(ab.kappa) < pm.RESIDUAL_TOL

    def test_second_pump_shifts_root(self, fitted_cell):
        one = pm.solve_corrected(ProcessKind.TunableCoupling, omega(2.0), (0.2, 0.0), fitted_cell)[0]
        two = pm.solve_corrected(ProcessKind.TunableCoupling, omega(2.0), (0.2, 0.2), fitted_cell)[0]
        assert two.omega_s != one.omega_s
        assert abs(two.kappa) < pm.RESIDUAL_TOL

    def test_one_sided_pair_matches_scalar_inductance(self, fitted_cell):
        scalar = pm._Residual(ProcessKind.TunableCoupling, omega(2.0), 0.2, fitted_cell)
        pair = pm._Residual(ProcessKind.TunableCoupling, omega(2.0), (0.2, 0.0), fitted_cell)
        assert pair.l_sigma == pytest.approx(scalar.l_sigma, rel=1e-14)
        assert pair.k_p == pytest.approx((scalar.k_p + pm._Residual(
            ProcessKind.TunableCoupling, omega(2.0), 0.0, fitted_cell).k_p) / 2, rel=1e-14)

    def test_pair_out_of_range(self, fitted_cell):
        with pytest.raises(AmplitudeOutOfRange):
            pm.solve_corrected(ProcessKind.TunableCoupling, omega(2.0), (0.1, 5.0), fitted_cell)

    def test_pair_needs_coupler(self, fitted_cell):
        with pytest.raises(ValueError):
            pm.solve_corrected(ProcessKind.Circulation, omega(2.0), (0.1, 0.1), fitted_cell)


class TestProbeFrequency:
    def _point(self, kind, direction):
        return MatchPoint(kind=kind, direction=direction, omega_s=1.0, omega_i=2.0, omega_p=0.5,
                          k_s=0.1, k_i=-0.2, k_p=-0.15)

    @pytest.mark.parametrize("kind,direction,expected", [
        (ProcessKind.Circulation, "forward", 1.0),
        (ProcessKind.Circulation, "backward", 2.0),
        (ProcessKind.CirculationAliased, "forward", 2.0),
        (ProcessKind.CirculationAliased, "backward", 1.0),
        (ProcessKind.TunableCoupling, "forward", 1.0),
        (ProcessKind.TunableCoupling, "backward", 1.0),
    ])
    def test_omega_probe(self, kind, direction, expected):
        assert self._point(kind, direction).omega_probe == expected

    def test_labels(self):
        assert [k.label for k in ProcessKind] == ["Ci", "Al", "Co"]


def test_bracket_roots():
    brackets = pm.bracket_roots(np.cos, 0.0, 10.0, step=0.1)
    roots = [math.pi / 2, 3 * math.pi / 2, 5 * math.pi / 2]
    assert len(brackets) == len(roots)
    for (a, b), r in zip(brackets, roots):
        assert a <= r <= b


def test_bracket_roots_skips_nan():
    def f(x):
        return np.where(x < 5, np.nan, x - 7.05)
    brackets = pm.bracket_roots(f, 0.0, 10.0, step=0.1)
    assert len(brackets) == 1
    assert brackets[0][0] <= 7.05 <= brackets[0][1]


class TestGapMap:
    def test_curves_sorted_and_keyed(self, fitted_cell):
        grid = omega(np.linspace(1.0, 4.0, 7))
        curves = pm.gap_map([ProcessKind.Circulation], grid, fitted_cell)
        assert set(curves) == {(ProcessKind.Circulation, "forward"), (ProcessKind.Circulation, "backward")}
        forward = curves[(ProcessKind.Circulation, "forward")]
        backward = curves[(ProcessKind.Circulation, "backward")]
        assert forward.shape == (7, 2)
        assert np.all(np.diff(forward[:, 0]) > 0)
        np.testing.assert_allclose(backward[:, 1] - forward[:, 1], 2 * forward[:, 0], rtol=1e-9)

    def test_threads_do_not_change_result(self, fitted_cell):
        grid = omega(np.linspace(1.0, 6.0, 11))
        kinds = [ProcessKind.Circulation, ProcessKind.TunableCoupling]
        single = pm.gap_map(kinds, grid, fitted_cell, threads=1)
        pooled = pm.gap_map(kinds, grid, fitted_cell, threads=4)
        for key in single:
            np.testing.assert_array_equal(single[key], pooled[key])

    def test_points_above_cutoff_are_skipped(self, fitted_cell):
        grid = omega(np.array([2.0, 9.5]))
        curves = pm.gap_map([ProcessKind.Circulation], grid, fitted_cell, directions=("forward",))
        assert curves[(ProcessKind.Circulation, "forward")].shape == (1, 2)
