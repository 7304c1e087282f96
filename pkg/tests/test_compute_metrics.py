import math

import numpy as np
import pytest

import compute_metrics
import outputs

MHZ = 1e6


class TestTraceMetrics:
    def test_smoothing_keeps_flat_trace(self):
        freqs = np.arange(0, 1000) * MHZ
        np.testing.assert_allclose(compute_metrics.smooth_trace(freqs, np.full(1000, -3.0)), -3.0)

    def test_gap_depth(self):
        freqs = np.arange(6500, 7501) * MHZ
        trace = -20 / (1 + ((freqs - 7e9) / (50 * MHZ)) ** 2)
        depth = compute_metrics.gap_depth(freqs, trace, 7e9)
        assert 15 < depth <= 20

    def test_gap_depth_needs_samples(self):
        freqs = np.arange(0, 100) * MHZ
        with pytest.raises(ValueError):
            compute_metrics.gap_depth(freqs, np.zeros(100), 5e9, search_hz=10 * MHZ)

    def test_ndb_bandwidth_box(self):
        freqs = np.arange(0, 1001) * MHZ
        ratio = np.where(np.abs(freqs - 500 * MHZ) <= 100 * MHZ, 20.0, 0.0)
        assert compute_metrics.ndb_bandwidth(freqs, ratio, 10) == pytest.approx(201 * MHZ)

    def test_ndb_bandwidth_ramp(self):
        freqs = np.arange(0, 1001) * MHZ
        ratio = 30 - 0.1 * np.abs(freqs - 500 * MHZ) / MHZ
        assert compute_metrics.ndb_bandwidth(freqs, ratio, 10) == pytest.approx(400 * MHZ)
        assert compute_metrics.ndb_bandwidth(freqs, ratio, 40) == 0.0

    def test_out_of_band(self):
        freqs = np.arange(0, 10001) * MHZ
        trace = np.where((freqs > 4e9) & (freqs < 6e9), -30.0, -3.0)
        assert compute_metrics.out_of_band_attenuation(freqs, trace, 4e9, 6e9) == pytest.approx(3.0)

    def test_critical_amplitude(self):
        a = [0.0, 0.1, 0.2, 0.3, 0.4]
        assert compute_metrics.critical_amplitude(a, [1, 1, 1.5, 3, 5]) == pytest.approx(0.3)
        assert math.isnan(compute_metrics.critical_amplitude(a, [1, 1, 1, 1, 1]))

    def test_isolation(self):
        np.testing.assert_allclose(compute_metrics.isolation_db([-20, -1], [-1, -1]), [19, 0])


class TestResultFiles:
    def test_map_metrics(self, tmp_path):
        probes = np.round(np.arange(6.5, 7.501, 0.001), 6)
        rows = []
        for f_pump in (2.0, 2.5):
            for f in probes:
                forward = -20 / (1 + ((f - 7.0) / 0.05) ** 2)
                rows.append((f_pump, float(f), forward, -0.1))
        path = outputs.write_csv(str(tmp_path / "nld_map.csv"),
                                 ["f_pump_GHz", "f_probe_GHz", "S_fw_dB", "S_bw_dB"], rows)
        entries = compute_metrics.compute(path)
        assert [e["f_pump_GHz"] for e in entries] == [2.0, 2.5]
        first = entries[0]
        assert first["center_GHz"] == pytest.approx(7.0)
        assert first["max_isolation_dB"] == pytest.approx(19.9)
        assert first["forward_depth_dB"] > 15
        assert first["bandwidth_10dB_MHz"] > first["bandwidth_15dB_MHz"] > 0

    def test_isolation_metrics(self, tmp_path):
        rows = [(0.0, 0.0, 0.0), (0.1, -5.0, 0.0), (0.2, -12.0, 0.0), (0.3, float("nan"), float("nan"))]
        path = outputs.write_csv(str(tmp_path / "isolation.csv"), ["pump_amplitude", "forward_dB", "backward_dB"], rows)
        entry = compute_metrics.compute(path)[0]
        assert entry["max_isolation_dB"] == 12.0
        assert entry["amplitude_at_10dB"] == 0.2

    def test_comment_lines_skipped(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("# produced by a test\na,b\n1,2\n")
        assert compute_metrics.read_columns(str(path))["b"][0] == 2.0

    def test_unknown_table(self, tmp_path):
        path = outputs.write_csv(str(tmp_path / "x.csv"), ["a"], [(1.0,)])
        with pytest.raises(ValueError):
            compute_metrics.compute(path)
