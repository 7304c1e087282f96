import numpy as np
import pytest

import touchstone


@pytest.fixture
def sweep():
    rng = np.random.default_rng(5)
    freqs = np.linspace(4e9, 8e9, 7)
    s = rng.normal(size=(7, 4, 4)) + 1j * rng.normal(size=(7, 4, 4))
    return freqs, s


class TestExport:
    def test_four_port_file_reads_back_exactly(self, tmp_path, sweep):
        freqs, s = sweep
        path = str(tmp_path / "line.s4p")
        touchstone.export_touchstone(path, freqs, s, 85.0)
        data = touchstone.read_touchstone(path)
        np.testing.assert_array_equal(data.freqs, freqs)
        np.testing.assert_array_equal(data.s, s)
        assert data.z_ref == 85.0
        assert data.n_ports == 4

    def test_two_port_column_order(self, tmp_path):
        s = np.array([[[0.1 + 0j, 0.2 + 0j], [0.3 + 0j, 0.4 + 0j]]])
        path = tmp_path / "two.s2p"
        touchstone.export_touchstone(str(path), [1e9], s, 50.0)
        record = [line for line in path.read_text().splitlines() if not line.startswith(("!", "#"))][0]
        assert [float(v) for v in record.split()[1::2]] == [0.1, 0.3, 0.2, 0.4]
        np.testing.assert_array_equal(touchstone.read_touchstone(str(path)).s, s)

    def test_port_comments(self, tmp_path, sweep):
        freqs, s = sweep
        z = np.column_stack([np.full(7, 85.0), np.linspace(27.0, 29.0, 7), np.full(7, 85.0), np.full(7, 27.2)])
        path = str(tmp_path / "line.s4p")
        touchstone.export_touchstone(path, freqs, s, 85.0, port_labels=["Sigma_L", "Delta_L", "Sigma_R", "Delta_R"],
                                     port_impedances=z, comments=["fitted line"])
        comments = touchstone.read_touchstone(path).comments
        assert comments[0] == "fitted line"
        assert "port 1 Sigma_L: Z0 = 85.0 ohm" in comments
        assert any("frequency dependent" in c for c in comments)


class TestRead:
    def test_magnitude_angle(self, tmp_path):
        path = tmp_path / "ma.s1p"
        path.write_text("! comment\n# GHz S MA R 50\n1.0 0.5 90\n2.0 0.25 0\n")
        data = touchstone.read_touchstone(str(path))
        np.testing.assert_allclose(data.freqs, [1e9, 2e9])
        np.testing.assert_allclose(data.s[:, 0, 0], [0.5j, 0.25], atol=1e-15)

    def test_decibel_angle(self, tmp_path):
        path = tmp_path / "db.s1p"
        path.write_text("# MHZ S DB R 50\n100 -6.020599913 180\n")
        data = touchstone.read_touchstone(str(path))
        assert data.freqs[0] == 1e8
        assert data.s[0, 0, 0] == pytest.approx(-0.5, abs=1e-9)

    def test_defaults_to_ghz_ma(self, tmp_path):
        path = tmp_path / "plain.s1p"
        path.write_text("#\n3 1 0\n")
        data = touchstone.read_touchstone(str(path))
        assert data.freqs[0] == 3e9
        assert data.z_ref == 50.0

    def test_incomplete_record(self, tmp_path):
        path = tmp_path / "cut.s2p"
        path.write_text("# HZ S RI R 50\n1e9 0 0 1 0 1 0\n")
        with pytest.raises(ValueError, match="records"):
            touchstone.read_touchstone(str(path))

    def test_missing_option_line(self, tmp_path):
        path = tmp_path / "bare.s1p"
        path.write_text("1 0.5 0\n")
        with pytest.raises(ValueError, match="option line"):
            touchstone.read_touchstone(str(path))

    def test_port_count_from_name(self, tmp_path):
        with pytest.raises(ValueError, match="port count"):
            touchstone.read_touchstone(str(tmp_path / "sweep.txt"))


class TestSweepFiles:
    def test_csv_real_imaginary(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("f_GHz,re,im\n4.0,0.5,0.0\n4.01,0.0,-0.5\n")
        freqs, values = touchstone.read_sweep(str(path))
        np.testing.assert_allclose(freqs, [4e9, 4.01e9])
        np.testing.assert_allclose(values, [0.5, -0.5j])

    def test_csv_decibel(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("f_Hz,mag_db,phase_deg\n4e9,0.0,90.0\n")
        freqs, values = touchstone.read_sweep_csv(str(path))
        assert freqs[0] == 4e9
        assert values[0] == pytest.approx(1j)

    def test_csv_without_frequency(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("freq,re,im\n4e9,1,0\n")
        with pytest.raises(ValueError, match="f_Hz"):
            touchstone.read_sweep_csv(str(path))

    def test_touchstone_entry(self, tmp_path, sweep):
        freqs, s = sweep
        path = str(tmp_path / "line.s4p")
        touchstone.export_touchstone(path, freqs, s, 85.0)
        got_freqs, values = touchstone.read_sweep(path, ports=(2, 0))
        np.testing.assert_array_equal(values, s[:, 2, 0])
        np.testing.assert_array_equal(got_freqs, freqs)
