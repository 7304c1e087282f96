import argparse
import csv
import logging
import math

import numpy as np
from scipy import ndimage

logger = logging.getLogger(__name__)


# moving average in frequency, edges padded with the nearest sample
def smooth_trace(freqs, trace_db, window_hz=40e6):
    freqs = np.asarray(freqs, dtype=float)
    trace_db = np.asarray(trace_db, dtype=float)
    if len(freqs) < 2:
        return trace_db.copy()
    step = (freqs[-1] - freqs[0]) / (len(freqs) - 1)
    width = max(int(round(window_hz / step)), 1)
    return ndimage.uniform_filter1d(trace_db, size=width, mode="nearest")


# depth (positive dB) of the smoothed transmission dip within search_hz of `center`
def gap_depth(freqs, trace_db, center, window_hz=40e6, search_hz=0.5e9):
    freqs = np.asarray(freqs, dtype=float)
    smoothed = smooth_trace(freqs, trace_db, window_hz)
    near = np.abs(freqs - center) <= search_hz
    if not near.any():
        raise ValueError(f"no samples within {search_hz / 1e6:.0f} MHz of {center / 1e9:.4g} GHz")
    return float(-smoothed[near].min())


def _crossing(f0, f1, y0, y1, level):
    if y1 == y0:
        return f0
    return f0 + (level - y0) * (f1 - f0) / (y1 - y0)


def ndb_bandwidth(freqs, ratio_db, level_db):
    """
    Width (Hz) of the region around the extremum of |ratio_db| where it stays
    above level_db, edges linearly interpolated. Zero when the extremum never
    reaches the level.
    """
    freqs = np.asarray(freqs, dtype=float)
    y = np.abs(np.asarray(ratio_db, dtype=float))
    peak = int(np.nanargmax(y))
    if y[peak] < level_db:
        return 0.0

    lo = peak
    while lo > 0 and y[lo - 1] >= level_db:
        lo -= 1
    hi = peak
    while hi < len(y) - 1 and y[hi + 1] >= level_db:
        hi += 1
    left = freqs[lo] if lo == 0 else _crossing(freqs[lo - 1], freqs[lo], y[lo - 1], y[lo], level_db)
    right = freqs[hi] if hi == len(y) - 1 else _crossing(freqs[hi], freqs[hi + 1], y[hi], y[hi + 1], level_db)
    return float(right - left)


def out_of_band_attenuation(freqs, trace_db, gap_low, gap_high, band_hz=1e9):
    """Mean attenuation (positive dB) over band_hz on either side of [gap_low, gap_high]."""
    freqs = np.asarray(freqs, dtype=float)
    trace_db = np.asarray(trace_db, dtype=float)
    below = (freqs >= gap_low - band_hz) & (freqs < gap_low)
    above = (freqs > gap_high) & (freqs <= gap_high + band_hz)
    sides = [-trace_db[m].mean() for m in (below, above) if m.any()]
    if not sides:
        raise ValueError("no samples outside the gap")
    return float(np.mean(sides))


def critical_amplitude(amplitudes, out_of_band_db, rise_db=2.0):
    """
    Smallest amplitude where out-of-band attenuation exceeds its value at the
    lowest amplitude by rise_db, interpolated; nan when it never does.
    """
    order = np.argsort(amplitudes)
    a = np.asarray(amplitudes, dtype=float)[order]
    y = np.asarray(out_of_band_db, dtype=float)[order]
    level = y[0] + rise_db
    above = np.nonzero(y >= level)[0]
    if len(above) == 0:
        return math.nan
    j = above[0]
    return float(_crossing(a[j - 1], a[j], y[j - 1], y[j], level)) if j > 0 else float(a[0])


# transmission in dB, isolation = how much more the forward wave is attenuated
def isolation_db(forward_db, backward_db):
    return np.asarray(backward_db, dtype=float) - np.asarray(forward_db, dtype=float)


def read_columns(path):
    """Numeric columns of a result CSV keyed by header name; `#` lines are skipped."""
    with open(path, "rt", newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def map_metrics(columns, center_hz=None, window_hz=40e6, levels=(5, 10, 15)):
    """
    Figures of merit of a transmission map for each pump frequency: gap
    depth on forward and backward traces and the N-dB widths of the
    backward/forward ratio.
    """
    out = []
    for f_pump in np.unique(columns["f_pump_GHz"]):
        rows = columns["f_pump_GHz"] == f_pump
        freqs = columns["f_probe_GHz"][rows] * 1e9
        forward, backward = columns["S_fw_dB"][rows], columns["S_bw_dB"][rows]
        ratio = isolation_db(forward, backward)
        center = center_hz if center_hz is not None else freqs[int(np.nanargmax(np.abs(ratio)))]
        entry = {"f_pump_GHz": float(f_pump),
                 "center_GHz": float(center / 1e9),
                 "forward_depth_dB": gap_depth(freqs, forward, center, window_hz),
                 "backward_depth_dB": gap_depth(freqs, backward, center, window_hz),
                 "max_isolation_dB": float(np.nanmax(ratio))}
        for level in levels:
            entry[f"bandwidth_{level}dB_MHz"] = ndb_bandwidth(freqs, ratio, level) / 1e6
        out.append(entry)
    return out


def isolation_metrics(columns):
    """Peak isolation of an amplitude sweep and the amplitude where it first reaches 10 dB."""
    amplitude = columns["pump_amplitude"]
    ratio = isolation_db(columns["forward_dB"], columns["backward_dB"])
    ok = np.isfinite(ratio)
    reached = amplitude[ok][ratio[ok] >= 10.0]
    return [{"max_isolation_dB": float(np.max(ratio[ok])) if ok.any() else math.nan,
             "amplitude_at_10dB": float(reached.min()) if len(reached) else math.nan}]


def compute(path, center_hz=None, window_hz=40e6):
    columns = read_columns(path)
    if "f_probe_GHz" in columns:
        return map_metrics(columns, center_hz, window_hz)
    if "pump_amplitude" in columns:
        return isolation_metrics(columns)
    raise ValueError(f"{path}: neither a transmission map nor an isolation sweep")


if __name__ == '__main__':
    parser = argparse.ArgumentParser()
    parser.add_argument("csv_file")  # nld-map or isolate output
    parser.add_argument("--center_ghz", default=None, type=float)
    parser.add_argument("--window_mhz", default=40.0, type=float)
    args = parser.parse_args()

    center = args.center_ghz * 1e9 if args.center_ghz is not None else None
    for entry in compute(args.csv_file, center, args.window_mhz * 1e6):
        print(", ".join(f"{k}: {v:.4g}" for k, v in entry.items()))
