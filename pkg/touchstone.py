"""
Touchstone v1.1 writer and reader for the 4-port chain sweeps, plus a CSV
reader for single reflection traces.
"""

import csv
import logging
import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

FREQ_MULT = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9, "thz": 1e12}


@dataclass
class TouchstoneData:
    freqs: np.ndarray  # Hz
    s: np.ndarray  # (n_freq, n, n)
    z_ref: float
    comments: list = field(default_factory=list)

    @property
    def n_ports(self):
        return self.s.shape[1]


def _fmt(x):
    return repr(float(x))


def export_touchstone(path, freqs, s, z_ref, port_labels=None, port_impedances=None, comments=()):
    """
    Writes `s` (n_freq, n, n) in RI format with frequencies in Hz. Touchstone
    v1 carries one reference impedance; per-port values go into comments.

    :param port_impedances: optional (n_freq, n) array of port impedances
    """
    freqs = np.asarray(freqs, dtype=float)
    s = np.asarray(s, dtype=complex)
    n = s.shape[1]
    assert s.shape == (len(freqs), n, n)
    labels = port_labels or [f"port{j + 1}" for j in range(n)]

    with open(path, "wt") as f:
        for line in comments:
            f.write(f"! {line}\n")
        if port_impedances is not None:
            z = np.asarray(port_impedances, dtype=float)
            for j in range(n):
                lo, hi = z[:, j].min(), z[:, j].max()
                if math.isclose(lo, hi, rel_tol=1e-12):
                    f.write(f"! port {j + 1} {labels[j]}: Z0 = {_fmt(lo)} ohm\n")
                else:
                    f.write(f"! port {j + 1} {labels[j]}: Z0 from {_fmt(z[0, j])} to {_fmt(z[-1, j])} ohm "
                            f"(frequency dependent)\n")
        f.write(f"# HZ S RI R {_fmt(z_ref)}\n")
        for freq, matrix in zip(freqs, s):
            if n <= 2:
                values = matrix.T.reshape(-1)  # S11 S21 S12 S22 order
                f.write(" ".join([_fmt(freq)] + [f"{_fmt(v.real)} {_fmt(v.imag)}" for v in values]) + "\n")
                continue
            for j in range(n):
                head = _fmt(freq) if j == 0 else " " * len(_fmt(freq))
                f.write(" ".join([head] + [f"{_fmt(v.real)} {_fmt(v.imag)}" for v in matrix[j]]) + "\n")
    logger.debug(f"wrote {len(freqs)} frequencies of {n}-port data to {path}")


def _decode(pairs, fmt):
    a, b = pairs[:, 0], pairs[:, 1]
    if fmt == "ri":
        return a + 1j * b
    if fmt == "ma":
        return a * np.exp(1j * np.deg2rad(b))
    if fmt == "db":
        return 10.0 ** (a / 20.0) * np.exp(1j * np.deg2rad(b))
    raise ValueError(f"unknown data format {fmt!r}")


def read_touchstone(path, n_ports=None):
    if n_ports is None:
        found = re.findall(r"\.[sS](\d+)[pP]$", path)
        if not found:
            raise ValueError(f"cannot infer the port count from {path}")
        n_ports = int(found[0])
    n = n_ports

    header, comments, tokens = None, [], []
    with open(path, "rt") as f:
        for line in f:
            line = line.split("!", 1)
            if len(line) > 1:
                comments.append(line[1].strip())
            text = line[0].strip()
            if not text:
                continue
            if text.startswith("#"):
                header = text[1:].lower().split()
                continue
            tokens.extend(text.split())
    if header is None:
        raise ValueError(f"{path}: missing option line")

    unit, fmt, z_ref = "ghz", "ma", 50.0
    for j, word in enumerate(header):
        if word in FREQ_MULT:
            unit = word
        elif word in ("ri", "ma", "db"):
            fmt = word
        elif word == "r":
            z_ref = float(header[j + 1])
        elif word not in ("s",) and not re.match(r"^[\d.eE+-]+$", word):
            raise ValueError(f"{path}: unsupported option {word!r}")

    per_freq = 1 + 2 * n * n
    data = np.array(tokens, dtype=float)
    if len(data) % per_freq:
        raise ValueError(f"{path}: {len(data)} numbers do not split into {per_freq}-number records")
    data = data.reshape(-1, per_freq)
    freqs = data[:, 0] * FREQ_MULT[unit]
    s = _decode(data[:, 1:].reshape(-1, 2), fmt).reshape(-1, n, n)
    if n <= 2:
        s = np.transpose(s, (0, 2, 1))
    return TouchstoneData(freqs=freqs, s=s, z_ref=z_ref, comments=comments)


def read_sweep_csv(path):
    """
    Reflection trace from a CSV with a header naming the frequency column
    (f_Hz or f_GHz) and either re/im or mag_db/phase_deg columns.
    """
    with open(path, "rt", newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise ValueError(f"{path}: empty sweep")
    keys = rows[0].keys()
    if "f_Hz" in keys:
        freqs = np.array([float(r["f_Hz"]) for r in rows])
    elif "f_GHz" in keys:
        freqs = np.array([float(r["f_GHz"]) for r in rows]) * 1e9
    else:
        raise ValueError(f"{path}: needs an f_Hz or f_GHz column")
    if "re" in keys:
        values = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    else:
        pairs = np.array([[float(r["mag_db"]), float(r["phase_deg"])] for r in rows])
        values = _decode(pairs, "db")
    return freqs, values


def read_sweep(path, ports=(0, 0)):
    """(freqs, values) of one S-parameter from a Touchstone file or a CSV trace."""
    if os.path.splitext(path)[1].lower() == ".csv":
        return read_sweep_csv(path)
    data = read_touchstone(path)
    return data.freqs, data.s[:, ports[0], ports[1]]
