import hashlib
import json
import logging
import os

import numpy as np
from scipy import constants

# reduced flux quantum hbar/2e and flux quantum h/2e
PHI0_REDUCED = constants.hbar / (2 * constants.e)
FLUX_QUANTUM = constants.h / (2 * constants.e)

GHZ = 2 * np.pi * 1e9  # rad/s per GHz


def ghz_to_omega(f_ghz):
    return np.asarray(f_ghz, dtype=float) * GHZ if np.ndim(f_ghz) else float(f_ghz) * GHZ


def omega_to_ghz(omega):
    return np.asarray(omega, dtype=float) / GHZ if np.ndim(omega) else float(omega) / GHZ


def amplitude_db(x):
    """20 log10 |x|; zero maps to -inf without a warning."""
    x = np.abs(np.asarray(x))
    with np.errstate(divide='ignore'):
        return 20 * np.log10(x)


def power_db(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide='ignore'):
        return 10 * np.log10(p)


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=json_default)


def json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return str(obj)


def config_hash(config):
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def sha256_file(path, chunk=1 << 16):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(chunk), b""):
            h.update(block)
    return h.hexdigest()


def make_rng(seed):
    return np.random.default_rng(seed)


def ensure_dir(path):
    if not os.path.exists(path):
        os.makedirs(path)
        logging.debug(f"created output directory {path}")
    return path


def uniform_grid(start, stop, n):
    assert n >= 1, "grid needs at least one point"
    return np.linspace(start, stop, int(n))
