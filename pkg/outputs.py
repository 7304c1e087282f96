"""
Result files of a run: CSV tables, JSON documents, SVG quick-looks, the run
manifest and the error report.
"""

import csv
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

import utils  # noqa: E402

logger = logging.getLogger(__name__)

TOOL_VERSION = "1.0.0"

plt.rcParams["svg.hashsalt"] = "jtl"


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows):
    """Rows are written in the given order; floats use repr so reruns are byte-identical."""
    with open(path, "wt", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            assert len(row) == len(header), f"{path}: row of {len(row)} values for {len(header)} columns"
            writer.writerow([_cell(v) for v in row])
    logger.debug(f"wrote {path}")
    return path


def write_json(path, obj):
    with open(path, "wt") as f:
        f.write(json.dumps(obj, indent=4, sort_keys=True, default=utils.json_default))
        f.write("\n")
    logger.debug(f"wrote {path}")
    return path


def save_svg(path, draw, figsize=(6.4, 4.8)):
    """
    Best-effort plot: draw(fig) fills a fresh figure. Any failure is logged
    and the SVG skipped. Returns the path or None.
    """
    fig = plt.figure(figsize=figsize)
    try:
        draw(fig)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    except Exception as e:
        logger.warning(f"plot {os.path.basename(path)} skipped: {e}")
        return None
    finally:
        plt.close(fig)
    return path


def timestamp():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    started: str
    finished: str = None
    tool_version: str = TOOL_VERSION
    outputs: dict = field(default_factory=dict)  # file name -> sha256
    partial: bool = False
    missing_points: list = field(default_factory=list)

    def record(self, path):
        self.outputs[os.path.basename(path)] = utils.sha256_file(path)

    def to_dict(self):
        return asdict(self)

    def write(self, out_dir):
        self.finished = timestamp()
        return write_json(os.path.join(out_dir, "manifest.json"), self.to_dict())


def error_document(exc):
    if hasattr(exc, "to_dict"):
        return exc.to_dict()
    return {"error": type(exc).__name__, "message": str(exc)}


def write_error(out_dir, exc):
    """error.json in out_dir when the directory exists; the document is returned either way."""
    doc = error_document(exc)
    if out_dir and os.path.isdir(out_dir):
        try:
            write_json(os.path.join(out_dir, "error.json"), doc)
        except OSError as e:
            logger.warning(f"could not write error.json: {e}")
    return doc
