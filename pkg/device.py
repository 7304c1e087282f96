"""
Device description of the two-electrode Josephson line.

Units: SI for element values and angular frequencies, the cell (a = 1) for
lengths, so velocities are reported in cell/ns and wavevectors in rad/cell.
"""

import json
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

import utils
from errors import ConfigError

DEFECT_KINDS = ("open_junction",)
PORT_PRESETS = ("nominal", "taper", "bloch")
TAPER_IMPEDANCES = (89.0, 28.0)  # final taper impedances seen by the Sigma and Delta modes


@dataclass(frozen=True)
class CellParams:
    l_j: float
    c_g: float
    c_i: float
    c_j: float = None
    plasma_frequency: float = None
    a: float = 1.0

    def __post_init__(self):
        if self.c_j is None and self.plasma_frequency is None:
            raise ConfigError([("cell", "one of c_j or plasma_frequency is required")])
        if self.l_j <= 0:
            return  # validate() reports it
        if self.c_j is None:
            if self.plasma_frequency > 0:
                object.__setattr__(self, "c_j", 1.0 / (self.l_j * self.plasma_frequency ** 2))
        elif self.plasma_frequency is None:
            if self.c_j > 0:
                object.__setattr__(self, "plasma_frequency", 1.0 / math.sqrt(self.l_j * self.c_j))
        elif not math.isclose(self.plasma_frequency, 1.0 / math.sqrt(self.l_j * self.c_j), rel_tol=1e-9):
            raise ConfigError([("cell", "c_j and plasma_frequency are inconsistent")])

    @classmethod
    def from_velocities(cls, v_sigma, v_delta, plasma_ghz, l_j=0.94e-9):
        """
        Cell reproducing measured mode velocities (cell/ns).

        Velocities only fix the products L_J C_g and L_J (C_g + 2 C_i); the
        junction inductance has to come from the design.
        """
        vs, vd = v_sigma * 1e9, v_delta * 1e9
        c_g = 1.0 / (l_j * vs ** 2)
        c_i = (1.0 / (l_j * vd ** 2) - c_g) / 2
        return cls(l_j=l_j, c_g=c_g, c_i=c_i, plasma_frequency=utils.ghz_to_omega(plasma_ghz))

    @property
    def c_delta(self):
        return self.c_g + 2 * self.c_i

    @property
    def omega_g(self):
        return 1.0 / math.sqrt(self.l_j * self.c_g)

    @property
    def omega_j(self):
        return self.plasma_frequency

    @property
    def mu(self):
        return 1 + 2 * self.c_i / self.c_g

    @property
    def e_j(self):
        return utils.PHI0_REDUCED ** 2 / self.l_j

    def mode_capacitance(self, mode):
        return self.c_g if str(mode) == "Sigma" else self.c_delta


@dataclass(frozen=True)
class LineSpec:
    cell: CellParams
    n_cells: int = 400
    defects: tuple = ()
    disorder: float = 0.0
    seed: int = 1
    ports: str = "nominal"

    def with_defects(self, *defects):
        return replace(self, defects=tuple((int(i), k) for i, k in defects))


@dataclass(frozen=True)
class DerivedConstants:
    v_sigma0: float
    v_delta0: float
    z_sigma: float
    z_delta: float
    omega_sigma_co: float
    omega_delta_co: float
    omega_g: float
    omega_j: float
    mu: float

    def cutoff(self, mode):
        return self.omega_sigma_co if str(mode) == "Sigma" else self.omega_delta_co

    def velocity(self, mode):
        return self.v_sigma0 if str(mode) == "Sigma" else self.v_delta0

    def impedance(self, mode):
        return self.z_sigma if str(mode) == "Sigma" else self.z_delta


def derive_constants(cell):
    l, cg, cd, cj, a = cell.l_j, cell.c_g, cell.c_delta, cell.c_j, cell.a
    return DerivedConstants(
        v_sigma0=a / math.sqrt(l * cg) * 1e-9,
        v_delta0=a / math.sqrt(l * cd) * 1e-9,
        z_sigma=math.sqrt(l / cg),
        z_delta=math.sqrt(l / cd),
        omega_sigma_co=2 / math.sqrt(l * (cg + 4 * cj)),
        omega_delta_co=2 / math.sqrt(l * (cd + 4 * cj)),
        omega_g=cell.omega_g,
        omega_j=cell.omega_j,
        mu=cell.mu,
    )


def sample_disorder(spec):
    """
    Junction inductance table of shape (n_cells, 2): column 0 is the junction
    of electrode a, column 1 the one of electrode b. Open junctions are inf.
    """
    n, l_j, w = spec.n_cells, spec.cell.l_j, spec.disorder
    if w > 0:
        rng = utils.make_rng(spec.seed)
        table = rng.uniform(l_j * (1 - w), l_j * (1 + w), size=(n, 2))
    else:
        table = np.full((n, 2), l_j)
    for index, kind in spec.defects:
        assert kind == "open_junction"
        table[index, 0] = np.inf
    return table


def _check_cell(cell, path):
    violations = []
    for name in ("l_j", "c_g", "c_i", "c_j"):
        value = getattr(cell, name)
        if value is None or not value > 0 or not math.isfinite(value):
            violations.append((f"{path}.{name}", f"must be strictly positive, got {value}"))
    if not violations and not cell.c_j < cell.c_g:
        violations.append((f"{path}.c_j", "junction capacitance must stay below the ground capacitance"))
    if cell.a != 1.0:
        violations.append((f"{path}.a", "cell length is the unit of length and must be 1"))
    return violations


def check(spec):
    """List of (field_path, message) for every violated invariant of a LineSpec."""
    violations = _check_cell(spec.cell, "cell")
    if not isinstance(spec.n_cells, (int, np.integer)) or spec.n_cells < 1:
        violations.append(("n_cells", f"must be a positive integer, got {spec.n_cells}"))
    for j, (index, kind) in enumerate(spec.defects):
        if kind not in DEFECT_KINDS:
            violations.append((f"defects[{j}].kind", f"unknown defect kind {kind!r}"))
        if not 0 <= index < spec.n_cells:
            violations.append((f"defects[{j}].cell", f"index {index} out of range [0, {spec.n_cells})"))
    if not 0 <= spec.disorder < 0.5:
        violations.append(("disorder_halfwidth", f"must lie in [0, 0.5), got {spec.disorder}"))
    if spec.ports not in PORT_PRESETS:
        violations.append(("ports", f"must be one of {PORT_PRESETS}, got {spec.ports!r}"))
    return violations


def validate(spec):
    """Accepts a LineSpec or its JSON document; returns a LineSpec or raises ConfigError."""
    if isinstance(spec, dict):
        spec = from_document(spec)
    violations = check(spec)
    if violations:
        raise ConfigError(violations)
    return spec


def _parse_defects(items):
    defects = []
    for item in items:
        if isinstance(item, dict):
            defects.append((int(item.get("cell", -1)), item.get("kind", "open_junction")))
        elif isinstance(item, (list, tuple)):
            defects.append((int(item[0]), item[1] if len(item) > 1 else "open_junction"))
        else:
            defects.append((int(item), "open_junction"))
    return tuple(defects)


def from_document(doc):
    violations = []
    plasma = doc.get("plasma_ghz")
    c_j = doc.get("c_j_fF")
    if plasma is None and c_j is None:
        plasma = 32.9
    if plasma is not None and c_j is not None:
        violations.append(("plasma_ghz", "give either plasma_ghz or c_j_fF, not both"))
    l_j = float(doc.get("l_j_nH", 0.94)) * 1e-9
    try:
        if "v_sigma_cell_per_ns" in doc or "v_delta_cell_per_ns" in doc:
            if plasma is None:
                violations.append(("plasma_ghz", "velocity presets need plasma_ghz"))
                raise ConfigError(violations)
            cell = CellParams.from_velocities(
                float(doc["v_sigma_cell_per_ns"]), float(doc["v_delta_cell_per_ns"]), float(plasma), l_j=l_j)
        else:
            for key in ("c_g_pF", "c_i_pF"):
                if key not in doc:
                    violations.append((key, "missing"))
            if violations:
                raise ConfigError(violations)
            kwargs = dict(l_j=l_j, c_g=float(doc["c_g_pF"]) * 1e-12, c_i=float(doc["c_i_pF"]) * 1e-12)
            if c_j is not None:
                kwargs["c_j"] = float(c_j) * 1e-15
            else:
                kwargs["plasma_frequency"] = utils.ghz_to_omega(float(plasma))
            cell = CellParams(**kwargs)
    except (TypeError, KeyError) as e:
        raise ConfigError([("line", f"malformed document: {e}")])
    spec = LineSpec(cell=cell,
                    n_cells=doc.get("n_cells", 400),
                    defects=_parse_defects(doc.get("defects", [])),
                    disorder=float(doc.get("disorder_halfwidth", 0.0)),
                    seed=int(doc.get("seed", 1)),
                    ports=doc.get("ports", "nominal"))
    violations += check(spec)
    if violations:
        raise ConfigError(violations)
    return spec


def to_document(spec):
    cell = spec.cell
    return {
        "l_j_nH": cell.l_j * 1e9,
        "c_g_pF": cell.c_g * 1e12,
        "c_i_pF": cell.c_i * 1e12,
        "plasma_ghz": utils.omega_to_ghz(cell.plasma_frequency),
        "n_cells": int(spec.n_cells),
        "defects": [{"cell": int(i), "kind": k} for i, k in spec.defects],
        "disorder_halfwidth": spec.disorder,
        "seed": spec.seed,
        "ports": spec.ports,
    }


def load_line_spec(path):
    try:
        with open(path, "r") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError([("line", f"{path} is not valid JSON: {e}")])
    logging.debug(f"loaded line spec from {path}")
    return validate(doc)


def dump_line_spec(spec, path):
    with open(path, "w") as f:
        f.write(json.dumps(to_document(spec), indent=4))
