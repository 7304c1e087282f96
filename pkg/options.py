import argparse
import json
import os

from errors import ConfigError

COMMANDS = ("dispersion", "phase-match", "gaps-map", "envelope", "isolate", "nld-sim", "nld-map",
            "scatter", "tdr", "reproduce-fig", "metrics")
FIGURES = ("2", "3b", "S6", "S4")
PROCESSES = ("Ci", "Al", "Co")

DEFAULT_LINE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "configs", "fitted_line.json")


def add_general_args(parser):
    parser.add_argument("command", choices=COMMANDS,
                        help="Experiment to run.")
    parser.add_argument("target", nargs="?", default=None,
                        help="Figure id for reproduce-fig (2, 3b, S6, S4), result CSV for metrics.")
    parser.add_argument("--config", default=None,
                        help="JSON file of option values; keys are option names with underscores. "
                             "Flags given on the command line take precedence.")
    parser.add_argument("--seed", default=None, type=int,
                        help="Disorder seed. (default: the seed of the line document)")
    parser.add_argument("--threads", default=1, type=int,
                        help="Worker threads for grid fan-out. (default=1)")
    parser.add_argument("--verbose", action="store_true",
                        help="Log solver iterations.")
    return parser


def add_device_args(parser):
    parser.add_argument("--line", default=DEFAULT_LINE,
                        help="LineSpec JSON document. (default: bundled fitted preset)")
    parser.add_argument("--ports", default=None, choices=("nominal", "taper", "bloch"),
                        help="Override the port reference preset of the line.")
    parser.add_argument("--n-cells", dest="n_cells", default=None, type=int,
                        help="Override the number of cells.")
    parser.add_argument("--disorder", default=None, type=float,
                        help="Override the junction inductance disorder half-width (fraction of L_J).")
    parser.add_argument("--no-defects", dest="no_defects", action="store_true",
                        help="Drop the defects listed in the line document.")
    return parser


def add_dispersion_args(parser):
    parser.add_argument("--freq-start-ghz", dest="freq_start_ghz", default=None, type=float,
                        help="First frequency of the sweep (GHz).")
    parser.add_argument("--freq-stop-ghz", dest="freq_stop_ghz", default=None, type=float,
                        help="Last frequency of the sweep (GHz).")
    parser.add_argument("--freq-points", dest="freq_points", default=None, type=int,
                        help="Number of sweep points.")
    return parser


def add_phase_match_args(parser):
    parser.add_argument("--process", default=None, nargs="+", choices=PROCESSES,
                        help="Wave-mixing processes (Ci circulation, Al aliased circulation, Co coupling).")
    parser.add_argument("--direction", default="forward", choices=("forward", "backward"),
                        help="Propagation direction of the probe. (default=forward)")
    parser.add_argument("--pump-ghz", dest="pump_ghz", default=4.63, type=float,
                        help="Pump frequency (GHz). (default=4.63)")
    parser.add_argument("--pump-amplitude", dest="pump_amplitude", default=0.0, type=float,
                        help="Reduced pump amplitude epsilon_p. (default=0)")
    parser.add_argument("--pump-start-ghz", dest="pump_start_ghz", default=1.0, type=float,
                        help="First pump frequency of a map (GHz).")
    parser.add_argument("--pump-stop-ghz", dest="pump_stop_ghz", default=6.0, type=float,
                        help="Last pump frequency of a map (GHz).")
    parser.add_argument("--pump-points", dest="pump_points", default=51, type=int,
                        help="Pump frequencies in a map. (default=51)")
    return parser


def add_coupled_mode_args(parser):
    parser.add_argument("--detuning-mhz", dest="detuning_mhz", default=0.0, type=float,
                        help="Probe detuning from the matched frequency (MHz). (default=0)")
    parser.add_argument("--x-points", dest="x_points", default=None, type=int,
                        help="Envelope samples along the line. (default: one per cell)")
    parser.add_argument("--amplitude-start", dest="amplitude_start", default=0.0, type=float,
                        help="First pump amplitude of an isolation sweep.")
    parser.add_argument("--amplitude-stop", dest="amplitude_stop", default=0.6, type=float,
                        help="Last pump amplitude of an isolation sweep.")
    parser.add_argument("--amplitude-points", dest="amplitude_points", default=31, type=int,
                        help="Pump amplitudes in an isolation sweep. (default=31)")
    return parser


def add_nld_args(parser):
    parser.add_argument("--harmonics", default=3, type=int,
                        help="Odd pump harmonics retained, M in {1, 3, ..., 2M-1}. (default=3)")
    parser.add_argument("--sidebands", default=2, type=int,
                        help="Signal sidebands on each side of the probe. (default=2)")
    parser.add_argument("--pump-ports", dest="pump_ports", default=[3], nargs="+", type=int,
                        help="Ports driven by the pump, 0..3 for Sigma_L, Delta_L, Sigma_R, Delta_R. (default=3)")
    parser.add_argument("--probe-ghz", dest="probe_ghz", default=None, type=float,
                        help="Probe frequency of a single-point simulation (GHz). "
                             "(default: the circulation match point)")
    parser.add_argument("--tol", default=1e-10, type=float,
                        help="Relative harmonic-balance residual tolerance. (default=1e-10)")
    parser.add_argument("--max-iter", dest="max_iter", default=30, type=int,
                        help="Newton iterations per attempt. (default=30)")
    parser.add_argument("--pump-cache", dest="pump_cache", default=None,
                        help="Directory of pickled pump solutions keyed by configuration hash.")
    parser.add_argument("--with-nld", dest="with_nld", action="store_true",
                        help="reproduce-fig 2: add the harmonic-balance transmission map.")
    return parser


def add_tdr_args(parser):
    parser.add_argument("--input", default=None,
                        help="Touchstone (.s4p, .s1p, ...) or CSV sweep; without it the line is simulated.")
    parser.add_argument("--sweep-port", dest="sweep_port", default=[0, 0], nargs=2, type=int,
                        help="S-parameter (row, column) read from a Touchstone input. (default=0 0)")
    parser.add_argument("--window", default="kaiser", choices=("none", "kaiser", "hann"),
                        help="Window applied before the inverse transform. (default=kaiser)")
    parser.add_argument("--beta", default=6.0, type=float,
                        help="Kaiser window beta. (default=6)")
    parser.add_argument("--velocity", default=None, type=float,
                        help="Propagation velocity for position conversion (cell/ns). "
                             "(default: Sigma velocity at band centre)")
    parser.add_argument("--velocity-convention", dest="velocity_convention", default="group",
                        choices=("group", "phase"),
                        help="Velocity used when --velocity is not given. (default=group)")
    parser.add_argument("--offset-ns", dest="offset_ns", default=0.0, type=float,
                        help="Time of the reference plane (ns). (default=0)")
    return parser


def add_output_args(parser):
    parser.add_argument("--out-dir", dest="out_dir", default="results",
                        help="Output directory. (default=results)")
    parser.add_argument("--tensorboard", action="store_true",
                        help="Write solver scalars to <out-dir>/tb.")
    parser.add_argument("--no-svg", dest="no_svg", action="store_true",
                        help="Skip the SVG quick-look plots.")
    return parser


def build_parser():
    parser = argparse.ArgumentParser(description="Two-mode Josephson line simulator.")
    add_general_args(parser)
    add_device_args(parser)
    add_dispersion_args(parser)
    add_phase_match_args(parser)
    add_coupled_mode_args(parser)
    add_nld_args(parser)
    add_tdr_args(parser)
    add_output_args(parser)
    return parser


def load_config_file(path, parser):
    """Option values from a JSON config, checked against the parser's option names."""
    try:
        with open(path, "r") as f:
            values = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError([("config", f"{path} is not valid JSON: {e}")])
    if not isinstance(values, dict):
        raise ConfigError([("config", f"{path} must hold a JSON object")])
    known = {action.dest for action in parser._actions}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError([(key, "unknown option") for key in unknown])
    return values


def parse_args(argv=None):
    """(args, unknown) with config-file values under explicit command-line flags."""
    parser = build_parser()
    args, unknown = parser.parse_known_args(argv)
    if args.config is not None:
        parser.set_defaults(**load_config_file(args.config, parser))
        args, unknown = parser.parse_known_args(argv)
    return args, unknown


def check_args(args):
    """(field, message) pairs for option values no runner can work with."""
    violations = []
    for name in ("pump_points", "amplitude_points", "freq_points", "x_points"):
        value = getattr(args, name, None)
        if value is not None and value < 1:
            violations.append((name, f"grid must not be empty, got {value} points"))
    for start, stop in (("pump_start_ghz", "pump_stop_ghz"), ("freq_start_ghz", "freq_stop_ghz"),
                        ("amplitude_start", "amplitude_stop")):
        a, b = getattr(args, start), getattr(args, stop)
        if a is not None and b is not None and b < a:
            violations.append((stop, f"must not be below {start}"))
    if args.threads < 1:
        violations.append(("threads", "needs at least one thread"))
    if args.harmonics < 1:
        violations.append(("harmonics", "at least the fundamental is needed"))
    if args.sidebands < 0:
        violations.append(("sidebands", "must be non-negative"))
    if args.pump_amplitude < 0:
        violations.append(("pump_amplitude", "must be non-negative"))
    for j, port in enumerate(args.pump_ports):
        if not 0 <= port < 4:
            violations.append((f"pump_ports[{j}]", f"port index {port} outside 0..3"))
    if args.command == "reproduce-fig" and args.target not in FIGURES:
        violations.append(("target", f"reproduce-fig needs one of {FIGURES}, got {args.target!r}"))
    if args.command == "metrics" and args.target is None:
        violations.append(("target", "metrics needs the CSV file to analyse"))
    return violations
