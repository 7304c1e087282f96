"""
Exceptions raised by the simulator.

Every error the command line can report derives from SimulationError; the
exit code of a failed run is read from the class attribute ``exit_code``.
"""


class SimulationError(Exception):
    exit_code = 1

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self)}


class ConfigError(SimulationError, ValueError):
    """Invalid configuration. ``violations`` holds (field_path, message) pairs."""
    exit_code = 2

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [("", violations)]
        self.violations = list(violations)
        text = "; ".join(f"{path}: {msg}" if path else msg for path, msg in self.violations)
        super(ConfigError, self).__init__(text)

    def to_dict(self):
        ret = super(ConfigError, self).to_dict()
        ret["violations"] = [{"field": path, "message": msg} for path, msg in self.violations]
        return ret


class AboveCutoff(SimulationError, ValueError):
    def __init__(self, mode, omega, cutoff):
        self.mode, self.omega, self.cutoff = mode, omega, cutoff
        super(AboveCutoff, self).__init__(
            f"{mode} mode: f={omega / 6.283185307179586e9:.6g} GHz is above cutoff "
            f"{cutoff / 6.283185307179586e9:.6g} GHz")


class AmplitudeOutOfRange(SimulationError, ValueError):
    pass


class PumpAboveCutoff(SimulationError, ValueError):
    pass


class NoSolutionInBand(SimulationError, ValueError):
    pass


class WrongPropagationSigns(SimulationError, ValueError):
    pass


class SectionMismatch(SimulationError, ValueError):
    pass


class SingularNetwork(SimulationError, ValueError):
    pass


class DecompositionIllConditioned(SimulationError, ValueError):
    pass


class DriveAboveCeiling(SimulationError, ValueError):
    pass


class NonUniformGrid(SimulationError, ValueError):
    pass


class NoPeakAboveThreshold(SimulationError, ValueError):
    pass


class NonConvergence(SimulationError, RuntimeError):
    exit_code = 3

    def __init__(self, iterations, residual, message=None):
        self.iterations = iterations
        self.residual = residual
        if message is None:
            message = f"no convergence after {iterations} iterations, residual {residual:.3e}"
        super(NonConvergence, self).__init__(message)

    def to_dict(self):
        ret = super(NonConvergence, self).to_dict()
        ret["iterations"] = self.iterations
        ret["residual"] = self.residual
        return ret


class TruncationWarning(UserWarning):
    pass
