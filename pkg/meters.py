import math
import time


class AverageMeter(object):
    """Running mean of a scalar, with the extremes seen so far"""
    def __init__(self):
        self.reset()

    def reset(self):
        self.val = 0.
        self.sum = 0.
        self.count = 0
        self.min = math.inf
        self.max = -math.inf

    def update(self, val, n=1):
        self.val = val
        self.sum += val * n
        self.count += n
        self.min = min(self.min, val)
        self.max = max(self.max, val)

    @property
    def avg(self):
        return self.sum / self.count if self.count else 0.


class TimeMeter(object):
    """Grid points solved per second since the last reset"""
    def __init__(self):
        self.reset()

    def reset(self):
        self.start = time.perf_counter()
        self.n = 0

    def update(self, val=1):
        self.n += val

    @property
    def elapsed_time(self):
        return time.perf_counter() - self.start

    @property
    def avg(self):
        return self.n / max(self.elapsed_time, 1e-12)


class StopwatchMeter(object):
    """Accumulated wall time of a repeated solver stage; usable as a context manager"""
    def __init__(self):
        self.reset()

    def reset(self):
        self.sum = 0.
        self.n = 0
        self.start_time = None

    def start(self):
        self.start_time = time.perf_counter()

    def stop(self, n=1):
        if self.start_time is not None:
            self.sum += time.perf_counter() - self.start_time
            self.n += n
            self.start_time = None

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()
        return False

    @property
    def avg(self):
        return self.sum / self.n if self.n else 0.


class ConvergenceMeter(object):
    """
    Residual history of a Newton solve.

    Residuals are relative (normalised by the drive), so a quadratically
    converging sequence satisfies r[k+1] <= c * r[k]**2 once r is small.
    """
    def __init__(self, tol=1e-10):
        self.tol = tol
        self.reset()

    def reset(self):
        self.history = []

    def update(self, residual):
        self.history.append(float(residual))

    @property
    def iterations(self):
        return max(len(self.history) - 1, 0)

    @property
    def last(self):
        return self.history[-1] if self.history else math.inf

    @property
    def converged(self):
        return self.last < self.tol

    def contraction(self):
        """Ratios r[k+1] / r[k]**2 over the recorded steps."""
        h = self.history
        return [h[k + 1] / h[k] ** 2 for k in range(len(h) - 1) if h[k] > 0]

    def is_quadratic(self, factor=1e3, floor=1e-12):
        # the last step either lands on the round-off floor or contracts quadratically
        if len(self.history) < 2:
            return self.converged
        prev, last = self.history[-2], self.history[-1]
        return last <= max(factor * prev ** 2, floor)
