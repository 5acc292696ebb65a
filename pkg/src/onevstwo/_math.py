import math

import numpy as np

LOG2 = math.log(2.0)


def logcosh(z):
    """log(cosh(z)) without overflow for large |z|."""
    a = np.abs(z)
    return a + np.log1p(np.exp(-2.0 * a)) - LOG2


def log_abs(x: float) -> float:
    """log|x| with log(0) = -inf instead of an exception."""
    x = abs(x)
    return math.log(x) if x > 0 else -math.inf


def safe_exp(x: float) -> float:
    return 0.0 if x == -math.inf else math.exp(x)
