"""Small enums and conditioning records used across modules."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

from .errors import DomainError


class Scheme(str, enum.Enum):
    QUANTUM_LIMIT = "quantum"
    BSPADE = "bspade"
    SLIVER = "sliver"
    DIRECT_IMAGING = "direct"


class Hypothesis(enum.IntEnum):
    H1 = 1
    H2 = 2


@dataclass(frozen=True)
class ConditionalOnL:
    """Errors conditioned on exactly ``L`` detected photons."""

    L: int

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 0:
            raise DomainError(f"L must be a nonnegative integer, got {self.L!r}")


@dataclass(frozen=True)
class UnconditionalOnM:
    """Errors averaged over the photon count in ``M`` temporal modes."""

    M: int
    epsilon: float

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise DomainError(f"M must be a positive integer, got {self.M!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")


Conditioning = Union[ConditionalOnL, UnconditionalOnM]


def check_priors(p1: float, p2: float) -> None:
    if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0):
        raise DomainError(f"priors must lie in [0, 1], got p1={p1!r}, p2={p2!r}")
    if abs(p1 + p2 - 1.0) > 1e-12:
        raise DomainError(f"priors must sum to 1, got p1 + p2 = {p1 + p2!r}")
