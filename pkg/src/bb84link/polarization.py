"""Linear-polarization algebra for the four BB84 states.

Detector ids follow the state order H=0, V=1, D=2, A=3, so a state's
integer value doubles as the id of the detector that should fire for it.
"""
from __future__ import annotations

import enum
import math

from .errors import DomainError


class Basis(enum.IntEnum):
    HV = 0
    DA = 1


class Bb84State(enum.IntEnum):
    H = 0
    V = 1
    D = 2
    A = 3

    @property
    def basis(self) -> Basis:
        return Basis(self.value >> 1)

    @property
    def bit(self) -> int:
        return self.value & 1

    @property
    def angle(self) -> float:
        return STATE_ANGLES[self]


STATE_ANGLES = {
    Bb84State.H: 0.0,
    Bb84State.V: math.pi / 2,
    Bb84State.D: math.pi / 4,
    Bb84State.A: 3 * math.pi / 4,
}


def reduce_angle(theta: float) -> float:
    """Map a linear-polarization angle onto [0, pi)."""
    return math.fmod(math.fmod(theta, math.pi) + math.pi, math.pi)


def state_of(basis: Basis | int, bit: int) -> Bb84State:
    if bit not in (0, 1):
        raise DomainError(f"bit must be 0 or 1, got {bit!r}")
    return Bb84State(2 * int(Basis(basis)) + bit)


def decode(state: Bb84State | int) -> tuple[Basis, int]:
    state = Bb84State(state)
    return state.basis, state.bit


def analyzer_angles(basis: Basis | int) -> tuple[float, float]:
    """Analyzer angles of the bit-0 and bit-1 detectors of ``basis``."""
    b = Basis(basis)
    return STATE_ANGLES[state_of(b, 0)], STATE_ANGLES[state_of(b, 1)]


def projection_probability(state_angle: float, analyzer_angle: float) -> float:
    """Malus-law transmission of a linear state through a linear analyzer."""
    if not (math.isfinite(state_angle) and math.isfinite(analyzer_angle)):
        raise DomainError("polarization angles must be finite")
    return math.cos(state_angle - analyzer_angle) ** 2


def effective_error_probability(e_opt: float) -> float:
    """Wrong-detector probability within the matched basis.

    Encoder extinction, combiner crosstalk and residual channel rotation
    are lumped into the single scalar ``e_opt``, applied equally to all
    four states.
    """
    if not 0.0 <= e_opt <= 0.5:
        raise DomainError(f"e_opt must lie in [0, 0.5], got {e_opt}")
    return float(e_opt)


def detector_probabilities(
    state: Bb84State | int,
    basis: Basis | int,
    e_opt: float = 0.0,
    misalignment: float = 0.0,
) -> tuple[float, float]:
    """Probabilities that a photon in ``state`` lands on the bit-0/bit-1
    detector of the analyzer for ``basis``.

    The ideal Malus-law split is followed by a symmetric flip with
    probability ``e_opt``.
    """
    e = effective_error_probability(e_opt)
    theta = Bb84State(state).angle + misalignment
    p0 = projection_probability(theta, analyzer_angles(basis)[0])
    p0 = p0 * (1 - e) + (1 - p0) * e
    return p0, 1.0 - p0
