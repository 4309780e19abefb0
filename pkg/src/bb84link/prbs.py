"""PRBS-15 generator (x^15 + x^14 + 1) and BB84 symbol streams drawn from it."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ArgumentError, SeedError
from .polarization import Basis, Bb84State

PRBS_ORDER = 15
PRBS_PERIOD = 2**PRBS_ORDER - 1
# the bit period is odd, so pairing bits into symbols also repeats every PRBS_PERIOD symbols
SYMBOL_PERIOD = PRBS_PERIOD


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed == 0:
        raise SeedError("PRBS seed 0 is the LFSR lock-up state")
    if not 0 < seed <= PRBS_PERIOD:
        raise SeedError(f"PRBS-15 seed must be in [1, {PRBS_PERIOD}], got {seed}")
    return seed


@lru_cache(maxsize=32)
def _period_bits(seed: int) -> np.ndarray:
    state = seed
    out = np.empty(PRBS_PERIOD, dtype=np.uint8)
    for i in range(PRBS_PERIOD):
        bit = ((state >> 14) ^ (state >> 13)) & 1
        state = ((state << 1) | bit) & PRBS_PERIOD
        out[i] = bit
    out.setflags(write=False)
    return out


def prbs_bits(seed: int, n: int) -> np.ndarray:
    """First ``n`` output bits of the Fibonacci LFSR started in state ``seed``."""
    seed = _check_seed(seed)
    if n < 0:
        raise ArgumentError("bit count must be non-negative")
    period = _period_bits(seed)
    reps = -(-n // PRBS_PERIOD)
    return np.tile(period, reps)[:n]


@dataclass(frozen=True)
class Bb84Symbol:
    basis: Basis
    bit: int

    @property
    def state(self) -> Bb84State:
        return Bb84State(2 * int(self.basis) + self.bit)


@dataclass(frozen=True, eq=False)
class Symbols:
    """A run of symbols stored column-wise; indexed cyclically when a
    simulation is longer than the stored sequence."""

    basis: np.ndarray
    bit: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=np.uint8)
        bit = np.asarray(self.bit, dtype=np.uint8)
        if basis.shape != bit.shape or basis.ndim != 1:
            raise ArgumentError("basis and bit arrays must be 1-D and equal length")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "bit", bit)

    def __len__(self) -> int:
        return len(self.basis)

    def __getitem__(self, i: int) -> Bb84Symbol:
        return Bb84Symbol(Basis(int(self.basis[i])), int(self.bit[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def __eq__(self, other):
        if not isinstance(other, Symbols):
            return NotImplemented
        return np.array_equal(self.basis, other.basis) and np.array_equal(self.bit, other.bit)

    @property
    def states(self) -> np.ndarray:
        return (2 * self.basis + self.bit).astype(np.uint8)

    def at(self, index: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Basis and bit of absolute symbol indices, wrapping cyclically."""
        idx = np.asarray(index, dtype=np.int64) % len(self)
        return self.basis[idx], self.bit[idx]

    def rolled(self, offset: int) -> "Symbols":
        """Sequence whose element ``i`` is this sequence's element ``i + offset``."""
        return Symbols(np.roll(self.basis, -offset), np.roll(self.bit, -offset))

    @classmethod
    def from_symbols(cls, symbols) -> "Symbols":
        symbols = list(symbols)
        return cls(np.array([int(s.basis) for s in symbols]), np.array([s.bit for s in symbols]))


def prbs_symbols(seed: int, n: int) -> Symbols:
    """``n`` BB84 symbols; the first bit of each pair picks the basis, the
    second the bit value."""
    if n < 1:
        raise ArgumentError("symbol count must be >= 1")
    bits = prbs_bits(seed, 2 * n)
    return Symbols(bits[0::2], bits[1::2])


def prbs_frame(seed: int) -> Symbols:
    """One full symbol period of the sequence."""
    return prbs_symbols(seed, SYMBOL_PERIOD)
