"""Receiver-side classical processing: temporal filtering, frame
synchronization, basis sifting, QBER and secret-fraction estimation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DomainError, SyncFailureError, UndefinedQberError
from .polarization import Basis
from .prbs import SYMBOL_PERIOD, Symbols, prbs_symbols
from .timetags import DetectionEvent, EventStream

LOCK_THRESHOLD = 0.75
DEFAULT_BLOCK_SIZE = 5.0


@dataclass(frozen=True, eq=False)
class SlottedEvents:
    """Events that survived the temporal filter, tagged with their symbol slot."""

    symbol_index: np.ndarray
    detector_id: np.ndarray
    timestamp_ps: np.ndarray

    def __len__(self):
        return len(self.symbol_index)

    def __iter__(self):
        for i, d, t in zip(self.symbol_index.tolist(), self.detector_id.tolist(), self.timestamp_ps.tolist()):
            yield i, DetectionEvent(d, t)


@dataclass(frozen=True, eq=False)
class Measurements:
    """Bob's per-symbol outcomes: analyzer basis and bit, one per slot."""

    symbol_index: np.ndarray
    basis: np.ndarray
    bit: np.ndarray

    def __post_init__(self):
        for name in ("symbol_index", "basis", "bit"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        if not len(self.symbol_index) == len(self.basis) == len(self.bit):
            raise ArgumentError("measurement arrays must have equal length")

    def __len__(self):
        return len(self.symbol_index)

    def __iter__(self):
        return zip(self.symbol_index.tolist(), self.basis.tolist(), self.bit.tolist())

    @classmethod
    def from_tuples(cls, rows) -> "Measurements":
        rows = list(rows)
        if not rows:
            return cls(np.empty(0), np.empty(0), np.empty(0))
        idx, basis, bit = zip(*rows)
        return cls(np.array(idx), np.array([int(b) for b in basis]), np.array(bit))


@dataclass(frozen=True, eq=False)
class SiftedKey:
    bits: np.ndarray
    symbol_indices: np.ndarray
    basis: np.ndarray

    def __len__(self):
        return len(self.bits)

    def as_measurements(self) -> Measurements:
        return Measurements(self.symbol_indices, self.basis, self.bits)


@dataclass(frozen=True)
class FrameSyncResult:
    offset: int
    agreement: float


@dataclass(frozen=True)
class QberReport:
    qber_total: float
    qber_per_basis: dict[Basis, float]
    raw_rate: float
    n_sifted: int
    block_mean: float
    block_3sigma: float
    n_errors: int = 0
    n_per_basis: dict[Basis, int] = field(default_factory=dict)
    block_qbers: tuple[float, ...] = ()


def temporal_filter(events: EventStream, symbol_period: float, window_fraction: float) -> SlottedEvents:
    """Assign each event to its nearest symbol slot and keep it only inside
    the acceptance window around the slot center.

    ``symbol_period`` is in picoseconds.  At most one event per (slot,
    detector) is kept, the earliest.
    """
    if symbol_period <= 0:
        raise DomainError("symbol period must be positive")
    if not 0 < window_fraction <= 1:
        raise DomainError("window_fraction must lie in (0, 1]")
    ts = events.timestamp_ps
    slot = np.rint(ts / symbol_period).astype(np.int64)
    inside = np.abs(ts - slot * symbol_period) <= window_fraction * symbol_period / 2
    order = np.flatnonzero(inside)
    order = order[np.argsort(ts[order], kind="stable")]
    key = slot[order] * 4 + events.detector_id[order]
    _, first = np.unique(key, return_index=True)
    keep = np.sort(order[first])
    keep = keep[np.lexsort((events.detector_id[keep], ts[keep]))]
    return SlottedEvents(slot[keep], events.detector_id[keep], ts[keep])


def resolve_clicks(slotted: SlottedEvents) -> Measurements:
    """One outcome per slot: earliest click wins, lower detector id on ties."""
    order = np.lexsort((slotted.detector_id, slotted.timestamp_ps, slotted.symbol_index))
    idx = slotted.symbol_index[order]
    first = np.ones(len(idx), dtype=bool)
    first[1:] = idx[1:] != idx[:-1]
    det = slotted.detector_id[order][first]
    return Measurements(idx[first], det >> 1, det & 1)


def _circular_xcorr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """c[k] = sum_j a[j] * b[(j + k) % L], rounded to integers."""
    n = len(a)
    c = np.fft.irfft(np.conj(np.fft.rfft(a)) * np.fft.rfft(b), n)
    return np.rint(c).astype(np.int64)


def sync_agreements(measured: Measurements, reference: Symbols) -> tuple[np.ndarray, np.ndarray]:
    """Basis-match counts and bit-agreement counts at every cyclic offset."""
    L = len(reference)
    pos = measured.symbol_index % L
    state = 2 * measured.basis + measured.bit
    ref_state = reference.states.astype(np.int64)
    matched = np.zeros(L, dtype=np.int64)
    agree = np.zeros(L, dtype=np.int64)
    for b in (0, 1):
        counts = [np.bincount(pos[state == 2 * b + v], minlength=L).astype(float) for v in (0, 1)]
        ref_b = [(ref_state == 2 * b + v).astype(float) for v in (0, 1)]
        matched += _circular_xcorr(counts[0] + counts[1], ref_b[0] + ref_b[1])
        agree += _circular_xcorr(counts[0], ref_b[0]) + _circular_xcorr(counts[1], ref_b[1])
    return matched, agree


def frame_sync(measured: Measurements, reference_seed: int | Symbols = 1,
               frame_len: int = SYMBOL_PERIOD, threshold: float = LOCK_THRESHOLD) -> FrameSyncResult:
    """Find the cyclic offset that aligns Bob's slots with the reference PRBS.

    Bob's slot ``i`` corresponds to reference symbol ``(i + offset) % frame_len``.
    """
    if isinstance(reference_seed, Symbols):
        reference = reference_seed
        if len(reference) != frame_len:
            reference = Symbols(*reference.at(np.arange(frame_len)))
    else:
        reference = prbs_symbols(reference_seed, frame_len)
    if len(measured) == 0:
        raise SyncFailureError("no measured symbols to synchronize")
    matched, agree = sync_agreements(measured, reference)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(matched > 0, agree / np.maximum(matched, 1), 0.0)
    offset = int(np.argmax(ratio))
    best = float(ratio[offset])
    if best < threshold:
        raise SyncFailureError(
            f"best agreement {best:.4f} at offset {offset} below lock threshold {threshold}",
            offset=offset, agreement=best,
        )
    return FrameSyncResult(offset, best)


def sift(alice: Symbols, bob: Measurements) -> SiftedKey:
    """Keep Bob's outcomes whose analyzer basis equals Alice's preparation basis."""
    a_basis, _ = alice.at(bob.symbol_index)
    keep = a_basis == bob.basis
    return SiftedKey(bob.bit[keep], bob.symbol_index[keep], bob.basis[keep])


def qber(key: SiftedKey, alice: Symbols, duration: float, block_size: float = DEFAULT_BLOCK_SIZE,
         symbol_rate: float = 1e9) -> QberReport:
    """Error statistics of a sifted key against Alice's known symbols.

    Blocks are consecutive ``block_size``-second slices of the run; only
    complete blocks enter the block statistics.
    """
    if duration <= 0:
        raise DomainError("duration must be positive")
    n = len(key)
    if n == 0:
        raise UndefinedQberError("no sifted bits; QBER is undefined")
    _, a_bit = alice.at(key.symbol_indices)
    err = a_bit != key.bits
    n_err = int(err.sum())
    per_basis, n_basis = {}, {}
    for b in Basis:
        sel = key.basis == b
        n_basis[b] = int(sel.sum())
        if n_basis[b]:
            per_basis[b] = float(err[sel].mean())

    block_qbers: list[float] = []
    n_blocks = int(math.floor(duration / block_size + 1e-9)) if block_size > 0 else 0
    if n_blocks >= 1:
        t = key.symbol_indices / symbol_rate
        blk = np.floor(t / block_size).astype(np.int64)
        ok = blk < n_blocks
        tot = np.bincount(blk[ok], minlength=n_blocks)
        bad = np.bincount(blk[ok], weights=err[ok], minlength=n_blocks)
        block_qbers = [float(b / c) for b, c in zip(bad, tot) if c > 0]
    if len(block_qbers) >= 2:
        block_mean = float(np.mean(block_qbers))
        block_3sigma = 3.0 * float(np.std(block_qbers, ddof=1))
    elif block_qbers:
        block_mean, block_3sigma = block_qbers[0], math.nan
    else:
        block_mean, block_3sigma = n_err / n, math.nan
    return QberReport(n_err / n, per_basis, n / duration, n, block_mean, block_3sigma,
                      n_err, n_basis, tuple(block_qbers))


def binary_entropy(q: float) -> float:
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def secret_fraction(q: float) -> float:
    """Asymptotic one-way BB84 secret fraction, clamped at zero."""
    if not 0.0 <= q <= 1.0:
        raise DomainError("QBER must lie in [0, 1]")
    return max(0.0, 1.0 - 2.0 * binary_entropy(q))


@dataclass(frozen=True)
class ProcessedRun:
    key: SiftedKey
    sync: FrameSyncResult | None
    alice: Symbols
    n_detections: int
    n_filtered: int


def process_events(events: EventStream, reference: Symbols, symbol_rate: float, window_fraction: float,
                   synchronize: bool = True) -> ProcessedRun:
    """Filter, resolve double clicks, frame-sync and sift one measurement run.

    ``reference`` is one frame of the pre-agreed PRBS.  Without
    synchronization Bob's slot ``i`` is taken to carry reference symbol ``i``.
    """
    slotted = temporal_filter(events, 1e12 / symbol_rate, window_fraction)
    measured = resolve_clicks(slotted)
    sync = None
    alice = reference
    if synchronize:
        sync = frame_sync(measured, reference, len(reference))
        alice = reference.rolled(sync.offset)
    key = sift(alice, measured)
    return ProcessedRun(key, sync, alice, len(events), len(slotted))
