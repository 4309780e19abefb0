"""Monte Carlo simulation of the Alice -> channel -> Bob chain.

Per pulse the photon number is Poisson(mu_eff) and each photon survives to
Bob with probability eta_bob, so the surviving number is Poisson(mu_eff *
eta_bob).  Only pulses with at least one surviving photon can produce a
click; those are drawn directly (binomial count, uniform positions,
zero-truncated Poisson photon number), which is distributionally identical
to visiting every pulse and keeps hour-long runs at GHz rates tractable.

The pulse stream is cut into fixed-size chunks.  Chunk ``c`` of run ``r``
draws from its own generator seeded by ``(rng_seed, r, c)``, so the output
does not depend on how chunks are spread over workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import stats

from .errors import ArgumentError
from .params import LinkParams, detectors_of
from .polarization import Basis, Bb84State, detector_probabilities
from .prbs import Symbols
from .timetags import EventStream

CHUNK_PULSES = 1 << 28
PS = 1e12


def _bit0_table(params: LinkParams) -> np.ndarray:
    """P(bit-0 detector) indexed by [state, analyzer basis]."""
    table = np.empty((4, 2))
    for s in Bb84State:
        for b in Basis:
            table[s, b] = detector_probabilities(s, b, params.e_opt, params.misalignment)[0]
    return table


def _truncated_poisson(rng: np.random.Generator, lam: float, size: int) -> np.ndarray:
    """Poisson(lam) draws conditioned on being >= 1, by inverse CDF."""
    if size == 0:
        return np.empty(0, np.int64)
    kmax = int(lam + 12 * math.sqrt(lam) + 12)
    cdf = stats.poisson.cdf(np.arange(kmax + 1), lam)
    p_zero = cdf[0]
    u = p_zero + rng.random(size) * (1.0 - p_zero)
    return np.maximum(np.searchsorted(cdf, u, side="left"), 1).astype(np.int64)


def _simulate_chunk(params: LinkParams, symbols: Symbols, bases: tuple[Basis, ...],
                    run: int, chunk: int, table: np.ndarray):
    start = chunk * CHUNK_PULSES
    n = min(CHUNK_PULSES, params.pulse_count - start)
    rng = np.random.default_rng(np.random.SeedSequence([params.rng_seed, run, chunk]))
    period_ps = PS / params.symbol_rate

    lam = params.mu_eff * params.eta_bob
    p_click = -np.expm1(-lam)
    n_click = rng.binomial(n, p_click) if p_click > 0 else 0
    pulses = np.sort(rng.choice(n, size=n_click, replace=False)).astype(np.int64) + start
    photons = _truncated_poisson(rng, lam, n_click)
    photon_pulse = np.repeat(pulses, photons)
    a_basis, a_bit = symbols.at(photon_pulse)
    states = 2 * a_basis.astype(np.int64) + a_bit
    if len(bases) == 1:
        b_basis = np.full(len(photon_pulse), int(bases[0]), dtype=np.int64)
    else:
        b_basis = rng.integers(0, 2, size=len(photon_pulse))
    bit1 = rng.random(len(photon_pulse)) >= table[states, b_basis]
    sig_det = 2 * b_basis + bit1
    jitter_ps = params.jitter_sigma * PS
    jitter = rng.normal(0.0, jitter_ps, len(photon_pulse)) if jitter_ps > 0 else 0.0
    sig_ts = np.rint(photon_pulse * period_ps + jitter).astype(np.int64)

    t0 = int(round(start * period_ps))
    t1 = int(round((start + n) * period_ps))
    dark_det, dark_ts = [], []
    for b in bases:
        for d in detectors_of(b):
            m = rng.poisson(params.dark_rates[d] * n / params.symbol_rate)
            dark_ts.append(rng.integers(t0, t1, size=m))
            dark_det.append(np.full(m, d, dtype=np.int64))
    det = np.concatenate([sig_det, *dark_det])
    ts = np.concatenate([sig_ts, *dark_ts])
    return det, ts


def _dead_time_keep(ts: np.ndarray, dead_ps: int) -> np.ndarray:
    """Boolean mask of events kept by a non-paralyzable detector; ``ts`` sorted.

    An event further than ``dead_ps`` from its predecessor is always kept,
    so only events inside such gaps need the sequential pass.
    """
    keep = np.ones(len(ts), dtype=bool)
    if dead_ps <= 0 or len(ts) < 2:
        return keep
    conflict = np.flatnonzero(np.diff(ts) < dead_ps) + 1
    tl = ts.tolist()
    last = 0
    prev = -2
    for i in conflict.tolist():
        if i - 1 != prev:
            last = tl[i - 1]
        if tl[i] - last >= dead_ps:
            last = tl[i]
        else:
            keep[i] = False
        prev = i
    return keep


def apply_dead_time(events: EventStream, dead_time: float) -> EventStream:
    """Blind each detector for ``dead_time`` seconds after every recorded click."""
    dead_ps = int(round(dead_time * PS))
    det, ts = events.detector_id, events.timestamp_ps
    keep = np.zeros(len(ts), dtype=bool)
    for d in np.unique(det):
        idx = np.flatnonzero(det == d)
        idx = idx[np.argsort(ts[idx], kind="stable")]
        keep[idx] = _dead_time_keep(ts[idx], dead_ps)
    return EventStream(det[keep], ts[keep])


def simulate_pulses(params: LinkParams, symbols: Symbols, run: int = 0,
                    workers: int = 1) -> EventStream:
    """Detection events of measurement run ``run`` (see ``LinkParams.runs``).

    ``symbols`` is repeated cyclically when shorter than ``pulse_count``.
    Events with a negative timestamp (jitter before the first pulse) are
    dropped.
    """
    if len(symbols) == 0:
        raise ArgumentError("symbol sequence is empty")
    runs = params.runs()
    if not 0 <= run < len(runs):
        raise ArgumentError(f"run index {run} out of range for {params.measurement_mode} mode")
    bases = runs[run]
    table = _bit0_table(params)
    n_chunks = -(-params.pulse_count // CHUNK_PULSES)

    def work(c):
        return _simulate_chunk(params, symbols, bases, run, c, table)

    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(n_chunks)))
    else:
        parts = [work(c) for c in range(n_chunks)]
    det = np.concatenate([p[0] for p in parts]) if parts else np.empty(0, np.int64)
    ts = np.concatenate([p[1] for p in parts]) if parts else np.empty(0, np.int64)
    ok = ts >= 0
    det, ts = det[ok], ts[ok]
    order = np.lexsort((det, ts))
    events = EventStream(det[order], ts[order])
    return apply_dead_time(events, params.dead_time)


def simulate_link(params: LinkParams, symbols: Symbols, workers: int = 1) -> list[EventStream]:
    """One event stream per measurement run."""
    return [simulate_pulses(params, symbols, r, workers) for r in range(len(params.runs()))]
