"""Closed-form expected sifted rate and QBER of the link.

Serves both as the oracle for the Monte Carlo simulator and as the fast
model behind calibration and threshold searches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ArgumentError, DomainError, NoThresholdError
from .params import LinkParams, detectors_of
from .polarization import Basis

SEARCH_CAP_DB = 60.0


def saturate(incident_rate: float, dead_time: float) -> float:
    """Detected rate of a non-paralyzable detector with ``dead_time`` [s]."""
    if incident_rate < 0 or dead_time < 0:
        raise DomainError("rate and dead time must be non-negative")
    if math.isinf(incident_rate):
        return 1.0 / dead_time if dead_time > 0 else math.inf
    return incident_rate / (1.0 + incident_rate * dead_time)


def window_signal_acceptance(params: LinkParams) -> float:
    """Probability that a jittered signal click lands inside the temporal window."""
    if params.jitter_sigma == 0:
        return 1.0
    half_window = params.window_fraction * params.symbol_period / 2
    return math.erf(half_window / (params.jitter_sigma * math.sqrt(2)))


def matched_error_probability(params: LinkParams) -> float:
    """Wrong-detector probability for a signal photon in the matched basis:
    the Malus leak of a rotated state, then the symmetric ``e_opt`` flip."""
    e = params.e_opt
    leak = math.sin(params.misalignment) ** 2
    return e + (1.0 - 2.0 * e) * leak


@dataclass(frozen=True)
class AnalyticRates:
    r_sifted: float
    r_dark_sifted: float
    qber: float
    qber_per_basis: dict[Basis, float] = field(default_factory=dict)
    r_sifted_per_basis: dict[Basis, float] = field(default_factory=dict)


@dataclass(frozen=True)
class _RunTerms:
    signal: dict[Basis, float]
    dark: dict[Basis, float]
    gain: float


def _run_terms(params: LinkParams, bases: tuple[Basis, ...]) -> _RunTerms:
    f = params.symbol_rate
    mean_photons = params.mu_eff * params.eta_bob
    p_click = -math.expm1(-mean_photons)
    accept = window_signal_acceptance(params)
    signal, dark = {}, {}
    incident = []
    for b in bases:
        signal[b] = f * p_click * 0.5 * accept / len(bases)
        dets = detectors_of(b)
        dark[b] = sum(params.dark_rates[d] for d in dets) * params.window_fraction * 0.5
        per_det_photons = mean_photons / (2 * len(bases))
        incident += [f * -math.expm1(-per_det_photons) + params.dark_rates[d] for d in dets]
    r_inc = sum(incident) / len(incident)
    gain = saturate(r_inc, params.dead_time) / r_inc if r_inc > 0 else 1.0
    return _RunTerms(signal, dark, gain)


def analytic_rates(params: LinkParams) -> AnalyticRates:
    e = matched_error_probability(params)
    runs = params.runs()
    total_rate = total_dark = total_err = 0.0
    qb, rb = {}, {}
    for bases in runs:
        t = _run_terms(params, bases)
        for b in bases:
            sifted = t.gain * (t.signal[b] + t.dark[b])
            errors = t.gain * (e * t.signal[b] + 0.5 * t.dark[b])
            total_rate += sifted
            total_err += errors
            total_dark += t.gain * t.dark[b]
            rb[b] = sifted
            qb[b] = errors / sifted if sifted > 0 else e
    qber = total_err / total_rate if total_rate > 0 else e
    n = len(runs)
    return AnalyticRates(total_rate / n, total_dark / n, qber, qb, rb)


def analytic_qber(params: LinkParams, ob_db: float | None = None) -> float:
    if ob_db is not None:
        params = params.replace(ob_db=ob_db)
    return analytic_rates(params).qber


def threshold_budget(params: LinkParams, q_max: float, tol_db: float = 1e-4,
                     cap_db: float = SEARCH_CAP_DB) -> float:
    """Optical budget [dB] at which the analytic QBER reaches ``q_max``."""
    if not 0.0 <= q_max < 0.5:
        raise ArgumentError("q_max must lie in [0, 0.5)")
    q0 = analytic_qber(params, 0.0)
    if math.isclose(q0, q_max, rel_tol=0, abs_tol=1e-12):
        return 0.0
    if q0 > q_max:
        raise ArgumentError(f"QBER at 0 dB ({q0:.4g}) already exceeds q_max={q_max}")
    if analytic_qber(params, cap_db) < q_max:
        raise NoThresholdError(f"QBER stays below {q_max} up to {cap_db} dB")
    lo, hi = 0.0, cap_db
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if analytic_qber(params, mid) < q_max:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
