"""Fit link parameters to measured operating points.

The threshold calibration has a closed-form solution when dead-time
saturation and the curvature of 1 - exp(-x) are ignored; that solution
is used as the starting point of a root solve on the full analytic model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .analytic import analytic_rates, window_signal_acceptance
from .errors import Bb84LinkError, InfeasibleCalibrationError
from .params import LinkParams
from .polarization import Basis


@dataclass(frozen=True)
class CalibrationTargets:
    r0: float = 7600.0
    q0: float = 0.042
    ob_threshold: float = 15.2
    q_max: float = 0.11


@dataclass(frozen=True)
class CalibrationResult:
    eta_bob: float
    e_opt: float
    dark_eff: float
    residuals: dict[str, float]
    params: LinkParams = field(repr=False)


def closed_form_threshold_fit(targets: CalibrationTargets) -> tuple[float, float, float]:
    """Solve for (sifted signal rate S0, sifted dark rate D, e_opt) in the
    linear model: S0 + D = r0, QBER(0) = q0, QBER(ob_threshold) = q_max."""
    r0, q0, q_max = targets.r0, targets.q0, targets.q_max
    x = 10.0 ** (-targets.ob_threshold / 10.0)
    if r0 <= 0:
        raise InfeasibleCalibrationError("target rate must be positive")
    if not 0.0 <= q0 < q_max < 0.5:
        raise InfeasibleCalibrationError(f"need 0 <= q0 < q_max < 0.5, got q0={q0}, q_max={q_max}")
    if not 0.0 < x < 1.0:
        raise InfeasibleCalibrationError("threshold budget must be a positive, finite loss")
    dark = x * r0 * (q_max - q0) / ((1.0 - x) * (0.5 - q_max))
    signal = r0 - dark
    if signal <= 0:
        raise InfeasibleCalibrationError("fitted dark rate exceeds the total sifted rate")
    e_opt = (q0 * r0 - 0.5 * dark) / signal
    if not 0.0 <= e_opt <= 0.5:
        raise InfeasibleCalibrationError(f"fitted e_opt={e_opt:.4g} outside [0, 0.5]")
    return signal, dark, e_opt


def nominal_sifted_dark(params: LinkParams) -> float:
    """Unsaturated sifted dark rate implied by ``params.dark_rates``."""
    return analytic_rates(params.replace(dead_time=0.0)).r_dark_sifted


def _dark_pattern(params: LinkParams) -> tuple[float, ...]:
    if any(r > 0 for r in params.dark_rates):
        return params.dark_rates
    return (1.0, 1.0, 1.0, 1.0)


def _eta_for_signal(params: LinkParams, signal: float, bases_per_run: int = 1) -> float:
    per_pulse = signal * bases_per_run / (params.symbol_rate * 0.5 * window_signal_acceptance(params))
    if not 0.0 < per_pulse < 1.0:
        raise InfeasibleCalibrationError("target rate is not reachable at this symbol rate")
    return -math.log1p(-per_pulse) / params.mu_eff


def _solve(residual_fn, x0, what):
    try:
        sol = optimize.root(residual_fn, x0, method="hybr", options={"xtol": 1e-14})
    except Bb84LinkError as exc:
        raise InfeasibleCalibrationError(f"{what}: solver left the physical domain ({exc})") from exc
    # hybr reports xtol stalls at machine precision as failures; judge by residual
    if not np.all(np.isfinite(sol.fun)) or np.max(np.abs(sol.fun)) > 1e-9:
        raise InfeasibleCalibrationError(f"{what}: solver did not converge ({sol.message})")
    return sol.x


def calibrate(targets: CalibrationTargets, fixed: LinkParams) -> CalibrationResult:
    """Fit (e_opt, effective dark rate, eta_bob) so that the analytic model
    gives rate r0 and QBER q0 at 0 dB and QBER q_max at ob_threshold.

    The relative pattern of ``fixed.dark_rates`` is preserved; only its
    overall scale is fitted.
    """
    signal, dark, e_opt = closed_form_threshold_fit(targets)
    base = fixed.replace(ob_db=0.0, dark_rates=_dark_pattern(fixed))
    d_unit = nominal_sifted_dark(base)
    eta0 = _eta_for_signal(base, signal)

    def build(e, scale, eta):
        return base.replace(e_opt=e, eta_bob=eta, dark_rates=tuple(r * scale for r in base.dark_rates))

    def residuals(v):
        p = build(*v)
        at0 = analytic_rates(p)
        at_t = analytic_rates(p.replace(ob_db=targets.ob_threshold))
        return [at0.qber - targets.q0, at_t.qber - targets.q_max, at0.r_sifted / targets.r0 - 1.0]

    e, scale, eta = _solve(residuals, [e_opt, dark / d_unit, eta0], "threshold calibration")
    try:
        params = build(e, scale, eta).replace(ob_db=fixed.ob_db)
    except Bb84LinkError as exc:
        raise InfeasibleCalibrationError(f"fitted parameters are unphysical: {exc}") from exc
    if scale < 0:
        raise InfeasibleCalibrationError("fitted dark rate is negative")
    res = residuals([e, scale, eta])
    return CalibrationResult(
        eta_bob=float(eta), e_opt=float(e), dark_eff=analytic_rates(params.replace(ob_db=0.0)).r_dark_sifted,
        residuals={"q0": res[0] / targets.q0 if targets.q0 else res[0],
                   "q_max": res[1] / targets.q_max, "r0": res[2]},
        params=params,
    )


def calibrate_operating_point(rate: float, qber: float, fixed: LinkParams,
                              basis: Basis | None = None) -> CalibrationResult:
    """Fit (e_opt, eta_bob) to one (sifted rate, QBER) pair at ``fixed.ob_db``,
    keeping the dark rates of ``fixed``.

    With ``basis`` set, the targets refer to that basis alone, as measured in
    a single consecutive-mode run.
    """
    def observe(p):
        a = analytic_rates(p)
        if basis is None:
            return a.r_sifted, a.qber
        return a.r_sifted_per_basis[Basis(basis)], a.qber_per_basis[Basis(basis)]

    if rate <= 0 or not 0.0 <= qber < 0.5:
        raise InfeasibleCalibrationError("need a positive rate and 0 <= qber < 0.5")
    dark_only = fixed.replace(dead_time=0.0, mu_q=1e-300)
    if basis is None:
        dark = analytic_rates(dark_only).r_dark_sifted
    else:
        dark = analytic_rates(dark_only).r_sifted_per_basis[Basis(basis)]
    signal = rate - dark
    if signal <= 0:
        raise InfeasibleCalibrationError(f"dark floor {dark:.4g} cts/s exceeds target rate {rate:.4g}")
    e0 = (qber * rate - 0.5 * dark) / signal
    if not 0.0 <= e0 <= 0.5:
        raise InfeasibleCalibrationError(f"target QBER {qber} is below the dark-count floor")
    bases_per_run = len(fixed.runs()[0])
    eta0 = _eta_for_signal(fixed, signal, bases_per_run)

    def residuals(v):
        r, q = observe(fixed.replace(e_opt=v[0], eta_bob=v[1]))
        return [q - qber, r / rate - 1.0]

    e, eta = _solve(residuals, [e0, eta0], "operating-point calibration")
    try:
        params = fixed.replace(e_opt=e, eta_bob=eta)
    except Bb84LinkError as exc:
        raise InfeasibleCalibrationError(f"fitted parameters are unphysical: {exc}") from exc
    res = residuals([e, eta])
    return CalibrationResult(float(eta), float(e), analytic_rates(params).r_dark_sifted,
                             {"qber": res[0] / qber if qber else res[0], "rate": res[1]}, params)
