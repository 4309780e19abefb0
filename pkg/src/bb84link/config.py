"""Flat ``key = value`` configuration files.

Keys are namespaced (``link.mu_q``, ``sweep.ob_min``, ``emitter.preset``);
``#`` starts a comment.  Unknown keys are rejected so that typos fail loudly.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

from .calibration import CalibrationResult, CalibrationTargets, calibrate, calibrate_operating_point
from .errors import Bb84LinkError, ConfigError, OutputError
from .experiments import RunConfig, SweepGrid
from .params import LinkParams
from .polarization import Basis
from .sources import emitter_preset


def _float(v):
    return float(v)


def _int(v):
    f = float(v)
    if not f.is_integer():
        raise ValueError(f"{v!r} is not an integer")
    return int(f)


def _bool(v):
    low = v.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{v!r} is not a boolean")


def _floats(v):
    return tuple(float(x) for x in v.replace(";", ",").split(",") if x.strip())


def _mode(v):
    if v not in ("consecutive", "simultaneous"):
        raise ValueError(f"{v!r} is not a measurement mode")
    return v


LINK_KEYS = {
    "symbol_rate": _float, "mu_q": _float, "ob_db": _float, "e_opt": _float, "eta_bob": _float,
    "dark_rates": _floats, "dead_time": _float, "jitter_sigma": _float, "window_fraction": _float,
    "measurement_mode": _mode, "pulse_count": _int, "rng_seed": _int, "prbs_seed": _int,
    "misalignment_deg": _float,
}
BASIS_KEYS = {"e_opt": _float, "eta_bob": _float}

KEYS = {f"link.{k}": t for k, t in LINK_KEYS.items()}
KEYS.update({f"{b}.{k}": t for b in ("hv", "da") for k, t in BASIS_KEYS.items()})
KEYS.update({
    "emitter.preset": str,
    "sweep.ob_min": _float, "sweep.ob_max": _float, "sweep.step": _float,
    "run.duration": _float, "run.block_size": _float, "run.output_path": str, "run.workers": _int,
    "pipeline.reference_seed": _int, "pipeline.frame_sync": _bool,
    "calibrate.r0": _float, "calibrate.q0": _float, "calibrate.ob_threshold": _float, "calibrate.q_max": _float,
    "calibrate.rate": _float, "calibrate.qber": _float,
    "calibrate.hv.rate": _float, "calibrate.hv.qber": _float,
    "calibrate.da.rate": _float, "calibrate.da.qber": _float,
    "split.excess_loss": _float,
})
THRESHOLD_KEYS = ("calibrate.r0", "calibrate.q0", "calibrate.ob_threshold", "calibrate.q_max")


def parse_config(text: str) -> dict:
    """Parse config text into a dict of typed values."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return values


def load_config(path: str | os.PathLike) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise OutputError(f"cannot read config {os.fspath(path)}: {exc.strerror}") from exc


@dataclass
class ResolvedConfig:
    run: RunConfig
    calibrations: dict[str, CalibrationResult] = field(default_factory=dict)
    threshold_targets: CalibrationTargets | None = None


def _link_from(values: dict, base: LinkParams) -> LinkParams:
    changes = {}
    for k in LINK_KEYS:
        key = f"link.{k}"
        if key in values:
            if k == "misalignment_deg":
                changes["misalignment"] = math.radians(values[key])
            else:
                changes[k] = values[key]
    try:
        return base.replace(**changes)
    except Bb84LinkError as exc:
        raise ConfigError(str(exc)) from exc


def threshold_targets(values: dict) -> CalibrationTargets | None:
    given = [k for k in THRESHOLD_KEYS if k in values]
    if not given:
        return None
    if len(given) != len(THRESHOLD_KEYS):
        missing = sorted(set(THRESHOLD_KEYS) - set(given))
        raise ConfigError(f"threshold calibration needs all of {', '.join(missing)}")
    return CalibrationTargets(*(values[k] for k in THRESHOLD_KEYS))


def _pair(values, prefix):
    rate, q = values.get(f"{prefix}.rate"), values.get(f"{prefix}.qber")
    if (rate is None) != (q is None):
        raise ConfigError(f"{prefix}.rate and {prefix}.qber must be given together")
    return None if rate is None else (rate, q)


def resolve_config(values: dict, seed: int | None = None, pulses: int | None = None,
                   output_path: str | None = None) -> ResolvedConfig:
    """Build a run configuration, performing any calibrations the config asks for.

    Order: explicit link values, threshold calibration (fits e_opt, eta_bob
    and the dark-rate scale), global operating-point calibration, then
    per-basis calibrations and overrides.
    """
    link = _link_from(values, LinkParams())
    if seed is not None:
        link = link.replace(rng_seed=seed)
    if pulses is not None:
        link = link.replace(pulse_count=pulses)
    emitter = values.get("emitter.preset", "ase_sliced")
    emitter_preset(emitter)

    calibrations = {}
    targets = threshold_targets(values)
    if targets is not None:
        calibrations["threshold"] = calibrate(targets, link)
        link = calibrations["threshold"].params
    op = _pair(values, "calibrate")
    if op is not None:
        calibrations["operating_point"] = calibrate_operating_point(*op, link)
        link = calibrations["operating_point"].params

    basis_links = {}
    for name, basis in (("hv", Basis.HV), ("da", Basis.DA)):
        p = link
        pair = _pair(values, f"calibrate.{name}")
        if pair is not None:
            if link.measurement_mode != "consecutive":
                raise ConfigError(f"calibrate.{name}.* applies to consecutive mode only")
            calibrations[name] = calibrate_operating_point(*pair, link, basis)
            p = calibrations[name].params
        over = {k: values[f"{name}.{k}"] for k in BASIS_KEYS if f"{name}.{k}" in values}
        if over:
            p = p.replace(**over)
        if p is not link:
            basis_links[basis] = p

    try:
        run = RunConfig(
            link=link,
            emitter=emitter,
            sweep=SweepGrid(values.get("sweep.ob_min", -6.0), values.get("sweep.ob_max", 20.0),
                            values.get("sweep.step", 1.0)),
            duration=values.get("run.duration", 600.0),
            block_size=values.get("run.block_size", 5.0),
            output_path=output_path or values.get("run.output_path"),
            basis_links=basis_links,
            reference_seed=values.get("pipeline.reference_seed", 1),
            frame_sync=values.get("pipeline.frame_sync", True),
            workers=values.get("run.workers", 1),
            excess_loss=values.get("split.excess_loss", 0.5),
        )
    except Bb84LinkError as exc:
        raise ConfigError(str(exc)) from exc
    return ResolvedConfig(run, calibrations, targets)
