"""Light-source models: L-I curves, emitter presets and photon-number conversion."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import constants

from .errors import ArgumentError, DomainError, InfeasibleAttenuationError, RangeError


@dataclass(frozen=True)
class PhysicalConstants:
    planck_h: float = constants.h
    speed_of_light_c: float = constants.c

    def photon_energy(self, wavelength_nm: float) -> float:
        return self.planck_h * self.speed_of_light_c / (wavelength_nm * 1e-9)


CODATA = PhysicalConstants()


@dataclass(frozen=True)
class LiCurve:
    """Sampled light-current characteristic; currents in mA, powers in W."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(i), float(p)) for i, p in self.points)
        if len(pts) < 2:
            raise ArgumentError("an L-I curve needs at least two points")
        currents = [i for i, _ in pts]
        if any(b <= a for a, b in zip(currents, currents[1:])):
            raise ArgumentError("L-I currents must be strictly increasing")
        if any(p < 0 for _, p in pts):
            raise ArgumentError("L-I powers must be non-negative")
        if currents[0] == 0.0 and pts[0][1] > 0.0:
            raise ArgumentError("L-I curve must emit no power at zero current")
        object.__setattr__(self, "points", pts)

    @property
    def currents(self) -> np.ndarray:
        return np.array([i for i, _ in self.points])

    @property
    def powers(self) -> np.ndarray:
        return np.array([p for _, p in self.points])


def li_power(curve: LiCurve, current: float) -> float:
    lo, hi = curve.points[0][0], curve.points[-1][0]
    if not lo <= current <= hi:
        raise RangeError(f"current {current} mA outside L-I curve range [{lo}, {hi}] mA")
    return float(np.interp(current, curve.currents, curve.powers))


# Only the 46 mA / 100 pW point is quoted numerically for the SiGe die.
SIGE_LI_CURVE = LiCurve(((0.0, 0.0), (46.0, 100e-12)))


def ghz_to_nm(bandwidth_ghz: float, center_nm: float) -> float:
    """Convert an optical bandwidth in GHz to nm at ``center_nm``."""
    return center_nm**2 * bandwidth_ghz * 1e9 / constants.c * 1e-9


@dataclass(frozen=True)
class EmitterSpec:
    name: str
    center_wavelength: float
    bandwidth: float | None
    kind: Literal["led", "ase", "laser"]
    li_curve: LiCurve | None = None
    forward_voltage: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 1000.0 < self.center_wavelength < 2000.0:
            raise DomainError(f"center wavelength {self.center_wavelength} nm outside (1000, 2000) nm")
        if self.bandwidth is not None and self.bandwidth < 0:
            raise DomainError("bandwidth must be >= 0")
        if self.kind not in ("led", "ase", "laser"):
            raise DomainError(f"unknown emitter kind {self.kind!r}")


EMITTER_PRESETS: dict[str, EmitterSpec] = {
    # unfiltered bandwidth is not characterized beyond "C+L band" emission
    "sige_unfiltered": EmitterSpec("sige_unfiltered", 1581.0, None, "led", SIGE_LI_CURVE, forward_voltage=1.0),
    "sige_filtered": EmitterSpec("sige_filtered", 1581.0, 14.0, "led", SIGE_LI_CURVE, forward_voltage=1.0),
    "ase_sliced": EmitterSpec("ase_sliced", 1539.1, ghz_to_nm(25.0, 1539.1), "ase"),
}


def emitter_preset(name: str) -> EmitterSpec:
    try:
        return EMITTER_PRESETS[name]
    except KeyError:
        raise ArgumentError(
            f"unknown emitter preset {name!r}; choose from {sorted(EMITTER_PRESETS)}"
        ) from None


def photons_per_pulse(power: float, wavelength: float, symbol_rate: float,
                      consts: PhysicalConstants = CODATA) -> float:
    """Mean photon number per pulse for average optical ``power`` [W] at
    ``wavelength`` [nm] and ``symbol_rate`` [Hz]."""
    if wavelength <= 0:
        raise DomainError("wavelength must be positive")
    if symbol_rate <= 0:
        raise DomainError("symbol rate must be positive")
    if power < 0:
        raise DomainError("optical power must be non-negative")
    return power / (consts.photon_energy(wavelength) * symbol_rate)


def attenuation_to_target(mu_source: float, mu_target: float) -> float:
    if mu_target <= 0:
        raise DomainError("target mean photon number must be positive")
    if mu_source < mu_target:
        raise InfeasibleAttenuationError(
            f"source delivers {mu_source:.4g} photons/pulse, below target {mu_target:.4g}"
        )
    return 10.0 * math.log10(mu_source / mu_target)


def apply_attenuation(mu: float, attenuation_db: float) -> float:
    return mu * 10.0 ** (-attenuation_db / 10.0)


def dbm(power_w: float) -> float:
    return 10.0 * math.log10(power_w / 1e-3)

