"""Physical link configuration shared by the simulator and the analytic model."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Literal

from .errors import ArgumentError
from .polarization import Basis

MeasurementMode = Literal["consecutive", "simultaneous"]

# free-running InGaAs pair, reused for both bases in consecutive mode
NOMINAL_DARK_RATES = (560.0, 525.0, 560.0, 525.0)


@dataclass(frozen=True)
class LinkParams:
    symbol_rate: float = 1e9
    mu_q: float = 0.1
    ob_db: float = 0.0
    e_opt: float = 0.0
    eta_bob: float = 1.0
    dark_rates: tuple[float, float, float, float] = NOMINAL_DARK_RATES
    dead_time: float = 10e-6
    jitter_sigma: float = 100e-12
    window_fraction: float = 0.5
    measurement_mode: MeasurementMode = "consecutive"
    pulse_count: int = 10_000_000
    rng_seed: int = 1
    prbs_seed: int = 1
    misalignment: float = 0.0

    def __post_init__(self):
        rates = tuple(float(r) for r in self.dark_rates)
        if len(rates) == 2:
            rates = rates * 2
        object.__setattr__(self, "dark_rates", rates)
        object.__setattr__(self, "pulse_count", int(self.pulse_count))
        problems = []
        if not self.symbol_rate > 0:
            problems.append("symbol_rate must be > 0")
        if not self.mu_q > 0:
            problems.append("mu_q must be > 0")
        if not math.isfinite(self.ob_db):
            problems.append("ob_db must be finite")
        if not 0.0 <= self.e_opt <= 0.5:
            problems.append("e_opt must lie in [0, 0.5]")
        if not 0.0 < self.eta_bob <= 1.0:
            problems.append("eta_bob must lie in (0, 1]")
        if len(rates) != 4 or any(r < 0 or not math.isfinite(r) for r in rates):
            problems.append("dark_rates needs 2 or 4 finite non-negative values")
        if not self.dead_time >= 0:
            problems.append("dead_time must be >= 0")
        if not self.jitter_sigma >= 0:
            problems.append("jitter_sigma must be >= 0")
        if not 0.0 < self.window_fraction <= 1.0:
            problems.append("window_fraction must lie in (0, 1]")
        if self.measurement_mode not in ("consecutive", "simultaneous"):
            problems.append(f"unknown measurement_mode {self.measurement_mode!r}")
        if self.pulse_count < 1:
            problems.append("pulse_count must be >= 1")
        if problems:
            raise ArgumentError("invalid link parameters: " + "; ".join(problems))

    def replace(self, **changes) -> "LinkParams":
        return dataclasses.replace(self, **changes)

    @property
    def mu_eff(self) -> float:
        """Mean photon number reaching Bob's input after the optical budget."""
        return self.mu_q * 10.0 ** (-self.ob_db / 10.0)

    @property
    def symbol_period(self) -> float:
        return 1.0 / self.symbol_rate

    @property
    def run_duration(self) -> float:
        """Observation time of one measurement run."""
        return self.pulse_count / self.symbol_rate

    def runs(self) -> list[tuple[Basis, ...]]:
        """Active analyzer bases for each measurement run."""
        if self.measurement_mode == "consecutive":
            return [(Basis.HV,), (Basis.DA,)]
        return [(Basis.HV, Basis.DA)]


def detectors_of(basis: Basis | int) -> tuple[int, int]:
    b = int(basis)
    return 2 * b, 2 * b + 1
