"""Photon-level BB84 link simulator and key post-processing for
incoherent-source (SiGe LED / ASE) polarization-encoded QKD transmitters."""

__version__ = "0.1.0"
FORMAT_VERSIONS = {"timetag-csv": 1, "sweep-csv": 1, "evolve-csv": 1, "config": 1}

from .analytic import AnalyticRates, analytic_rates, saturate, threshold_budget
from .calibration import CalibrationResult, CalibrationTargets, calibrate, calibrate_operating_point
from .params import LinkParams
from .pipeline import frame_sync, qber, secret_fraction, sift, temporal_filter
from .polarization import Basis, Bb84State, projection_probability, state_of
from .prbs import Bb84Symbol, Symbols, prbs_symbols
from .simulator import simulate_pulses
from .sources import attenuation_to_target, li_power, photons_per_pulse

__all__ = [
    "AnalyticRates", "Basis", "Bb84State", "Bb84Symbol", "CalibrationResult", "CalibrationTargets",
    "LinkParams", "Symbols", "analytic_rates", "attenuation_to_target", "calibrate",
    "calibrate_operating_point", "frame_sync", "li_power", "photons_per_pulse", "prbs_symbols",
    "projection_probability", "qber", "saturate", "secret_fraction", "sift", "simulate_pulses",
    "state_of", "temporal_filter", "threshold_budget",
]
