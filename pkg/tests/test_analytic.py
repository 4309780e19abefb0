import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from bb84link.analytic import (
    analytic_rates, matched_error_probability, saturate, threshold_budget, window_signal_acceptance,
)
from bb84link.errors import ArgumentError, NoThresholdError
from bb84link.params import LinkParams
from bb84link.polarization import Basis, Bb84State, detector_probabilities


def test_saturate_examples():
    assert saturate(1234.5, 0.0) == 1234.5
    assert saturate(1e5, 10e-6) == pytest.approx(5e4, rel=1e-12)
    assert saturate(1e12, 10e-6) == pytest.approx(1e5, rel=1e-6)
    assert saturate(math.inf, 10e-6) == pytest.approx(1e5)


def test_window_acceptance_quadrature():
    p = LinkParams(jitter_sigma=100e-12, window_fraction=0.5)
    sigma, half = 100.0, 250.0
    pdf = lambda t: math.exp(-t * t / (2 * sigma**2)) / (sigma * math.sqrt(2 * math.pi))
    expected, _ = integrate.quad(pdf, -half, half)
    assert window_signal_acceptance(p) == pytest.approx(expected, rel=1e-10)
    assert window_signal_acceptance(p.replace(jitter_sigma=0.0)) == 1.0


def test_noise_free_link_has_zero_qber():
    p = LinkParams(eta_bob=0.01, dark_rates=(0, 0, 0, 0))
    assert analytic_rates(p).qber == 0.0


def test_dark_dominated_link_tends_to_half():
    p = LinkParams(eta_bob=0.01, e_opt=0.03, ob_db=200.0)
    assert analytic_rates(p).qber == pytest.approx(0.5, abs=1e-12)


def test_hand_computed_rates():
    p = LinkParams(eta_bob=1e-3, e_opt=0.02, dead_time=0.0, jitter_sigma=0.0,
                   dark_rates=(100, 100, 100, 100), window_fraction=0.5)
    sig = 1e9 * -math.expm1(-1e-4) * 0.5
    dark = 200 * 0.5 * 0.5
    a = analytic_rates(p)
    assert a.r_sifted == pytest.approx(sig + dark, rel=1e-12)
    assert a.r_dark_sifted == pytest.approx(dark, rel=1e-12)
    assert a.qber == pytest.approx((0.02 * sig + 0.5 * dark) / (sig + dark), rel=1e-12)


def test_simultaneous_mode_matches_consecutive_sifted_rate():
    p = LinkParams(eta_bob=1e-3, e_opt=0.02, dead_time=0.0)
    c = analytic_rates(p)
    s = analytic_rates(p.replace(measurement_mode="simultaneous"))
    # 4 detectors in one run double the dark floor of a 2-detector run
    assert s.r_dark_sifted == pytest.approx(2 * c.r_dark_sifted)
    assert s.r_sifted - s.r_dark_sifted == pytest.approx(c.r_sifted - c.r_dark_sifted)


def test_misalignment_adds_error():
    p = LinkParams(e_opt=0.0, misalignment=math.radians(5))
    assert matched_error_probability(p) == pytest.approx(math.sin(math.radians(5)) ** 2)
    p = p.replace(e_opt=0.03)
    # average the per-state wrong-detector probability over all four states
    wrong = [detector_probabilities(s, s.basis, 0.03, p.misalignment)[1 - s.bit] for s in Bb84State]
    assert matched_error_probability(p) == pytest.approx(sum(wrong) / 4, rel=1e-12)


def test_calibrated_qber_at_threshold(ase_params):
    assert analytic_rates(ase_params.replace(ob_db=15.2)).qber == pytest.approx(0.11, abs=0.005)


def test_threshold_budget_calibrated(ase_params):
    assert threshold_budget(ase_params, 0.11) == pytest.approx(15.2, abs=0.01)


def test_threshold_budget_no_dark():
    p = LinkParams(eta_bob=1e-3, e_opt=0.04, dark_rates=(0, 0, 0, 0))
    with pytest.raises(NoThresholdError):
        threshold_budget(p, 0.11)
    assert threshold_budget(p, 0.04) == 0.0


def test_threshold_budget_already_above():
    p = LinkParams(eta_bob=1e-3, e_opt=0.2)
    with pytest.raises(ArgumentError):
        threshold_budget(p, 0.11)


# single-photon-level regime: mu_eff * eta_bob <= 5e-3 at OB >= 0
params_st = st.builds(
    LinkParams,
    eta_bob=st.floats(1e-6, 0.05),
    e_opt=st.floats(0.0, 0.3),
    dark_rates=st.tuples(*[st.floats(1.0, 5000.0)] * 4),
    dead_time=st.floats(0.0, 50e-6),
    window_fraction=st.floats(0.05, 1.0),
    measurement_mode=st.sampled_from(["consecutive", "simultaneous"]),
)


@settings(max_examples=60, deadline=None)
@given(params_st)
def test_qber_monotone_in_budget(p):
    obs = np.linspace(-10, 60, 36)
    q = [analytic_rates(p.replace(ob_db=ob)).qber for ob in obs]
    assert all(0.0 <= x <= 0.5 for x in q)
    assert all(b >= a - 1e-12 for a, b in zip(q, q[1:]))
    r = [analytic_rates(p.replace(ob_db=ob)).r_sifted for ob in obs if ob >= 0]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(r, r[1:]))


@settings(max_examples=30, deadline=None)
@given(params_st)
def test_per_basis_fields(p):
    a = analytic_rates(p)
    assert set(a.qber_per_basis) == set(Basis)
    assert min(a.qber_per_basis.values()) - 1e-12 <= a.qber <= max(a.qber_per_basis.values()) + 1e-12
