import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from bb84link.errors import DomainError
from bb84link.polarization import (
    Basis, Bb84State, analyzer_angles, decode, detector_probabilities, effective_error_probability,
    projection_probability, reduce_angle, state_of,
)

angles = st.floats(-20.0, 20.0, allow_nan=False)


def test_state_of_mapping():
    assert state_of(Basis.HV, 0) is Bb84State.H
    assert state_of(Basis.DA, 1) is Bb84State.A


@pytest.mark.parametrize("basis", list(Basis))
@pytest.mark.parametrize("bit", [0, 1])
def test_decode_inverts_state_of(basis, bit):
    assert decode(state_of(basis, bit)) == (basis, bit)


def test_state_of_rejects_bad_bit():
    with pytest.raises(DomainError):
        state_of(Basis.HV, 2)


def test_state_angles_distinct_mod_pi():
    reduced = {round(reduce_angle(s.angle), 12) for s in Bb84State}
    assert len(reduced) == 4


def test_projection_examples():
    assert projection_probability(Bb84State.H.angle, Bb84State.H.angle) == pytest.approx(1.0, abs=1e-15)
    assert projection_probability(Bb84State.D.angle, Bb84State.H.angle) == pytest.approx(0.5, abs=1e-15)


def test_projection_misaligned_h_on_v():
    mpmath.mp.dps = 30
    expected = float(mpmath.sin(mpmath.radians(5)) ** 2)
    assert expected == pytest.approx(0.0075961, abs=1e-7)
    got = projection_probability(Bb84State.H.angle + math.radians(5), Bb84State.V.angle)
    assert got == pytest.approx(expected, rel=1e-12)


def test_projection_rejects_non_finite():
    with pytest.raises(DomainError):
        projection_probability(math.inf, 0.0)


@given(angles)
def test_basis_detectors_sum_to_one(theta):
    for basis in Basis:
        a0, a1 = analyzer_angles(basis)
        total = projection_probability(theta, a0) + projection_probability(theta, a1)
        assert total == pytest.approx(1.0, abs=1e-12)


@given(angles, angles)
def test_projection_symmetric_and_pi_periodic(a, b):
    p = projection_probability(a, b)
    assert 0.0 <= p <= 1.0
    assert projection_probability(b, a) == pytest.approx(p, abs=1e-12)
    assert projection_probability(a + math.pi, b) == pytest.approx(p, abs=1e-12)


@pytest.mark.parametrize("state", list(Bb84State))
def test_matched_and_mismatched_bases(state):
    p = detector_probabilities(state, state.basis)
    assert p[state.bit] == pytest.approx(1.0, abs=1e-15)
    other = Basis(1 - state.basis)
    assert detector_probabilities(state, other) == pytest.approx((0.5, 0.5), abs=1e-15)


@pytest.mark.parametrize("e_opt", [0.0, 0.042, 0.0771])
def test_effective_error_probability_identity(e_opt):
    assert effective_error_probability(e_opt) == e_opt


@pytest.mark.parametrize("bad", [-0.01, 0.51])
def test_effective_error_probability_range(bad):
    with pytest.raises(DomainError):
        effective_error_probability(bad)


def test_e_opt_flips_matched_detector():
    p0, p1 = detector_probabilities(Bb84State.V, Basis.HV, e_opt=0.05)
    assert p0 == pytest.approx(0.05)
    assert p1 == pytest.approx(0.95)
