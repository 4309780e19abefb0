import numpy as np
import pytest

from bb84link.errors import ArgumentError, SeedError
from bb84link.pipeline import Measurements, frame_sync
from bb84link.prbs import PRBS_PERIOD, Bb84Symbol, Symbols, prbs_bits, prbs_frame, prbs_symbols
from bb84link.polarization import Basis, Bb84State


def test_maximal_length_period():
    bits = prbs_bits(1, 2 * PRBS_PERIOD)
    assert PRBS_PERIOD == 32767
    assert np.array_equal(bits[:PRBS_PERIOD], bits[PRBS_PERIOD:])
    # 32767 = 7 * 31 * 151; no proper divisor may be a period
    for d in (7, 31, 151, 217, 1057, 4681):
        assert not np.array_equal(bits[:d], bits[d:2 * d]) or not np.array_equal(
            bits[: PRBS_PERIOD - d], bits[d:PRBS_PERIOD])


def test_balanced_m_sequence():
    bits = prbs_bits(1, PRBS_PERIOD)
    assert int(bits.sum()) == 2**14


def test_lfsr_recurrence():
    bits = prbs_bits(0x1234, 500).astype(int)
    # x^15 + x^14 + 1: b[n] = b[n-14] ^ b[n-15]
    n = np.arange(15, 500)
    assert np.array_equal(bits[n], bits[n - 14] ^ bits[n - 15])


def test_deterministic():
    assert prbs_symbols(77, 1000) == prbs_symbols(77, 1000)
    assert prbs_symbols(77, 1000) != prbs_symbols(78, 1000)


def test_basis_frequency():
    s = prbs_symbols(1, 10**6)
    assert abs(s.basis.mean() - 0.5) <= 0.005
    assert abs(s.bit.mean() - 0.5) <= 0.005


@pytest.mark.parametrize("seed", [0, -3, 2**15])
def test_bad_seed(seed):
    with pytest.raises(SeedError):
        prbs_symbols(seed, 10)


def test_bad_count():
    with pytest.raises(ArgumentError):
        prbs_symbols(1, 0)


def test_symbol_view():
    s = prbs_symbols(5, 20)
    first = s[0]
    assert isinstance(first, Bb84Symbol)
    assert first.state == Bb84State(2 * int(s.basis[0]) + int(s.bit[0]))
    assert Symbols.from_symbols(list(s)) == s
    assert len(list(s)) == 20


def test_other_seeds_are_phases_of_one_sequence():
    ref = prbs_frame(1)
    other = prbs_frame(4242)
    idx = np.arange(5000)
    matched = Measurements(idx, other.basis[idx], other.bit[idx])
    res = frame_sync(matched, ref)
    assert res.agreement == 1.0
    assert ref.rolled(res.offset) == other


def test_cyclic_indexing():
    s = prbs_symbols(3, 10)
    b, v = s.at(np.array([0, 10, 23]))
    assert list(b) == [s.basis[0], s.basis[0], s.basis[3]]
    assert Basis(int(b[0])) in Basis
