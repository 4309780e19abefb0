import io

import numpy as np
import pytest

from bb84link.errors import OutputError, TimeTagFormatError
from bb84link.params import LinkParams
from bb84link.prbs import prbs_frame
from bb84link.simulator import simulate_pulses
from bb84link.timetags import EventStream, parse_timetags, read_timetags, timetags_to_string, write_timetags


def test_round_trip(tmp_path):
    ev = simulate_pulses(LinkParams(eta_bob=1e-3, pulse_count=10**7), prbs_frame(1))
    path = tmp_path / "tags.csv"
    write_timetags(ev, path)
    assert read_timetags(path) == ev
    assert path.read_text().startswith("detector_id,timestamp_ps\n")


def test_string_format():
    ev = EventStream([0, 3], [10, 2000])
    assert timetags_to_string(ev) == "detector_id,timestamp_ps\n0,10\n3,2000\n"


@pytest.mark.parametrize("text,line", [
    ("det,ts\n0,1\n", 1),
    ("detector_id,timestamp_ps\n0,10\n1,5\n", 3),
    ("detector_id,timestamp_ps\n0,10\n1\n", 3),
    ("detector_id,timestamp_ps\n0,abc\n", 2),
    ("detector_id,timestamp_ps\n0,-4\n", 2),
    ("detector_id,timestamp_ps\n0,1\n9,4\n", 3),
    ("detector_id,timestamp_ps\n0,1.5\n", 2),
])
def test_rejects_malformed(text, line):
    with pytest.raises(TimeTagFormatError) as info:
        parse_timetags(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_blank_lines_and_buffer():
    ev = read_timetags(io.StringIO("detector_id,timestamp_ps\n\n1,7\n"))
    assert list(ev) == [(1, 7)]


def test_missing_file(tmp_path):
    with pytest.raises(OutputError):
        read_timetags(tmp_path / "nope.csv")


def test_equal_timestamps_allowed():
    ev = parse_timetags("detector_id,timestamp_ps\n0,5\n1,5\n")
    assert np.array_equal(ev.timestamp_ps, [5, 5])
