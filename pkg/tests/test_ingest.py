import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from occucast.errors import DataError, ParseError
from occucast.ingest import (OccupancySeries, Scope, SessionRecord, count_occupancy, format_series,
                             format_sessions, infer_range, parse_series, parse_sessions)

T0 = 1452902400  # 2016-01-16 00:00 UTC
H10 = T0 + 10 * 3600

from oracles import brute_force


def example_sessions():
    return [SessionRecord(H10, 20 * 60, "A", "AP1"),
            SessionRecord(H10 + 50 * 60, 20 * 60, "B", "AP1"),
            SessionRecord(H10 + 5 * 60, 5 * 60, "A", "AP2")]


class TestParseSessions:
    def test_single_line(self):
        [rec] = parse_sessions(b"1452902400,1200,devA,AP1\n")
        assert rec == SessionRecord(1452902400, 1200, "devA", "AP1")

    def test_empty_input(self):
        assert parse_sessions(b"") == []

    def test_negative_duration_reports_line(self):
        with pytest.raises(ParseError) as exc:
            parse_sessions(b"1452902400,-5,devA,AP1\n")
        assert exc.value.line == 1
        assert "negative" in str(exc.value)

    def test_header_and_blank_lines_skipped(self):
        text = "start,duration,device,ap\n\n1452902400,10,d,a\n"
        assert len(parse_sessions(text)) == 1

    def test_malformed_line_number(self):
        with pytest.raises(ParseError) as exc:
            parse_sessions("1452902400,10,d,a\n1452902400,10,d\n")
        assert exc.value.line == 2

    def test_non_integer_field(self):
        with pytest.raises(ParseError):
            parse_sessions("abc,10,d,a\nxyz,10,d,a\n")

    def test_iso_timestamp_normalised_to_utc(self):
        [rec] = parse_sessions("2016-01-16T01:00:00+01:00,60,d,a\n")
        assert rec.start == T0

    def test_round_trip_through_text(self):
        sessions = example_sessions()
        assert parse_sessions(format_sessions(sessions)) == sessions

    def test_stream_source(self):
        assert len(parse_sessions(io.BytesIO(b"1452902400,10,d,a\n"))) == 1


class TestCountOccupancy:
    def test_ap_scope_example(self):
        s = count_occupancy(example_sessions(), 60, Scope.access_point("AP1"), H10, H10 + 3600)
        assert s.counts.tolist() == [2]

    def test_building_deduplicates_devices(self):
        s = count_occupancy(example_sessions(), 60, Scope.building(), H10, H10 + 3600)
        assert s.counts.tolist() == [2]

    def test_no_sessions(self):
        s = count_occupancy([], 15, Scope.building(), T0, T0 + 3 * 900)
        assert s.counts.tolist() == [0, 0, 0]

    def test_zero_duration_never_counted(self):
        s = count_occupancy([SessionRecord(T0 + 10, 0, "A", "x")], 15, Scope.building(), T0, T0 + 900)
        assert s.counts.tolist() == [0]

    def test_session_ending_on_boundary_stays_in_its_interval(self):
        s = count_occupancy([SessionRecord(T0, 900, "A", "x")], 15, Scope.building(), T0, T0 + 1800)
        assert s.counts.tolist() == [1, 0]

    def test_session_spanning_range_edges(self):
        s = count_occupancy([SessionRecord(T0 - 100, 1900, "A", "x")], 15, Scope.building(), T0, T0 + 2700)
        assert s.counts.tolist() == [1, 1, 0]

    def test_unaligned_range(self):
        with pytest.raises(DataError):
            count_occupancy([], 15, Scope.building(), T0 + 1, T0 + 901)

    def test_empty_range(self):
        with pytest.raises(DataError):
            count_occupancy([], 15, Scope.building(), T0, T0)

    def test_bad_scale(self):
        with pytest.raises(DataError):
            count_occupancy([], 20, Scope.building(), T0, T0 + 1200)

    def test_matches_brute_force_on_random_sets(self):
        rng = np.random.default_rng(2024)
        for trial in range(100):
            scale = int(rng.choice([15, 30, 60]))
            n_int = int(rng.integers(1, 49))
            t1 = T0 + n_int * scale * 60
            sessions = [SessionRecord(int(rng.integers(T0 - 3600, t1 + 600)),
                                      int(rng.choice([0, rng.integers(1, 7200)])),
                                      f"d{rng.integers(0, 25)}", f"AP{rng.integers(1, 4)}")
                        for _ in range(int(rng.integers(0, 201)))]
            for scope in (Scope.building(), Scope.access_point("AP2")):
                got = count_occupancy(sessions, scale, scope, T0, t1).counts.tolist()
                assert got == brute_force(sessions, scale, scope, T0, t1), trial


session_sets = st.lists(
    st.builds(SessionRecord, st.integers(T0 - 3600, T0 + 8 * 3600), st.integers(0, 4 * 3600),
              st.sampled_from(["a", "b", "c", "d", "e"]), st.sampled_from(["AP1", "AP2", "AP3"])),
    max_size=40)


@given(session_sets, st.randoms())
def test_permutation_invariant(sessions, rnd):
    shuffled = list(sessions)
    rnd.shuffle(shuffled)
    a = count_occupancy(sessions, 15, Scope.building(), T0, T0 + 6 * 3600)
    assert a == count_occupancy(shuffled, 15, Scope.building(), T0, T0 + 6 * 3600)


@given(session_sets)
def test_building_bounded_by_ap_counts(sessions):
    b = count_occupancy(sessions, 30, Scope.building(), T0, T0 + 6 * 3600).counts
    per_ap = np.array([count_occupancy(sessions, 30, Scope.access_point(ap), T0, T0 + 6 * 3600).counts
                       for ap in ("AP1", "AP2", "AP3")])
    assert np.all(b <= per_ap.sum(axis=0))
    assert np.all(b >= per_ap.max(axis=0))


@given(session_sets)
def test_refinement_consistency(sessions):
    s15 = count_occupancy(sessions, 15, Scope.building(), T0, T0 + 6 * 3600).counts
    s60 = count_occupancy(sessions, 60, Scope.building(), T0, T0 + 6 * 3600).counts
    assert np.all(s60 >= s15.reshape(-1, 4).max(axis=1))


class TestSeriesFormat:
    def test_round_trip(self):
        s = OccupancySeries(15, Scope.building(), T0, np.array([0, 3, 2]))
        assert parse_series(format_series(s)) == s

    def test_header_skipped_and_scale_inferred(self):
        s = parse_series("interval_start,count\n1452902400,1\n1452904200,4\n")
        assert s.scale_minutes == 30 and s.counts.tolist() == [1, 4]

    def test_gap_rejected(self):
        with pytest.raises(DataError):
            parse_series("1452902400,1\n1452903300,1\n1452905100,1\n")

    def test_series_rejects_negative_counts(self):
        with pytest.raises(DataError):
            OccupancySeries(15, Scope.building(), T0, np.array([1, -1]))

    def test_series_rejects_unaligned_start(self):
        with pytest.raises(DataError):
            OccupancySeries(60, Scope.building(), T0 + 900, np.array([1]))


def test_infer_range_covers_sessions():
    t0, t1 = infer_range(example_sessions(), 60)
    assert (t0, t1) == (H10, H10 + 2 * 3600)


def test_scope_parse():
    assert Scope.parse("building").is_building
    assert Scope.parse("ap:AP7") == Scope.access_point("AP7")
    assert str(Scope.parse("ap:AP7")) == "ap:AP7"
    with pytest.raises(DataError):
        Scope.parse("floor:3")
