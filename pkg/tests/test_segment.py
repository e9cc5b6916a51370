import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_trace
from gazeid.segment import (
    FIXATION,
    SACCADE,
    IvtConfig,
    build_segments,
    ivt_labels,
    segment_trace,
    write_segments_csv,
)
from oracles import IVT_FIXTURES, run_lengths, segment_invariant_violations, speeds


@pytest.mark.parametrize("name, runs, expected", IVT_FIXTURES, ids=[f[0] for f in IVT_FIXTURES])
def test_ivt_fixtures(name, runs, expected):
    v = speeds(*runs)
    t = np.arange(len(v)) * 4.0
    assert run_lengths(ivt_labels(t, v)) == expected


def test_trailing_short_fixation_not_patched():
    v = speeds((40, 5), (10, 200), (3, 5))
    labels = ivt_labels(np.arange(len(v)) * 4.0, v)
    assert run_lengths(labels) == [("F", 40), ("S", 10), ("F", 3)]


def test_threshold_is_strict():
    v = speeds((40, 5), (5, 50.0), (40, 5))
    labels = ivt_labels(np.arange(len(v)) * 4.0, v)
    assert labels[40:45].tolist() == [SACCADE] * 5


def test_mdf_measured_in_time_not_samples():
    # 60 slow samples is 240 ms at 250 Hz but only 60 ms at 1000 Hz
    v = speeds((150, 5), (20, 300), (60, 5), (20, 300), (150, 5))
    at_250 = ivt_labels(np.arange(len(v)) * 4.0, v)
    at_1000 = ivt_labels(np.arange(len(v)) * 1.0, v)
    assert run_lengths(at_250)[2] == ("F", 60)
    assert run_lengths(at_1000) == [("F", 150), ("S", 100), ("F", 150)]


def test_build_segments_example():
    v = speeds((30, 5), (10, 200), (5, 5), (10, 200), (50, 5))
    trace = make_trace(v)
    segs = segment_trace(trace)
    assert [(s.kind, s.start_idx, s.end_idx) for s in segs] == [
        (FIXATION, 0, 29), (SACCADE, 30, 54), (FIXATION, 55, 104)
    ]
    assert [s.duration_ms for s in segs] == [120.0, 100.0, 200.0]
    assert not any(s.truncated for s in segs)


def test_short_saccade_merged_into_fixations():
    v = speeds((40, 5), (2, 300), (40, 5))
    segs = segment_trace(make_trace(v))
    assert len(segs) == 1 and segs[0].kind == FIXATION and len(segs[0]) == 82


def test_short_trailing_fixation_is_truncated():
    v = speeds((40, 5), (10, 200), (5, 5))
    segs = segment_trace(make_trace(v))
    assert [s.truncated for s in segs] == [False, False, True]
    assert len(segs.of_kind(FIXATION)) == 1
    assert len(segs.of_kind(FIXATION, include_truncated=True)) == 2


def test_label_length_mismatch():
    with pytest.raises(ValueError):
        build_segments(np.zeros(5, np.int8), make_trace(np.zeros(6)))


@pytest.mark.parametrize("field", ["velocity_threshold_dps", "min_fixation_ms", "min_saccade_ms"])
def test_config_rejects_non_positive(field):
    with pytest.raises(ValueError):
        IvtConfig(**{field: 0})


def test_segments_csv(tmp_path):
    v = speeds((30, 5), (10, 200), (50, 5))
    path = write_segments_csv(segment_trace(make_trace(v)), tmp_path / "seg.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["start_idx", "end_idx", "kind", "duration_ms"]
    assert rows[1:] == [["0", "29", "FIXATION", "120.0"], ["30", "39", "SACCADE", "40.0"], ["40", "89", "FIXATION", "200.0"]]


speed_runs = st.lists(
    st.tuples(st.integers(1, 60), st.sampled_from([0.0, 10.0, 49.9, 50.0, 120.0, 600.0])),
    min_size=1,
    max_size=25,
)


@settings(max_examples=200, deadline=None)
@given(runs=speed_runs, rate=st.sampled_from([250.0, 1000.0]))
def test_segments_tile_and_respect_minimums(runs, rate):
    v = speeds(*runs)
    trace = make_trace(v, rate_hz=rate)
    cfg = IvtConfig()
    segs = segment_trace(trace, cfg)
    assert segment_invariant_violations(segs, len(v), cfg) == []
    assert sum(len(s) for s in segs) == len(v)


@settings(max_examples=100, deadline=None)
@given(runs=speed_runs)
def test_fast_samples_never_labelled_fixation(runs):
    v = speeds(*runs)
    labels = ivt_labels(np.arange(len(v)) * 4.0, v)
    assert np.all(labels[v >= 50.0] == SACCADE)
