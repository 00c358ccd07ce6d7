import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hldsnotes.classify import FrameScores, LabeledSegment
from hldsnotes.errors import InputError
from hldsnotes.segments import (
    OUTLIER,
    SegmentPrediction,
    crisp_decisions,
    enforce_min_duration,
    instance_prediction,
    match_and_score,
    read_predictions,
    write_predictions,
)


def frames(stream):
    """FrameScores from (label, distance) pairs."""
    return [FrameScores({lab: -d}, lab, -d) for lab, d in stream]


def test_short_run_suppressed():
    segs = crisp_decisions(frames([("a", 1.0)] * 19 + [("a", 9.0)] * 30), 3.0, 20)
    assert [(s.start_frame, s.end_frame, s.label) for s in segs] == [(0, 49, OUTLIER)]


def test_min_length_run_kept():
    segs = crisp_decisions(frames([("a", 9.0)] * 5 + [("a", 1.0)] * 20 + [("a", 9.0)] * 5), 3.0, 20)
    assert [(s.start_frame, s.end_frame, s.label) for s in segs] == [(0, 5, OUTLIER), (5, 25, "a"), (25, 30, OUTLIER)]
    assert segs[1].mean_score == pytest.approx(-1.0)


def test_all_above_threshold():
    segs = crisp_decisions(frames([("a", 4.0), ("b", 5.0)] * 10), 3.0, 1)
    assert len(segs) == 1 and segs[0].label == OUTLIER and segs[0].length == 20


def test_empty_scores():
    assert crisp_decisions([], 3.0, 20) == []


frame_specs = st.lists(
    st.tuples(st.sampled_from(["a", "b", "c"]), st.floats(0, 8, allow_nan=False)), min_size=1, max_size=120
)


@settings(max_examples=150, deadline=None)
@given(frame_specs, st.integers(1, 30), st.floats(0.1, 7))
def test_decision_invariants(stream, min_duration, threshold):
    segs = crisp_decisions(frames(stream), threshold, min_duration)
    # contiguous cover of every frame
    assert segs[0].start_frame == 0 and segs[-1].end_frame == len(stream)
    assert all(a.end_frame == b.start_frame for a, b in zip(segs, segs[1:]))
    assert all(a.label != b.label for a, b in zip(segs, segs[1:]))
    assert all(s.label == OUTLIER or s.length >= min_duration for s in segs)
    assert enforce_min_duration(segs, min_duration) == segs


@settings(max_examples=100, deadline=None)
@given(frame_specs, st.floats(0.1, 4), st.floats(0, 4))
def test_threshold_monotone(stream, t1, dt):
    def outlier_frames(theta):
        segs = crisp_decisions(frames(stream), theta, 1)
        return sum(s.length for s in segs if s.label == OUTLIER)

    assert outlier_frames(t1 + dt) <= outlier_frames(t1)


def test_majority_coverage():
    preds = [SegmentPrediction(0, 6, "a", -1.0), SegmentPrediction(6, 10, "b", -1.0)]
    assert instance_prediction(preds, 0, 10, ["a", "b"]) == "a"
    # 5/5 tie goes to the earlier trained label
    preds = [SegmentPrediction(0, 5, "b", -1.0), SegmentPrediction(5, 10, "a", -1.0)]
    assert instance_prediction(preds, 0, 10, ["a", "b"]) == "a"
    # uncovered frames count as outlier
    assert instance_prediction([SegmentPrediction(0, 3, "a", 0.0)], 0, 10, ["a"]) == OUTLIER


def _truth():
    # hop 48, window 96
    return [
        LabeledSegment(0, 960, "a"),
        LabeledSegment(1440, 2400, "b"),
        LabeledSegment(2880, 3840, "x"),
        LabeledSegment(4320, 5280, "y"),
    ]


def test_confusion_matrix_layout():
    preds = [
        SegmentPrediction(0, 19, "a", -1.0),
        SegmentPrediction(19, 60, OUTLIER, -5.0),
        SegmentPrediction(60, 79, "a", -1.0),
        SegmentPrediction(79, 120, OUTLIER, -5.0),
    ]
    m = match_and_score(preds, _truth(), ["a", "b"], 48, 96)
    assert m.rows == ("a", "b", "x", "y") and m.columns == ("a", "b", OUTLIER)
    assert m.count("a", "a") == 1 and m.count("b", OUTLIER) == 1
    assert m.count("x", "a") == 1 and m.count("y", OUTLIER) == 1
    assert m.correct() == 2 and m.accuracy() == 0.5
    np.testing.assert_array_equal(m.row_totals(), [1, 1, 1, 1])
    c = m.collapse_untrained()
    assert c.rows == ("a", "b", "outlier")
    np.testing.assert_array_equal(c.counts[-1], [1, 0, 1])
    assert c.correct() == m.correct()
    text = m.to_text()
    assert "1/1" in text and "outlier" in text


@settings(max_examples=50, deadline=None)
@given(st.permutations(range(4)), st.lists(st.sampled_from(["a", "b", OUTLIER]), min_size=6, max_size=6))
def test_truth_order_irrelevant(perm, labels):
    preds = [SegmentPrediction(20 * i, 20 * i + 20, lab, -1.0) for i, lab in enumerate(labels)]
    truth = _truth()
    m1 = match_and_score(preds, truth, ["a", "b"], 48, 96)
    m2 = match_and_score(preds, [truth[i] for i in perm], ["a", "b"], 48, 96)
    assert m1.rows == m2.rows and np.array_equal(m1.counts, m2.counts)
    assert m1.counts.sum() == len(truth)


def test_bad_inputs():
    with pytest.raises(InputError, match="ground-truth"):
        match_and_score([], [], ["a"], 48, 96)
    with pytest.raises(InputError, match="trained"):
        match_and_score([SegmentPrediction(0, 5, "zz", 0.0)], _truth(), ["a"], 48, 96)


def test_short_note_uses_touching_frames():
    m = match_and_score([SegmentPrediction(0, 10, "a", 0.0)], [LabeledSegment(100, 140, "a")], ["a"], 48, 96)
    assert m.count("a", "a") == 1


def test_prediction_csv(tmp_path):
    preds = [SegmentPrediction(0, 20, "a", -1.25), SegmentPrediction(20, 31, OUTLIER, -7.0000000001)]
    path = tmp_path / "p.csv"
    write_predictions(path, preds)
    assert read_predictions(path) == preds
    path.write_text("start_frame,end_frame,label,mean_score\n3,1,a,0\n")
    with pytest.raises(InputError, match=":2"):
        read_predictions(path)
