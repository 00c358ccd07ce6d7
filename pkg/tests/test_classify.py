import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hldsnotes.classify import (
    REGULARIZATION,
    ClassModel,
    LabeledSegment,
    TrainedModel,
    fit_class,
    load_model,
    read_labels,
    save_model,
    score_frames,
    train,
    write_labels,
)
from hldsnotes.errors import ContractError, InputError, TrainingError
from hldsnotes.frames import FrameSeries
from hldsnotes.hlds import HldsConfig, build_joint_model


def test_identical_samples_regularized():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = fit_class("a", np.tile([1.0, 2.0], (10, 1)))
    np.testing.assert_array_equal(c.mean, [1.0, 2.0])
    np.testing.assert_allclose(c.covariance, REGULARIZATION * np.eye(2))
    assert c.distance([1.0, 2.0]) == 0.0


def test_two_clusters_give_separate_means(rng):
    a = rng.normal([0, 0], 1.0, size=(200, 2))
    b = rng.normal([10, 10], 1.0, size=(200, 2))
    ca, cb = fit_class("a", a), fit_class("b", b)
    np.testing.assert_allclose(ca.mean, [0, 0], atol=0.5)
    np.testing.assert_allclose(cb.mean, [10, 10], atol=0.5)
    assert [s.best_label for s in score_frames(np.array([[0.0, 0.0], [10.0, 10.0]]), [cb, ca])] == ["a", "b"]


def test_few_samples_warns():
    with pytest.warns(UserWarning, match="recommend"):
        fit_class("a", np.random.default_rng(0).normal(size=(2, 2)))


def test_score_values():
    c = ClassModel("a", np.zeros(2), np.eye(2), 10)
    s = score_frames(np.array([[0.0, 0.0], [3.0, 0.0]]), [c])
    assert s[0].best_score == 0.0
    assert s[1].best_score == pytest.approx(-3.0, abs=1e-12)


def test_tie_goes_to_lexicographic_label():
    z = np.array([[1.0, 0.0]])
    b = ClassModel("b", np.zeros(2), np.eye(2), 5)
    a = ClassModel("a", np.array([2.0, 0.0]), np.eye(2), 5)
    s = score_frames(z, [b, a])[0]
    assert s.scores["a"] == s.scores["b"]
    assert s.best_label == "a"


def _spd(rng, d):
    A = rng.normal(size=(d, d))
    return A @ A.T + 0.5 * np.eye(d)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_affine_invariance(seed, d):
    rng = np.random.default_rng(seed)
    classes = [ClassModel(str(i), rng.normal(size=d), _spd(rng, d), 10) for i in range(3)]
    z = rng.normal(size=(6, d)) * 3
    A = rng.normal(size=(d, d)) + 3 * np.eye(d)
    b = rng.normal(size=d)
    moved = [ClassModel(c.label, A @ c.mean + b, A @ c.covariance @ A.T, 10) for c in classes]
    before = score_frames(z, classes)
    after = score_frames(z @ A.T + b, moved)
    for s, t in zip(before, after):
        for k in s.scores:
            assert t.scores[k] == pytest.approx(s.scores[k], rel=1e-8, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_best_is_nearest(seed):
    rng = np.random.default_rng(seed)
    classes = [ClassModel(f"c{i}", rng.normal(size=2), _spd(rng, 2), 10) for i in range(4)]
    z = rng.normal(size=(20, 2))
    for row, s in zip(z, score_frames(z, classes)):
        dist = {c.label: c.distance(row) for c in classes}
        assert s.best_label == min(sorted(dist), key=dist.get)


def _small_setup():
    cfg = HldsConfig(layer_dims=(8, 4, 2), window_len=8, overlap=4)
    return cfg, build_joint_model(cfg)


def test_train_burn_in_too_long():
    cfg, model = _small_setup()
    feats = FrameSeries(np.ones((30, 8)), 8, 4)
    # samples [0, 20) hold frames 0..3 only
    with pytest.raises(TrainingError, match="burn_in"):
        train(model, feats, [LabeledSegment(0, 20, "a")], burn_in=5)


def test_train_pools_segments():
    cfg, model = _small_setup()
    rng = np.random.default_rng(3)
    frames = np.abs(rng.normal(size=(60, 8)))
    feats = FrameSeries(frames, 8, 4)
    labels = [LabeledSegment(0, 100, "b"), LabeledSegment(100, 160, "a"), LabeledSegment(160, 240, "b")]
    classes = train(model, feats, labels, burn_in=2)
    assert [c.label for c in classes] == ["a", "b"]
    # frames wholly inside: [0,24) [25,39) [40,59) then burn-in
    assert classes[0].sample_count == 14 - 2
    assert classes[1].sample_count == (24 - 2) + (19 - 2)


def test_train_rejects_overlap():
    cfg, model = _small_setup()
    feats = FrameSeries(np.ones((60, 8)), 8, 4)
    with pytest.raises(InputError, match="overlap"):
        train(model, feats, [LabeledSegment(0, 100, "a"), LabeledSegment(90, 200, "b")])


def test_model_round_trip(tmp_path, rng):
    cfg = HldsConfig(obs_noise_override=0.25)
    classes = tuple(fit_class(lab, rng.normal(size=(50, 2))) for lab in ("a", "b c"))
    path = tmp_path / "m.txt"
    save_model(path, TrainedModel(cfg, 7, classes))
    back = load_model(path)
    assert back.config == cfg and back.burn_in == 7
    for c, d in zip(classes, back.classes):
        assert c.label == d.label and c.sample_count == d.sample_count
        assert np.array_equal(c.mean, d.mean) and np.array_equal(c.covariance, d.covariance)


def test_model_version_rejected(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("HLDS-MODEL v9\n")
    with pytest.raises(InputError, match="version"):
        load_model(path)
    path.write_text("something else\n")
    with pytest.raises(InputError):
        load_model(path)


def test_label_csv(tmp_path):
    labels = [LabeledSegment(0, 10, "x"), LabeledSegment(20, 31, "a,b")]
    path = tmp_path / "l.csv"
    write_labels(path, labels)
    assert read_labels(path) == labels
    path.write_text("start_sample,end_sample,label\n5,5,x\n")
    with pytest.raises(InputError, match=":2"):
        read_labels(path)
    path.write_text("a,b,c\n")
    with pytest.raises(InputError, match="header"):
        read_labels(path)


def test_segment_contract():
    with pytest.raises(ContractError):
        LabeledSegment(10, 5, "x")
