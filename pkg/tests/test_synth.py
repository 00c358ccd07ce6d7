from collections import Counter

import numpy as np
import pytest

from hldsnotes.errors import ConfigurationError
from hldsnotes.frames import AudioClip, dct_magnitude, frame_clip
from hldsnotes.synth import (
    FADE_S,
    SIGMA_SWEEP,
    ClipScript,
    NoteSpec,
    ProtocolSettings,
    Silence,
    harmonic_tone,
    note_frequency,
    paper5_protocol,
    render,
)


def test_note_frequencies():
    assert note_frequency("A4") == pytest.approx(440.0)
    assert note_frequency("A5") == pytest.approx(880.0)
    assert note_frequency("C4") == pytest.approx(261.6256, abs=1e-4)
    assert note_frequency("C6s") == note_frequency("C#6") == pytest.approx(note_frequency("Db6"))
    with pytest.raises(ConfigurationError):
        note_frequency("H2")


def test_single_tone_peak_at_nearest_bin():
    f = 1000.0
    clip, _ = render(ClipScript([NoteSpec(f, 0.2)]))
    frame = frame_clip(clip, 96, 48)[10]
    # DCT-II bin k sits at k * rate / (2 * w); phase can shift the peak by one bin
    expected = f / (8000 / 192)
    assert abs(np.argmax(dct_magnitude(frame)) - expected) <= 1


def test_empty_script_is_silent():
    clip, labels = render(ClipScript([]))
    assert labels == [] and not np.any(clip.samples)


def test_render_deterministic():
    script = ClipScript([Silence(0.1), harmonic_tone(300, 0.5, 8000, "x")], noise_sigma=0.2, seed=9)
    a, la = render(script)
    b, lb = render(script)
    assert np.array_equal(a.samples, b.samples) and la == lb


def test_aliasing_rejected():
    with pytest.raises(ConfigurationError, match="aliasing"):
        ClipScript([NoteSpec(1500, 1.0, num_harmonics=3)])


def test_labels_at_sample_boundaries():
    clip, labels = render(ClipScript([Silence(0.25), NoteSpec(440, 0.5, label="a"), Silence(0.1), NoteSpec(660, 0.3, label="b")]))
    assert [(s.start_sample, s.end_sample, s.label) for s in labels] == [(2000, 6000, "a"), (6800, 9200, "b")]
    fade = int(FADE_S * 8000)
    x = clip.samples
    assert not np.any(x[:2000]) and not np.any(x[6000:6800])
    assert np.all(np.abs(x[2000 + fade: 6000 - fade]).max() > 0.1)


def test_rms_matches_analytic():
    for f in (220.0, 523.0, 1700.0):
        a = 0.6
        clip, _ = render(ClipScript([NoteSpec(f, 2.0, amplitude=a)]))
        rms = np.sqrt(np.mean(clip.samples**2))
        assert rms == pytest.approx(a / np.sqrt(2), rel=0.05)


def test_noise_level():
    clip, _ = render(ClipScript([Silence(2.0)], noise_sigma=0.25, seed=1))
    assert np.std(clip.samples) == pytest.approx(0.25, rel=0.02)


def test_sigma_sweep_values():
    assert len(SIGMA_SWEEP) == 9
    assert SIGMA_SWEEP[0] == 0.0
    np.testing.assert_allclose(SIGMA_SWEEP[1:], [1 / n for n in range(10, 2, -1)])


def test_protocol_layout():
    s = ProtocolSettings()
    f = s.fundamentals
    assert len(f) == 35
    assert np.min(np.diff(f)) >= 2 * 8000 / 192 - 1e-9
    (tr, trl), (te, tel) = paper5_protocol(0.0, seed=0)
    assert sorted(x.label for x in trl) == sorted(s.in_class_labels)
    counts = Counter(x.label for x in tel)
    assert all(counts[label] == 4 for label in s.in_class_labels)
    assert all(counts[label] == 1 for label in s.outlier_labels)
    assert sum(counts.values()) == 12 + 32
    assert isinstance(tr, AudioClip) and tr.sample_rate == 8000


def test_protocol_seed_shuffles():
    _, (_, a) = paper5_protocol(0.0, seed=1)
    _, (_, b) = paper5_protocol(0.0, seed=2)
    assert Counter(x.label for x in a) == Counter(x.label for x in b)
    assert [x.label for x in a] != [x.label for x in b]


def test_protocol_sigma_range():
    with pytest.raises(ConfigurationError):
        paper5_protocol(0.5)
