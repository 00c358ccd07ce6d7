"""Deterministic synthetic clips: harmonic tones, silences and white noise."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .classify import LabeledSegment
from .errors import ConfigurationError
from .frames import AudioClip

DEFAULT_SAMPLE_RATE = 8000
FADE_S = 0.005

_PITCH_CLASSES = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
_PITCH_RE = re.compile(r"^([A-Ga-g])(#|s|b)?(-?\d+)$")


def note_number(name: str) -> int:
    """Semitone index with C0 = 0, so A4 = 57. Accepts ``C#4``, ``C4s``-style and ``Db4``."""
    m = _PITCH_RE.match(name.strip())
    if not m:
        # the sharp may also trail the octave, as in "C6s"
        m2 = re.match(r"^([A-Ga-g])(-?\d+)(s)$", name.strip())
        if not m2:
            raise ConfigurationError(f"cannot parse pitch name {name!r}")
        letter, octave, accidental = m2.group(1), m2.group(2), "#"
    else:
        letter, accidental, octave = m.group(1), m.group(2), m.group(3)
    n = 12 * int(octave) + _PITCH_CLASSES[letter.upper()]
    if accidental in ("#", "s"):
        n += 1
    elif accidental == "b":
        n -= 1
    return n


def note_frequency(name: str) -> float:
    """Equal-temperament frequency with A4 = 440 Hz."""
    return 440.0 * 2.0 ** ((note_number(name) - 57) / 12)


@dataclass(frozen=True)
class NoteSpec:
    fundamental_hz: float
    duration_s: float
    num_harmonics: int = 1
    harmonic_decay: float = 1.0
    amplitude: float = 0.5
    label: str = "note"

    def __post_init__(self):
        if not self.fundamental_hz > 0:
            raise ConfigurationError(f"fundamental must be positive, got {self.fundamental_hz}")
        if not self.duration_s > 0:
            raise ConfigurationError(f"duration must be positive, got {self.duration_s}")
        if int(self.num_harmonics) < 1:
            raise ConfigurationError(f"num_harmonics must be >= 1, got {self.num_harmonics}")
        if not 0 < self.harmonic_decay <= 1:
            raise ConfigurationError(f"harmonic_decay must be in (0, 1], got {self.harmonic_decay}")
        if not 0 < self.amplitude <= 1:
            raise ConfigurationError(f"amplitude must be in (0, 1], got {self.amplitude}")

    @property
    def top_frequency(self) -> float:
        return self.fundamental_hz * self.num_harmonics


@dataclass(frozen=True)
class Silence:
    duration_s: float

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ConfigurationError(f"silence duration must be positive, got {self.duration_s}")


Event = Union[NoteSpec, Silence]


@dataclass(frozen=True)
class ClipScript:
    events: tuple[Event, ...] = ()
    sample_rate: int = DEFAULT_SAMPLE_RATE
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if int(self.sample_rate) <= 0:
            raise ConfigurationError(f"sample rate must be positive, got {self.sample_rate}")
        if not self.noise_sigma >= 0:
            raise ConfigurationError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        for ev in self.events:
            if isinstance(ev, NoteSpec) and ev.top_frequency >= self.sample_rate / 2:
                raise ConfigurationError(
                    f"aliasing: note {ev.label!r} reaches {ev.top_frequency:g} Hz "
                    f"({ev.num_harmonics} harmonics of {ev.fundamental_hz:g} Hz), "
                    f"Nyquist is {self.sample_rate / 2:g} Hz"
                )
        if self.total_samples() == 0:
            raise ConfigurationError("script has zero total duration")

    def _lengths(self) -> list[int]:
        return [int(round(ev.duration_s * self.sample_rate)) for ev in self.events]

    def total_samples(self) -> int:
        # an empty script still renders to one short silent block
        return sum(self._lengths()) if self.events else int(self.sample_rate)


def render_note(note: NoteSpec, n_samples: int, sample_rate: int) -> np.ndarray:
    t = np.arange(n_samples) / sample_rate
    k = np.arange(1, note.num_harmonics + 1)
    weights = note.amplitude * note.harmonic_decay ** (k - 1)
    tone = (weights[:, None] * np.sin(2 * np.pi * note.fundamental_hz * k[:, None] * t)).sum(axis=0)
    fade = min(int(round(FADE_S * sample_rate)), n_samples // 2)
    if fade > 0:
        ramp = np.arange(1, fade + 1) / fade
        tone[:fade] *= ramp
        tone[n_samples - fade:] *= ramp[::-1]
    return tone


def render(script: ClipScript) -> tuple[AudioClip, list[LabeledSegment]]:
    """Render ``script`` to audio plus one label per note, at exact sample boundaries."""
    rate = script.sample_rate
    out = np.zeros(script.total_samples())
    labels = []
    pos = 0
    for ev, n in zip(script.events, script._lengths()):
        if isinstance(ev, NoteSpec) and n > 0:
            out[pos:pos + n] = render_note(ev, n, rate)
            labels.append(LabeledSegment(pos, pos + n, ev.label))
        pos += n
    if script.noise_sigma > 0:
        rng = np.random.default_rng(script.seed)
        out += rng.normal(0.0, script.noise_sigma, out.size)
    return AudioClip(out, rate), labels


def harmonic_tone(
    fundamental_hz: float,
    duration_s: float,
    sample_rate: int,
    label: str,
    max_harmonics: int = 8,
    harmonic_decay: float = 0.6,
    amplitude: float = 0.5,
) -> NoteSpec:
    """Tone with as many harmonics as fit below Nyquist, up to ``max_harmonics``."""
    fit = int(np.ceil(sample_rate / 2 / fundamental_hz)) - 1
    return NoteSpec(
        fundamental_hz=fundamental_hz,
        duration_s=duration_s,
        num_harmonics=max(1, min(max_harmonics, fit)),
        harmonic_decay=harmonic_decay,
        amplitude=amplitude,
        label=label,
    )


def tone_label(fundamental_hz: float) -> str:
    return f"{fundamental_hz:.0f}Hz"


@dataclass(frozen=True)
class ProtocolSettings:
    """Layout of the three-class experiment with outlier notes.

    Fundamentals sit on a grid ``base_hz + k * spacing_bins * sample_rate / (2 * window_len)``,
    i.e. ``spacing_bins`` DCT bins apart. ``in_class`` picks grid indices for
    the trained notes; every other index is an outlier note.
    """

    sample_rate: int = DEFAULT_SAMPLE_RATE
    window_len: int = 96
    # off the 8000/96 Hz lattice so the per-frame phase advance of every tone
    # is far from a small-denominator fraction of a cycle
    base_hz: float = 206.0
    spacing_bins: int = 2
    n_tones: int = 35
    in_class: tuple[int, ...] = (1, 3, 10)
    test_instances: int = 4
    note_s: float = 3.0
    gap_s: tuple[float, float] = (1.0, 1.5)
    max_harmonics: int = 8
    harmonic_decay: float = 0.6
    amplitude: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "in_class", tuple(self.in_class))
        if len(set(self.in_class)) != len(self.in_class) or not all(
            0 <= k < self.n_tones for k in self.in_class
        ):
            raise ConfigurationError(f"in_class indices must be distinct and < {self.n_tones}")
        if self.spacing_bins < 2:
            raise ConfigurationError("fundamentals must be at least 2 DCT bins apart")

    @property
    def fundamentals(self) -> np.ndarray:
        bin_hz = self.sample_rate / (2 * self.window_len)
        return self.base_hz + self.spacing_bins * bin_hz * np.arange(self.n_tones)

    @property
    def in_class_labels(self) -> list[str]:
        return [tone_label(self.fundamentals[k]) for k in self.in_class]

    @property
    def outlier_labels(self) -> list[str]:
        return [tone_label(f) for k, f in enumerate(self.fundamentals) if k not in self.in_class]

    def tone(self, k: int) -> NoteSpec:
        f = float(self.fundamentals[k])
        return harmonic_tone(
            f, self.note_s, self.sample_rate, tone_label(f),
            self.max_harmonics, self.harmonic_decay, self.amplitude,
        )


SIGMA_SWEEP = (0.0,) + tuple(1.0 / n for n in range(10, 2, -1))


def _sequence(notes: list[NoteSpec], gaps: np.ndarray) -> list[Event]:
    events: list[Event] = [Silence(float(gaps[0]))]
    for note, gap in zip(notes, gaps[1:]):
        events += [note, Silence(float(gap))]
    return events


def paper5_protocol(sigma: float, seed: int = 0, settings: ProtocolSettings | None = None):
    """Training and test clips for the three-class experiment with outliers.

    The training clip holds one instance of each in-class tone; the test clip
    holds ``test_instances`` instances of each in-class tone plus one of every
    other grid tone, shuffled by ``seed``. Silences between notes have
    seed-drawn lengths so note onsets fall at varying offsets from the frame
    grid. White noise of std ``sigma`` is added to both clips.

    Returns ``((train_clip, train_labels), (test_clip, test_labels))``.
    """
    if not 0 <= sigma <= 1 / 3 + 1e-12:
        raise ConfigurationError(f"sigma must lie in [0, 1/3], got {sigma}")
    settings = settings or ProtocolSettings()
    rng = np.random.default_rng(seed)
    train_notes = [settings.tone(k) for k in settings.in_class]
    test_idx = [k for k in settings.in_class for _ in range(settings.test_instances)]
    test_idx += [k for k in range(settings.n_tones) if k not in settings.in_class]
    test_notes = [settings.tone(test_idx[i]) for i in rng.permutation(len(test_idx))]
    lo, hi = settings.gap_s
    train_gaps = rng.uniform(lo, hi, len(train_notes) + 1)
    test_gaps = rng.uniform(lo, hi, len(test_notes) + 1)
    noise_seeds = rng.integers(0, 2**31, size=2)
    rate = settings.sample_rate
    train = ClipScript(_sequence(train_notes, train_gaps), rate, sigma, int(noise_seeds[0]))
    test = ClipScript(_sequence(test_notes, test_gaps), rate, sigma, int(noise_seeds[1]))
    return render(train), render(test)
