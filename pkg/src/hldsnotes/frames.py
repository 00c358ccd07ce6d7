"""Audio I/O and the frame-level observation sequence.

Audio is cut into overlapping windows and each window is replaced by the
magnitude of its orthonormal DCT-II.
"""

from __future__ import annotations

import logging
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dct

from .errors import ContractError, InputError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono samples, nominally in [-1, 1], and their sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise InputError(f"audio must be a non-empty 1-D array, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InputError("audio contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise InputError(f"sample rate must be positive, got {self.sample_rate}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True, eq=False)
class FrameSeries:
    frames: np.ndarray  # (T, window_len), non-negative
    window_len: int
    overlap: int

    @property
    def frame_hop(self) -> int:
        return self.window_len - self.overlap

    def __len__(self) -> int:
        return len(self.frames)


def frame_count(n_samples: int, window_len: int, overlap: int) -> int:
    if n_samples < window_len:
        return 0
    return (n_samples - window_len) // (window_len - overlap) + 1


def frame_clip(clip: AudioClip, window_len: int, overlap: int) -> np.ndarray:
    """Windows of ``window_len`` samples advancing by ``window_len - overlap``.

    A trailing partial window is dropped.
    """
    if window_len < 1 or not 0 <= overlap < window_len:
        raise ContractError(
            f"need 0 <= overlap < window_len, got overlap={overlap}, window_len={window_len}"
        )
    n = clip.samples.size
    if n < window_len:
        raise InputError(f"clip has {n} samples, shorter than one window of {window_len}")
    hop = window_len - overlap
    return sliding_window_view(clip.samples, window_len)[::hop].copy()


def dct_magnitude(frame) -> np.ndarray:
    return np.abs(dct(np.asarray(frame, dtype=float), type=2, norm="ortho", axis=-1))


def clip_features(clip: AudioClip, window_len: int, overlap: int) -> FrameSeries:
    frames = dct_magnitude(frame_clip(clip, window_len, overlap))
    return FrameSeries(frames, window_len, overlap)


def samples_to_frames(start: int, end: int, window_len: int, hop: int, n_frames: int | None = None) -> tuple[int, int]:
    """Frame index range ``[a, b)`` of windows lying wholly inside ``[start, end)``."""
    a = max(0, -(-start // hop))
    b = max(a, (end - window_len) // hop + 1)
    if n_frames is not None:
        a, b = min(a, n_frames), min(b, n_frames)
    return a, b


def read_wav(path) -> AudioClip:
    """Read 16-bit PCM WAV; stereo input is averaged to mono."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as fh:
            width = fh.getsampwidth()
            channels = fh.getnchannels()
            rate = fh.getframerate()
            raw = fh.readframes(fh.getnframes())
    except wave.Error as exc:
        raise InputError(f"{path}: malformed WAV header ({exc})") from exc
    except EOFError as exc:
        raise InputError(f"{path}: truncated WAV file") from exc
    if width != 2:
        raise InputError(f"{path}: unsupported sample width {8 * width} bits, need 16-bit PCM")
    data = np.frombuffer(raw, dtype="<i2")
    if channels > 1:
        log.warning("%s: %d channels averaged to mono", path, channels)
        data = data[: data.size - data.size % channels].reshape(-1, channels).mean(axis=1)
    if data.size == 0:
        raise InputError(f"{path}: no audio samples")
    return AudioClip(data.astype(float) / 32768.0, rate)


def write_wav(path, clip: AudioClip) -> None:
    """Write 16-bit PCM mono; samples outside [-1, 1) are clipped."""
    pcm = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(clip.sample_rate)
        fh.writeframes(pcm.tobytes())
