"""Per-class Gaussian models in the top-layer (z) space and frame scoring.

Training filters the whole training clip once and pools the z estimates of
every annotated note by label. At test time each frame is scored against
every class by negative Mahalanobis distance, so a frame far from all
classes can be rejected downstream.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import ContractError, InputError, TrainingError
from .frames import FrameSeries, samples_to_frames
from .hlds import HldsConfig, JointModel, extract_z, filter_means

REGULARIZATION = 1e-6
DEFAULT_BURN_IN = 5


@dataclass(frozen=True)
class LabeledSegment:
    start_sample: int
    end_sample: int  # exclusive
    label: str

    def __post_init__(self):
        if not int(self.start_sample) < int(self.end_sample):
            raise ContractError(
                f"segment {self.label!r}: start {self.start_sample} not before end {self.end_sample}"
            )
        if int(self.start_sample) < 0:
            raise ContractError(f"segment {self.label!r}: negative start {self.start_sample}")

    def frame_range(self, window_len: int, hop: int, n_frames: int | None = None) -> tuple[int, int]:
        return samples_to_frames(self.start_sample, self.end_sample, window_len, hop, n_frames)


def check_non_overlapping(segments: Sequence[LabeledSegment]) -> None:
    ordered = sorted(segments, key=lambda s: s.start_sample)
    for a, b in zip(ordered, ordered[1:]):
        if b.start_sample < a.end_sample:
            raise InputError(
                f"segments overlap: {a.label!r} [{a.start_sample}, {a.end_sample}) and "
                f"{b.label!r} [{b.start_sample}, {b.end_sample})"
            )


@dataclass(frozen=True, eq=False)
class ClassModel:
    label: str
    mean: np.ndarray
    covariance: np.ndarray
    sample_count: int

    @cached_property
    def _factor(self):
        try:
            return linalg.cho_factor(self.covariance, lower=True)
        except linalg.LinAlgError as exc:
            raise TrainingError(f"class {self.label!r}: covariance is not positive definite") from exc

    def distance(self, z) -> np.ndarray:
        """Mahalanobis distance of each row of ``z`` (or of a single vector)."""
        z = np.asarray(z, dtype=float)
        diff = np.atleast_2d(z) - self.mean
        sq = np.einsum("ij,ij->i", diff, linalg.cho_solve(self._factor, diff.T).T)
        d = np.sqrt(np.maximum(sq, 0.0))
        return d if z.ndim == 2 else d[0]


@dataclass(frozen=True)
class FrameScores:
    scores: dict[str, float]
    best_label: str
    best_score: float


def fit_class(label: str, samples: np.ndarray, eps: float = REGULARIZATION) -> ClassModel:
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n, dim = samples.shape
    if n == 0:
        raise TrainingError(f"class {label!r}: no samples")
    if n < dim + 1:
        warnings.warn(
            f"class {label!r}: {n} samples for a {dim}-dim covariance (recommend >= {dim + 1})",
            stacklevel=2,
        )
    mean = samples.mean(axis=0)
    cov = np.cov(samples, rowvar=False, ddof=1).reshape(dim, dim) if n > 1 else np.zeros((dim, dim))
    trace = float(np.trace(cov))
    # identical samples have zero trace; fall back to an absolute ridge
    ridge = eps * trace / dim if trace > 0 else eps
    cov = 0.5 * (cov + cov.T) + ridge * np.eye(dim)
    model = ClassModel(label, mean, cov, n)
    model._factor  # fail now rather than at scoring time
    return model


def train(
    model: JointModel,
    clip_features: FrameSeries,
    labels: Sequence[LabeledSegment],
    burn_in: int = DEFAULT_BURN_IN,
    z: np.ndarray | None = None,
) -> list[ClassModel]:
    """Fit one Gaussian per label from the filtered z trajectory of a training clip.

    The clip is filtered once, without resets between notes. For each note
    the first ``burn_in`` frames are skipped. ``z`` may be passed to reuse an
    already computed trajectory.
    """
    if not labels:
        raise TrainingError("no labelled segments")
    if burn_in < 0:
        raise ContractError(f"burn_in must be >= 0, got {burn_in}")
    check_non_overlapping(labels)
    n_frames = len(clip_features)
    ranges = []
    for seg in labels:
        a, b = seg.frame_range(clip_features.window_len, clip_features.frame_hop, n_frames)
        if b - a <= burn_in:
            raise TrainingError(
                f"segment {seg.label!r} [{seg.start_sample}, {seg.end_sample}) spans "
                f"{b - a} frames, need more than burn_in={burn_in}"
            )
        ranges.append((seg.label, a + burn_in, b))
    if z is None:
        z = extract_z(filter_means(model, clip_features.frames), model)
    pooled: dict[str, list[np.ndarray]] = {}
    for label, a, b in ranges:
        pooled.setdefault(label, []).append(z[a:b])
    return [fit_class(label, np.concatenate(pooled[label])) for label in sorted(pooled)]


def distance_matrix(z: np.ndarray, classes: Sequence[ClassModel]) -> tuple[list[str], np.ndarray]:
    """Labels in lexicographic order and the ``(T, n_classes)`` distances."""
    if not classes:
        raise ContractError("no class models")
    ordered = sorted(classes, key=lambda c: c.label)
    z = np.atleast_2d(np.asarray(z, dtype=float))
    return [c.label for c in ordered], np.column_stack([c.distance(z) for c in ordered])


def score_frames(z: np.ndarray, classes: Sequence[ClassModel]) -> list[FrameScores]:
    labels, dist = distance_matrix(z, classes)
    scores = -dist
    # argmax returns the first maximum, i.e. the lexicographically smallest label
    best = np.argmax(scores, axis=1)
    return [
        FrameScores(dict(zip(labels, row.tolist())), labels[k], float(row[k]))
        for row, k in zip(scores, best)
    ]


# Label CSV: start_sample,end_sample,label

LABEL_HEADER = ["start_sample", "end_sample", "label"]


def read_labels(path) -> list[LabeledSegment]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != LABEL_HEADER:
            raise InputError(f"{path}: expected header {','.join(LABEL_HEADER)}, got {header}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise InputError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                start, end = int(row[0]), int(row[1])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: non-integer sample index") from exc
            try:
                out.append(LabeledSegment(start, end, row[2]))
            except ContractError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_labels(path, labels: Sequence[LabeledSegment]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LABEL_HEADER)
        for seg in labels:
            writer.writerow([seg.start_sample, seg.end_sample, seg.label])


# Model file ("HLDS-MODEL v1"): header line, config echo, then one block per class.

MODEL_MAGIC = "HLDS-MODEL"
MODEL_VERSION = "v1"


@dataclass(frozen=True, eq=False)
class TrainedModel:
    config: HldsConfig
    burn_in: int
    classes: tuple[ClassModel, ...]

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.classes]


def _floats(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def save_model(path, model: TrainedModel) -> None:
    cfg = model.config
    lines = [
        f"{MODEL_MAGIC} {MODEL_VERSION}",
        "layer_dims " + " ".join(str(d) for d in cfg.layer_dims),
        f"innovation_scale {cfg.innovation_scale!r}",
        f"obs_noise_override {'none' if cfg.obs_noise_override is None else repr(float(cfg.obs_noise_override))}",
        f"window_len {cfg.window_len}",
        f"overlap {cfg.overlap}",
        f"initial_cov_scale {float(cfg.initial_cov_scale)!r}",
        f"burn_in {model.burn_in}",
        f"classes {len(model.classes)}",
    ]
    for c in model.classes:
        if "\n" in c.label or not c.label.strip():
            raise ContractError(f"class label {c.label!r} cannot be stored")
        dim = c.mean.size
        lines += [f"class {c.label}", f"dim {dim} count {c.sample_count}", "mean " + _floats(c.mean)]
        lines += ["cov " + _floats(row) for row in c.covariance]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> TrainedModel:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    pos = 0

    def take(key: str) -> str:
        nonlocal pos
        if pos >= len(lines):
            raise InputError(f"{path}: unexpected end of file, expected {key!r}")
        line = lines[pos]
        head, _, rest = line.partition(" ")
        if head != key:
            raise InputError(f"{path}:{pos + 1}: expected {key!r}, got {line!r}")
        pos += 1
        return rest

    if not lines:
        raise InputError(f"{path}: empty model file")
    magic, _, version = lines[0].partition(" ")
    if magic != MODEL_MAGIC:
        raise InputError(f"{path}: not an {MODEL_MAGIC} file")
    if version.strip() != MODEL_VERSION:
        raise InputError(f"{path}: unsupported model version {version.strip()!r}, expected {MODEL_VERSION}")
    pos = 1
    try:
        dims = tuple(int(v) for v in take("layer_dims").split())
        scale = float(take("innovation_scale"))
        obs = take("obs_noise_override").strip()
        window_len = int(take("window_len"))
        overlap = int(take("overlap"))
        pi0 = float(take("initial_cov_scale"))
        burn_in = int(take("burn_in"))
        n_classes = int(take("classes"))
        config = HldsConfig(
            layer_dims=dims,
            innovation_scale=scale,
            obs_noise_override=None if obs == "none" else float(obs),
            window_len=window_len,
            overlap=overlap,
            initial_cov_scale=pi0,
        )
        classes = []
        for _ in range(n_classes):
            label = take("class")
            meta = take("dim").split()
            if len(meta) != 3 or meta[1] != "count":
                raise InputError(f"{path}:{pos}: malformed class header {meta}")
            dim, count = int(meta[0]), int(meta[2])
            if dim != dims[-1]:
                raise InputError(f"{path}: class {label!r} has dim {dim}, top layer is {dims[-1]}")
            mean = np.array([float(v) for v in take("mean").split()])
            cov = np.array([[float(v) for v in take("cov").split()] for _ in range(dim)])
            if mean.shape != (dim,) or cov.shape != (dim, dim):
                raise InputError(f"{path}: class {label!r} has malformed mean or covariance")
            classes.append(ClassModel(label, mean, cov, count))
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}:{pos}: {exc}") from exc
    return TrainedModel(config, burn_in, tuple(classes))
