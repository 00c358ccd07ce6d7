"""Crisp note segments from frame scores, and instance-level evaluation."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify import FrameScores, LabeledSegment, check_non_overlapping
from .errors import ContractError, InputError

OUTLIER = "__outlier__"
DEFAULT_THRESHOLD = 3.0
DEFAULT_MIN_DURATION = 20


@dataclass(frozen=True)
class SegmentPrediction:
    start_frame: int
    end_frame: int  # exclusive
    label: str
    mean_score: float

    def __post_init__(self):
        if not self.start_frame < self.end_frame:
            raise ContractError(f"empty segment [{self.start_frame}, {self.end_frame})")

    @property
    def length(self) -> int:
        return self.end_frame - self.start_frame


def frame_labels(scores: Sequence[FrameScores], threshold: float) -> list[str]:
    """Best label per frame, or OUTLIER when its distance exceeds ``threshold``."""
    return [s.best_label if s.best_score >= -threshold else OUTLIER for s in scores]


def _runs(labels: Sequence[str], values: Sequence[float]) -> list[SegmentPrediction]:
    out = []
    start = 0
    for t in range(1, len(labels) + 1):
        if t == len(labels) or labels[t] != labels[start]:
            out.append(SegmentPrediction(start, t, labels[start], float(np.mean(values[start:t]))))
            start = t
    return out


def _merge(a: SegmentPrediction, b: SegmentPrediction) -> SegmentPrediction:
    score = (a.mean_score * a.length + b.mean_score * b.length) / (a.length + b.length)
    return SegmentPrediction(a.start_frame, b.end_frame, a.label, score)


def enforce_min_duration(segments: Sequence[SegmentPrediction], min_duration: int) -> list[SegmentPrediction]:
    """Relabel short non-outlier runs as OUTLIER and merge neighbouring OUTLIER runs."""
    if min_duration < 1:
        raise ContractError(f"min_duration must be >= 1, got {min_duration}")
    out: list[SegmentPrediction] = []
    for seg in segments:
        if seg.label != OUTLIER and seg.length < min_duration:
            seg = SegmentPrediction(seg.start_frame, seg.end_frame, OUTLIER, seg.mean_score)
        if out and out[-1].label == seg.label and out[-1].end_frame == seg.start_frame:
            out[-1] = _merge(out[-1], seg)
        else:
            out.append(seg)
    return out


def crisp_decisions(
    scores: Sequence[FrameScores],
    threshold: float = DEFAULT_THRESHOLD,
    min_duration: int = DEFAULT_MIN_DURATION,
) -> list[SegmentPrediction]:
    """Threshold per-frame scores, merge runs, then drop runs shorter than ``min_duration``.

    ``threshold`` is a Mahalanobis distance: a frame whose best score is below
    ``-threshold`` is an outlier frame. ``mean_score`` is the mean best score
    over the frames of each emitted segment.
    """
    if min_duration < 1:
        raise ContractError(f"min_duration must be >= 1, got {min_duration}")
    if not scores:
        return []
    labels = frame_labels(scores, threshold)
    best = [s.best_score for s in scores]
    return enforce_min_duration(_runs(labels, best), min_duration)


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Note-instance counts; rows are true labels, columns trained labels plus OUTLIER."""

    rows: tuple[str, ...]
    columns: tuple[str, ...]
    counts: np.ndarray

    @property
    def trained(self) -> tuple[str, ...]:
        return self.columns[:-1]

    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def count(self, true_label: str, predicted: str) -> int:
        return int(self.counts[self.rows.index(true_label), self.columns.index(predicted)])

    def correct(self) -> int:
        """Instances of trained classes given their own label plus others flagged OUTLIER."""
        total = 0
        for i, row in enumerate(self.rows):
            target = row if row in self.trained else OUTLIER
            total += int(self.counts[i, self.columns.index(target)])
        return total

    def accuracy(self) -> float:
        n = int(self.counts.sum())
        return self.correct() / n if n else float("nan")

    def collapse_untrained(self, name: str = "outlier") -> ConfusionMatrix:
        """Pool every non-trained true label into a single row."""
        keep = [i for i, r in enumerate(self.rows) if r in self.trained]
        other = [i for i, r in enumerate(self.rows) if r not in self.trained]
        counts = self.counts[keep]
        rows = tuple(self.rows[i] for i in keep)
        if other:
            counts = np.vstack([counts, self.counts[other].sum(axis=0)])
            rows += (name,)
        return ConfusionMatrix(rows, self.columns, counts)

    def to_text(self) -> str:
        """Aligned table with ``count/row_total`` entries and a rule under the trained rows."""
        totals = self.row_totals()
        header = [""] + [("outlier" if c == OUTLIER else c) for c in self.columns]
        body = []
        for i, row in enumerate(self.rows):
            cells = [f"{c}/{totals[i]}" if c else "0" for c in self.counts[i]]
            body.append([row] + cells)
        widths = [max(len(r[j]) for r in [header] + body) for j in range(len(header))]

        def fmt(r):
            return "  ".join(cell.rjust(w) if j else cell.ljust(w) for j, (cell, w) in enumerate(zip(r, widths)))

        rule = "-" * len(fmt(header))
        lines = [fmt(header), rule]
        n_trained = sum(r in self.trained for r in self.rows)
        for i, r in enumerate(body):
            if i == n_trained and n_trained < len(body):
                lines.append(rule)
            lines.append(fmt(r))
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["true_label", *self.columns])
            for row, counts in zip(self.rows, self.counts):
                writer.writerow([row, *map(int, counts)])


def instance_prediction(
    predictions: Sequence[SegmentPrediction], a: int, b: int, trained_labels: Sequence[str]
) -> str:
    """Label covering the largest share of frames ``[a, b)``; uncovered frames count as OUTLIER.

    Ties go to the earliest of ``trained_labels``, with OUTLIER last.
    """
    cover: Counter = Counter()
    for p in predictions:
        overlap = min(b, p.end_frame) - max(a, p.start_frame)
        if overlap > 0:
            cover[p.label] += overlap
    cover[OUTLIER] += (b - a) - sum(cover.values())
    order = list(trained_labels) + [OUTLIER]
    return max(order, key=lambda lab: (cover[lab], -order.index(lab)))


def match_and_score(
    predictions: Sequence[SegmentPrediction],
    truth: Sequence[LabeledSegment],
    trained_labels: Sequence[str],
    frame_hop: int,
    window_len: int,
) -> ConfusionMatrix:
    """Count each true note once, under its majority-coverage predicted label.

    Rows list ``trained_labels`` first, then the remaining true labels sorted.
    """
    if not truth:
        raise InputError("no ground-truth segments")
    check_non_overlapping(truth)
    trained = list(dict.fromkeys(trained_labels))
    unknown = {p.label for p in predictions} - set(trained) - {OUTLIER}
    if unknown:
        raise InputError(f"predictions use labels not among the trained classes: {sorted(unknown)}")
    others = sorted({s.label for s in truth} - set(trained))
    rows = tuple(trained + others)
    columns = tuple(trained + [OUTLIER])
    counts = np.zeros((len(rows), len(columns)), dtype=int)
    for seg in truth:
        a, b = seg.frame_range(window_len, frame_hop)
        if b <= a:
            # note shorter than a window: use every frame touching it
            a = max(0, -(-(seg.start_sample - window_len + 1) // frame_hop))
            b = max(a + 1, (seg.end_sample - 1) // frame_hop + 1)
        label = instance_prediction(predictions, a, b, trained)
        counts[rows.index(seg.label), columns.index(label)] += 1
    return ConfusionMatrix(rows, columns, counts)


PREDICTION_HEADER = ["start_frame", "end_frame", "label", "mean_score"]


def write_predictions(path, predictions: Sequence[SegmentPrediction]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTION_HEADER)
        for p in predictions:
            writer.writerow([p.start_frame, p.end_frame, p.label, repr(p.mean_score)])


def read_predictions(path) -> list[SegmentPrediction]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != PREDICTION_HEADER:
            raise InputError(f"{path}: expected header {','.join(PREDICTION_HEADER)}, got {header}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out.append(SegmentPrediction(int(row[0]), int(row[1]), row[2], float(row[3])))
            except (ValueError, IndexError, ContractError) as exc:
                raise InputError(f"{path}:{lineno}: bad prediction row {row}") from exc
    return out
