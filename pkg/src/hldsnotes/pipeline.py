"""End-to-end helpers: audio to features, training, prediction and evaluation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify import DEFAULT_BURN_IN, LabeledSegment, TrainedModel, score_frames, train
from .errors import ConfigurationError
from .frames import AudioClip, FrameSeries, clip_features
from .hlds import HldsConfig, build_joint_model, extract_z, filter_means
from .segments import (
    DEFAULT_MIN_DURATION,
    DEFAULT_THRESHOLD,
    ConfusionMatrix,
    SegmentPrediction,
    crisp_decisions,
    match_and_score,
)
from .synth import ProtocolSettings, paper5_protocol


@dataclass(frozen=True)
class RunConfig:
    """Model shape plus the classifier and post-processing knobs."""

    hlds: HldsConfig = field(default_factory=HldsConfig)
    threshold: float = DEFAULT_THRESHOLD
    min_duration: int = DEFAULT_MIN_DURATION
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        if not self.threshold > 0:
            raise ConfigurationError(f"threshold must be positive, got {self.threshold}")
        if int(self.min_duration) < 1:
            raise ConfigurationError(f"min_duration must be >= 1, got {self.min_duration}")
        if int(self.burn_in) < 0:
            raise ConfigurationError(f"burn_in must be >= 0, got {self.burn_in}")

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        hlds_keys = {f.name for f in fields(HldsConfig)}
        run_keys = {"threshold", "min_duration", "burn_in"}
        unknown = set(data) - hlds_keys - run_keys
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        hlds = {k: v for k, v in data.items() if k in hlds_keys and v is not None}
        if "layer_dims" in hlds:
            hlds["layer_dims"] = tuple(hlds["layer_dims"])
            hlds.setdefault("window_len", hlds["layer_dims"][0])
        if "window_len" in hlds:
            hlds.setdefault("overlap", hlds["window_len"] // 2)
        try:
            cfg = HldsConfig(**hlds)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc
        return cls(cfg, **{k: data[k] for k in run_keys if data.get(k) is not None})

    @classmethod
    def load(cls, path) -> RunConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = asdict(self.hlds)
        out["layer_dims"] = list(out["layer_dims"])
        out.update(threshold=self.threshold, min_duration=self.min_duration, burn_in=self.burn_in)
        return out


def features(clip: AudioClip, config: HldsConfig) -> FrameSeries:
    return clip_features(clip, config.window_len, config.overlap)


def z_trajectory(clip: AudioClip, config: HldsConfig) -> np.ndarray:
    model = build_joint_model(config)
    return extract_z(filter_means(model, features(clip, config).frames), model)


def fit(clip: AudioClip, labels: Sequence[LabeledSegment], config: RunConfig) -> TrainedModel:
    model = build_joint_model(config.hlds)
    classes = train(model, features(clip, config.hlds), labels, config.burn_in)
    return TrainedModel(config.hlds, config.burn_in, tuple(classes))


def predict(
    trained: TrainedModel,
    clip: AudioClip,
    threshold: float = DEFAULT_THRESHOLD,
    min_duration: int = DEFAULT_MIN_DURATION,
) -> list[SegmentPrediction]:
    z = z_trajectory(clip, trained.config)
    return crisp_decisions(score_frames(z, trained.classes), threshold, min_duration)


def evaluate(
    trained: TrainedModel, predictions: Sequence[SegmentPrediction], truth: Sequence[LabeledSegment]
) -> ConfusionMatrix:
    cfg = trained.config
    return match_and_score(predictions, truth, trained.labels, cfg.hop, cfg.window_len)


def run_protocol(
    sigma: float,
    seed: int = 0,
    config: RunConfig | None = None,
    settings: ProtocolSettings | None = None,
) -> ConfusionMatrix:
    """Train on the protocol's training clip and score its test clip."""
    config = config or RunConfig()
    (train_clip, train_labels), (test_clip, test_labels) = paper5_protocol(sigma, seed, settings)
    trained = fit(train_clip, train_labels, config)
    preds = predict(trained, test_clip, config.threshold, config.min_duration)
    return evaluate(trained, preds, test_labels)
