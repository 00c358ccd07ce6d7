"""Simultaneous note segmentation and classification with a hierarchical
linear dynamical system (HLDS) filtered by a Kalman recursion."""

from .classify import ClassModel, FrameScores, LabeledSegment, TrainedModel, score_frames, train
from .errors import (
    ConfigurationError,
    ContractError,
    HldsError,
    InputError,
    NumericalDegeneracyError,
    TrainingError,
)
from .frames import AudioClip, FrameSeries, clip_features, dct_magnitude, frame_clip, read_wav, write_wav
from .hlds import HldsConfig, JointModel, build_coupling, build_joint_model, extract_z, initial_state, run_filter
from .segments import OUTLIER, ConfusionMatrix, SegmentPrediction, crisp_decisions, match_and_score
from .statespace import FilterState, LinearModel, batch_map_oracle, kalman_step, step_cost
from .synth import ClipScript, NoteSpec, Silence, paper5_protocol, render

__version__ = "0.1.0"
