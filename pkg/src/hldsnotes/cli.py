"""Command-line interface.

    hldsnotes synth SCRIPT OUT_WAV OUT_LABELS
    hldsnotes features WAV OUT_CSV
    hldsnotes train WAV LABELS OUT_MODEL
    hldsnotes classify MODEL WAV OUT_CSV
    hldsnotes eval PREDICTIONS LABELS MODEL
    hldsnotes zdump MODEL WAV OUT_CSV

Exit status is 0 on success, 2 for invalid configuration or synthesis
scripts, 1 for any other failure. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

from . import pipeline
from .classify import read_labels, save_model, load_model, write_labels
from .errors import ConfigurationError, HldsError, InputError
from .frames import read_wav, write_wav
from .pipeline import RunConfig
from .segments import read_predictions, write_predictions
from .synth import ClipScript, NoteSpec, Silence, note_frequency, render, tone_label

log = logging.getLogger("hldsnotes")

# config keys that may be overridden from the command line
_OVERRIDES = {
    "layer_dims": "layer_dims",
    "window_len": "window_len",
    "overlap": "overlap",
    "innovation_scale": "innovation_scale",
    "obs_noise": "obs_noise_override",
    "initial_cov_scale": "initial_cov_scale",
    "threshold": "threshold",
    "min_duration": "min_duration",
    "burn_in": "burn_in",
}


def _dims(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _user_settings(args) -> dict:
    """Config file values overlaid with explicit flags (flags win)."""
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{args.config}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"{args.config}: config must be a JSON object")
    for flag, key in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[key] = value
    return data


def _run_config(args) -> RunConfig:
    return RunConfig.from_dict(_user_settings(args))


def _check_against_model(args, trained) -> RunConfig:
    """Post-processing knobs from config/flags; model-shape settings must match the model."""
    data = _user_settings(args)
    cfg = trained.config
    echo = {
        "layer_dims": list(cfg.layer_dims),
        "window_len": cfg.window_len,
        "overlap": cfg.overlap,
        "innovation_scale": cfg.innovation_scale,
        "obs_noise_override": cfg.obs_noise_override,
        "initial_cov_scale": cfg.initial_cov_scale,
    }
    for key, model_value in echo.items():
        if key not in data:
            continue
        value = list(data[key]) if key == "layer_dims" else data[key]
        if value != model_value:
            raise InputError(f"{key} mismatch: config has {value}, model was trained with {model_value}")
    post = {k: data[k] for k in ("threshold", "min_duration", "burn_in") if k in data}
    return RunConfig(cfg, **post)


def _note_from_json(ev: dict) -> NoteSpec:
    ev = dict(ev)
    pitch = ev.pop("pitch", None)
    if pitch is not None:
        if "fundamental_hz" in ev:
            raise ConfigurationError("give either pitch or fundamental_hz, not both")
        ev["fundamental_hz"] = note_frequency(pitch)
        ev.setdefault("label", pitch)
    if "fundamental_hz" not in ev or "duration_s" not in ev:
        raise ConfigurationError(f"note event needs fundamental_hz (or pitch) and duration_s: {ev}")
    ev.setdefault("label", tone_label(ev["fundamental_hz"]))
    try:
        return NoteSpec(**ev)
    except TypeError as exc:
        raise ConfigurationError(f"bad note event: {exc}") from exc


def load_script(path, seed: int | None = None) -> ClipScript:
    """Parse a JSON synthesis script.

    ``{"sample_rate": 8000, "noise_sigma": 0.0, "seed": 0, "events": [...]}``
    where each event is ``{"silence": seconds}`` or a note with
    ``fundamental_hz`` or ``pitch`` (e.g. ``"A4"``), ``duration_s`` and
    optional ``num_harmonics``, ``harmonic_decay``, ``amplitude``, ``label``.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: script must be a JSON object")
    unknown = set(data) - {"sample_rate", "noise_sigma", "seed", "events"}
    if unknown:
        raise ConfigurationError(f"{path}: unknown script keys {sorted(unknown)}")
    events = []
    for ev in data.get("events", []):
        if not isinstance(ev, dict):
            raise ConfigurationError(f"{path}: event must be an object, got {ev!r}")
        if "silence" in ev:
            events.append(Silence(float(ev["silence"])))
        else:
            events.append(_note_from_json(ev))
    return ClipScript(
        events=tuple(events),
        sample_rate=int(data.get("sample_rate", 8000)),
        noise_sigma=float(data.get("noise_sigma", 0.0)),
        seed=int(seed if seed is not None else data.get("seed", 0)),
    )


def cmd_synth(args) -> int:
    clip, labels = render(load_script(args.script, args.seed))
    write_wav(args.out_wav, clip)
    write_labels(args.out_labels, labels)
    log.info("wrote %d samples and %d labels", clip.samples.size, len(labels))
    return 0


def cmd_features(args) -> int:
    cfg = _run_config(args).hlds
    series = pipeline.features(read_wav(args.wav), cfg)
    header = [f"c{i}" for i in range(cfg.window_len)]
    _write_csv(args.out_csv, header, ([repr(float(v)) for v in row] for row in series.frames))
    log.info("wrote %d frames", len(series))
    return 0


def cmd_train(args) -> int:
    config = _run_config(args)
    labels = read_labels(args.labels)
    if not labels:
        raise InputError(f"{args.labels}: no labelled segments")
    trained = pipeline.fit(read_wav(args.wav), labels, config)
    save_model(args.out_model, trained)
    for c in trained.classes:
        print(f"{c.label}\t{c.sample_count}")
    return 0


def cmd_classify(args) -> int:
    trained = load_model(args.model)
    config = _check_against_model(args, trained)
    preds = pipeline.predict(trained, read_wav(args.wav), config.threshold, config.min_duration)
    write_predictions(args.out_csv, preds)
    log.info("wrote %d segments", len(preds))
    return 0


def cmd_eval(args) -> int:
    trained = load_model(args.model)
    matrix = pipeline.evaluate(trained, read_predictions(args.predictions), read_labels(args.labels))
    if args.collapse:
        matrix = matrix.collapse_untrained()
    print(matrix.to_text())
    print(f"instance accuracy: {matrix.correct()}/{int(matrix.counts.sum())}")
    if args.csv:
        matrix.write_csv(args.csv)
    return 0


def cmd_zdump(args) -> int:
    trained = load_model(args.model)
    _check_against_model(args, trained)
    z = pipeline.z_trajectory(read_wav(args.wav), trained.config)
    header = ["frame"] + [f"z_{i + 1}" for i in range(z.shape[1])]
    _write_csv(args.out_csv, header, ([t] + [repr(float(v)) for v in row] for t, row in enumerate(z)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="random seed (synth scripts)")
    common.add_argument("--verbose", "-v", action="store_true")
    model_flags = argparse.ArgumentParser(add_help=False)
    model_flags.add_argument("--layer-dims", dest="layer_dims", type=_dims, help="bottom-first, e.g. 96,24,12,2")
    model_flags.add_argument("--window-len", dest="window_len", type=int)
    model_flags.add_argument("--overlap", type=int)
    model_flags.add_argument("--innovation-scale", dest="innovation_scale", type=float)
    model_flags.add_argument("--obs-noise", dest="obs_noise", type=float)
    model_flags.add_argument("--initial-cov-scale", dest="initial_cov_scale", type=float)
    post_flags = argparse.ArgumentParser(add_help=False)
    post_flags.add_argument("--threshold", type=float, help="Mahalanobis rejection distance")
    post_flags.add_argument("--min-duration", dest="min_duration", type=int, help="frames")
    post_flags.add_argument("--burn-in", dest="burn_in", type=int, help="frames")

    parser = argparse.ArgumentParser(prog="hldsnotes", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="render a synthesis script")
    p.add_argument("script")
    p.add_argument("out_wav")
    p.add_argument("out_labels")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", parents=[common, model_flags], help="export |DCT| frames as CSV")
    p.add_argument("wav")
    p.add_argument("out_csv")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", parents=[common, model_flags, post_flags], help="fit class models")
    p.add_argument("wav")
    p.add_argument("labels")
    p.add_argument("out_model")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", parents=[common, model_flags, post_flags], help="segment and label a clip")
    p.add_argument("model")
    p.add_argument("wav")
    p.add_argument("out_csv")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("eval", parents=[common], help="confusion matrix against ground truth")
    p.add_argument("predictions")
    p.add_argument("labels")
    p.add_argument("model")
    p.add_argument("--csv", help="also write the matrix as CSV")
    p.add_argument("--collapse", action="store_true", help="pool untrained labels into one row")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("zdump", parents=[common, model_flags], help="export the top-layer trajectory")
    p.add_argument("model")
    p.add_argument("wav")
    p.add_argument("out_csv")
    p.set_defaults(func=cmd_zdump)
    return parser


def _log_warning(message, category, filename, lineno, file=None, line=None):
    log.warning("%s", message)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            warnings.showwarning = _log_warning
            return args.func(args)
    except ConfigurationError as exc:
        log.error("%s", exc)
        return 2
    except (HldsError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
