"""Write the three-class protocol clips (WAV + label CSV) for use with the CLI.

    python scripts/make_protocol_clips.py OUT_DIR --sigma 0 --seed 0
"""

import argparse
from pathlib import Path

from hldsnotes.classify import write_labels
from hldsnotes.frames import write_wav
from hldsnotes.synth import paper5_protocol


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--sigma", type=float, default=0.0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    (train_clip, train_labels), (test_clip, test_labels) = paper5_protocol(args.sigma, args.seed)
    for name, clip, labels in [("train", train_clip, train_labels), ("test", test_clip, test_labels)]:
        write_wav(args.out_dir / f"{name}.wav", clip)
        write_labels(args.out_dir / f"{name}_labels.csv", labels)
        print(f"{name}: {clip.duration:.1f} s, {len(labels)} notes")


if __name__ == "__main__":
    main()
