"""Run the three-class outlier protocol over the noise sweep and print confusion matrices.

    python scripts/noise_sweep.py --seed 0 [--full]
"""

import argparse
import time

from hldsnotes.pipeline import run_protocol
from hldsnotes.synth import SIGMA_SWEEP


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--full", action="store_true", help="one row per outlier note")
    args = parser.parse_args()

    summary = []
    for sigma in SIGMA_SWEEP:
        start = time.perf_counter()
        matrix = run_protocol(sigma, args.seed)
        elapsed = time.perf_counter() - start
        shown = matrix if args.full else matrix.collapse_untrained()
        print(f"sigma = {sigma:.4f}  ({elapsed:.1f} s)")
        print(shown.to_text())
        print()
        summary.append((sigma, matrix.correct(), int(matrix.counts.sum())))

    print("sigma     correct")
    for sigma, correct, total in summary:
        print(f"{sigma:.4f}    {correct}/{total}")


if __name__ == "__main__":
    main()
