"""Sweep the per-acquisition cost across operating points.

Times pipeline_step at several (channels, endmembers, harmonics) settings
and reports head/tail medians over the stream, checking that the cost does
not grow with t (the state update is O(1) in the number of acquired
spectra; only the optional batch abundance re-estimate is O(t), and it is
disabled here).

Usage:
    python3 scripts/bench_step_cost.py
    python3 scripts/bench_step_cost.py --reps 1000 --out steps.csv
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from kfunmix.pipeline import PipelineConfig, init_pipeline, pipeline_step
from kfunmix.synthdata import SynthConfig, generate_dataset

POINTS = (
    # n_channels, n_endmembers, n_harmonics
    (100, 3, 8),
    (200, 3, 15),
    (400, 5, 16),
)


def time_point(n_channels: int, n_endmembers: int, n_harmonics: int,
               n_init: int, reps: int, seed: int) -> np.ndarray:
    data = generate_dataset(SynthConfig(
        n_spectra=n_init + reps,
        n_channels=n_channels,
        n_endmembers=n_endmembers,
        snr_db=20.0,
        seed=seed,
    ))
    config = PipelineConfig(
        n_endmembers=n_endmembers,
        n_init=n_init,
        n_harmonics=n_harmonics,
        seed=seed,
    )
    rows = data.spectra.values
    state = init_pipeline(rows[:n_init], config)
    times = []
    for i in range(n_init, rows.shape[0]):
        state, wall_ms = pipeline_step(state, rows[i])
        times.append(wall_ms)
    return np.asarray(times)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=500, help="steps per point")
    parser.add_argument("--n-init", type=int, default=30)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="optional per-step CSV")
    args = parser.parse_args(argv)

    print("L,K,M,steps,median_ms,p95_ms,head_ms,tail_ms,tail_head_ratio")
    all_rows = ["point,step,wall_ms"]
    for n_channels, n_endmembers, n_harmonics in POINTS:
        arr = time_point(
            n_channels, n_endmembers, n_harmonics,
            args.n_init, args.reps, args.seed,
        )
        quarter = max(1, arr.size // 4)
        head = float(np.median(arr[:quarter]))
        tail = float(np.median(arr[-quarter:]))
        print(
            f"{n_channels},{n_endmembers},{n_harmonics},{arr.size},"
            f"{np.median(arr):.4f},{np.percentile(arr, 95):.4f},"
            f"{head:.4f},{tail:.4f},{tail / head:.3f}"
        )
        label = f"L{n_channels}K{n_endmembers}M{n_harmonics}"
        all_rows.extend(
            f"{label},{i},{ms:.6f}" for i, ms in enumerate(arr, start=1)
        )

    if args.out is not None:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(all_rows) + "\n")
        print(f"wrote per-step times to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
