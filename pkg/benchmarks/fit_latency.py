"""Per-stage latency of the fitting pipeline at desk scale.

Run: python3 benchmarks/fit_latency.py [--frames 300] [--vertices 2000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from face4d import (
    FitConfig,
    SequenceGenConfig,
    estimate_pose,
    fit_frame,
    generate_sequence,
    reconstruct_mesh,
    solve_coefficients,
    synthesize_model,
)


def timed(fn, repeats):
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return 1000.0 * np.median(samples), 1000.0 * np.percentile(samples, 95)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=300)
    parser.add_argument("--vertices", type=int, default=2000)
    args = parser.parse_args()

    model = synthesize_model(7, args.vertices, 40, 20, 68)
    sequence, truth = generate_sequence(
        model, SequenceGenConfig(seed=70, n_frames=args.frames, yaw_deg=30.0))
    config = FitConfig(lambda_id=1e-8, lambda_exp=1e-8)
    frame = sequence.frames[len(sequence) // 2]
    pose = truth.poses[len(sequence) // 2]
    coeffs = truth.coefficients[len(sequence) // 2]
    mean_lm = model.landmark_mean()

    print(f"model: N={model.n_vertices} K_id={model.k_id} K_exp={model.k_exp} "
          f"L={model.n_landmarks}; {args.frames} frames\n")
    print(f"{'stage':<28}{'median ms':>12}{'p95 ms':>12}")
    for name, fn in [
        ("estimate_pose", lambda: estimate_pose(frame, mean_lm, config)),
        ("solve_coefficients", lambda: solve_coefficients(frame, pose, model, config)),
        ("fit_frame (3 alternations)", lambda: fit_frame(frame, model, config)),
        ("reconstruct_mesh (full N)", lambda: reconstruct_mesh(model, coeffs)),
    ]:
        median, p95 = timed(fn, 200)
        print(f"{name:<28}{median:>12.3f}{p95:>12.3f}")

    start = time.perf_counter()
    for f in sequence.frames:
        fit_frame(f, model, config)
    total = time.perf_counter() - start
    print(f"\nfull sequence: {total:.2f} s "
          f"({1000.0 * total / args.frames:.2f} ms/frame, "
          f"{args.frames / total:.0f} fps)")


if __name__ == "__main__":
    main()
