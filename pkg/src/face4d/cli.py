"""Command-line entry points.

Subcommands: gen-model, gen-sequence, fit, serve, stats. Exit codes: 0 on
success, 1 on usage errors, 2 on data/format errors (missing or corrupt
files, invalid configurations).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import Face4DError
from .fitting import FitConfig
from .model import synthesize_model
from .modelio import load_model, save_model
from .pipeline import fit_sequence
from .registry import load_registry
from .reports import read_report, write_report
from .sequences import (
    SequenceGenConfig,
    generate_sequence,
    read_sequence,
    write_ground_truth,
    write_sequence,
)

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _load_model_file(path: str):
    if not os.path.isfile(path):
        raise Face4DError(f"model file not found: {path}")
    with open(path, "rb") as fh:
        return load_model(fh)


def _load_sequence_file(path: str):
    if not os.path.isfile(path):
        raise Face4DError(f"sequence file not found: {path}")
    with open(path, "rb") as fh:
        return read_sequence(fh)


def _cmd_gen_model(args) -> int:
    model = synthesize_model(
        seed=args.seed, n_vertices=args.vertices, k_id=args.kid,
        k_exp=args.kexp, n_landmarks=args.landmarks, model_id=args.model_id)
    with open(args.out, "wb") as fh:
        save_model(model, fh)
    print(f"wrote {args.out}: N={model.n_vertices} K_id={model.k_id} "
          f"K_exp={model.k_exp} L={model.n_landmarks} T={model.triangles.shape[0]}")
    return 0


def _cmd_gen_sequence(args) -> int:
    model = _load_model_file(args.model)
    config = SequenceGenConfig(
        seed=args.seed, n_frames=args.frames, yaw_deg=args.yaw,
        pitch_deg=args.pitch, roll_deg=args.roll, translation_px=args.translation,
        scale_range=(args.scale_min, args.scale_max), noise_sigma_px=args.noise,
        occlusion_rate=args.occlusion, fps=args.fps,
        image_size=(args.width, args.height), expression_cycles=args.expression_cycles)
    sequence, truth = generate_sequence(model, config)
    with open(args.out, "wb") as fh:
        write_sequence(sequence, fh)
    print(f"wrote {args.out}: {len(sequence)} frames, L={sequence.n_landmarks}")
    if args.truth_out:
        with open(args.truth_out, "wb") as fh:
            write_ground_truth(truth, fh)
        print(f"wrote {args.truth_out}")
    return 0


def _cmd_fit(args) -> int:
    model = _load_model_file(args.model)
    sequence = _load_sequence_file(args.sequence)
    config = FitConfig(lambda_id=args.lam, lambda_exp=args.lam, n_alternations=args.alternations)
    result = fit_sequence(model, sequence, config, smoothing_enabled=not args.no_smoothing)
    with open(args.out, "wb") as fh:
        write_report(result, fh)
    print(f"wrote {args.out}: {len(result.results)} fitted, {len(result.dropped)} dropped")
    return 0


def resolve_port(flag_value: int | None) -> int:
    """Flag wins over the M4D_PORT environment variable, which wins over 7464."""
    if flag_value is not None:
        return flag_value
    env = os.environ.get("M4D_PORT", "").strip()
    if not env:
        return 7464
    try:
        return int(env)
    except ValueError:
        raise Face4DError(f"M4D_PORT is not an integer: {env!r}") from None


def _cmd_serve(args) -> int:
    from .server import serve  # defer websockets import

    registry = load_registry(args.model_dir)
    sequence = _load_sequence_file(args.sequence)
    port = resolve_port(args.port)
    config = FitConfig(lambda_id=args.lam, lambda_exp=args.lam)
    print(f"serving on port {port} (models: {', '.join(registry.ids())}); Ctrl-C to stop")
    try:
        serve(registry, sequence, port=port, fit_config=config)
    except KeyboardInterrupt:
        print("stopped")
    return 0


def _cmd_stats(args) -> int:
    if not os.path.isfile(args.report):
        raise Face4DError(f"report file not found: {args.report}")
    with open(args.report, "rb") as fh:
        _, summary = read_report(fh)
    print(f"frames:            {summary['frames']} "
          f"({summary['fitted']} fitted, {summary['dropped']} dropped)")
    for key, label in (("mean_rmse", "mean RMSE (px)"), ("p95_rmse", "p95 RMSE (px)"),
                       ("jitter_raw", "jitter (raw)"), ("jitter_smoothed", "jitter (smoothed)")):
        value = summary.get(key)
        print(f"{label + ':':<19}{value if value is not None else 'n/a'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="face4d", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="enable info logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-model", help="synthesize a morphable model file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--vertices", type=int, default=2000)
    p.add_argument("--kid", type=int, default=40, help="identity components")
    p.add_argument("--kexp", type=int, default=20, help="expression components")
    p.add_argument("--landmarks", type=int, default=68)
    p.add_argument("--model-id", default="global")
    p.add_argument("--out", required=True, help="output .m4dm path")
    p.set_defaults(func=_cmd_gen_model)

    p = sub.add_parser("gen-sequence", help="generate a synthetic landmark sequence")
    p.add_argument("--model", required=True, help=".m4dm model path")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--frames", type=int, default=300)
    p.add_argument("--yaw", type=float, default=30.0, help="yaw amplitude, degrees")
    p.add_argument("--pitch", type=float, default=0.0)
    p.add_argument("--roll", type=float, default=0.0)
    p.add_argument("--translation", type=float, default=0.0, help="translation amplitude, px")
    p.add_argument("--scale-min", type=float, default=1.5)
    p.add_argument("--scale-max", type=float, default=1.5)
    p.add_argument("--noise", type=float, default=0.0, help="pixel noise sigma")
    p.add_argument("--occlusion", type=float, default=0.0, help="per-landmark occlusion rate")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--expression-cycles", type=float, default=2.0)
    p.add_argument("--out", required=True, help="output .lmk.jsonl path")
    p.add_argument("--truth-out", default=None, help="optional ground-truth JSON path")
    p.set_defaults(func=_cmd_gen_sequence)

    p = sub.add_parser("fit", help="fit a sequence and write a report")
    p.add_argument("--model", required=True)
    p.add_argument("--sequence", required=True)
    p.add_argument("--out", required=True, help="output .fit.jsonl path")
    p.add_argument("--lambda", dest="lam", type=float, default=0.05,
                   help="regularization weight for both identity and expression")
    p.add_argument("--alternations", type=int, default=3)
    p.add_argument("--no-smoothing", action="store_true")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("serve", help="stream a fitted sequence to viewers")
    p.add_argument("--model-dir", required=True, help="directory of .m4dm files")
    p.add_argument("--sequence", required=True)
    p.add_argument("--port", type=int, default=None,
                   help=f"listen port (default: $M4D_PORT or {7464})")
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("stats", help="print a report's summary line")
    p.add_argument("report", help=".fit.jsonl path")
    p.set_defaults(func=_cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except Face4DError as exc:
        print(f"face4d: error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except OSError as exc:
        print(f"face4d: error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
