"""Fit report emission (".fit.jsonl"): one JSON object per frame plus a summary.

Frame lines carry the timestamp, pose (rho, row-major R, t2), coefficients,
reprojection RMSE and iteration count; dropped frames carry the drop reason
instead. The trailing summary line reports mean / 95th-percentile RMSE and the
jitter metric before and after smoothing.
"""

from __future__ import annotations

import json
from typing import BinaryIO

import numpy as np

from .errors import EmptyInput, ParseError
from .pipeline import SequenceFitResult
from .smoothing import jitter_metric

__all__ = ["write_report", "read_report"]


def _frame_line(fit) -> dict:
    return {
        "t": fit.timestamp_ms,
        "rho": fit.pose.scale,
        "R": fit.pose.rotation.reshape(-1).tolist(),
        "t2": fit.pose.translation.tolist(),
        "p": fit.coeffs.identity.tolist(),
        "q": fit.coeffs.expression.tolist(),
        "rmse": fit.reprojection_rmse,
        "n_iterations": fit.n_iterations,
        "valid_landmarks": fit.valid_landmarks,
    }


def write_report(seq_fit: SequenceFitResult, sink: BinaryIO) -> None:
    """Write per-frame lines (fits and drops, in timestamp order) plus a summary."""
    if not seq_fit.results and not seq_fit.dropped:
        raise EmptyInput("nothing to report")
    lines = [(fit.timestamp_ms, _frame_line(fit)) for fit in seq_fit.results]
    lines += [(d.timestamp_ms, {"t": d.timestamp_ms, "dropped": True, "reason": d.reason})
              for d in seq_fit.dropped]
    lines.sort(key=lambda pair: pair[0])
    for _, obj in lines:
        sink.write((json.dumps(obj) + "\n").encode("utf-8"))

    rmses = np.array([fit.reprojection_rmse for fit in seq_fit.results])
    summary = {
        "frames": len(seq_fit.results) + len(seq_fit.dropped),
        "fitted": len(seq_fit.results),
        "dropped": len(seq_fit.dropped),
        "mean_rmse": float(rmses.mean()) if rmses.size else None,
        "p95_rmse": float(np.percentile(rmses, 95)) if rmses.size else None,
        "jitter_raw": None,
        "jitter_smoothed": None,
        "smoothing_enabled": seq_fit.smoothing_enabled,
    }
    if len(seq_fit.results) >= 2:
        summary["jitter_raw"] = jitter_metric([f.pose for f in seq_fit.raw_results])
        summary["jitter_smoothed"] = jitter_metric([f.pose for f in seq_fit.results])
    sink.write((json.dumps({"summary": summary}) + "\n").encode("utf-8"))


def read_report(source: BinaryIO) -> tuple[list[dict], dict]:
    """Parse a report back into (frame objects, summary dict)."""
    frames: list[dict] = []
    summary: dict | None = None
    for line_no, raw in enumerate(source.read().decode("utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line_no) from None
        if "summary" in obj:
            summary = obj["summary"]
        else:
            frames.append(obj)
    if summary is None:
        raise ParseError("report has no summary line")
    return frames, summary
