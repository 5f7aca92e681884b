from __future__ import annotations

from face4d import FitConfig, SequenceGenConfig, fit_sequence, generate_sequence
from face4d.smoothing import jitter_metric


def test_dropped_frames_recorded_with_index_and_reason(model_small):
    sequence, _ = generate_sequence(
        model_small, SequenceGenConfig(seed=61, n_frames=50, occlusion_rate=0.9))
    result = fit_sequence(model_small, sequence)
    assert len(result.results) + len(result.dropped) == 50
    assert len(result.results) == len(result.raw_results)
    for drop in result.dropped:
        assert "TooFewLandmarks" in drop.reason
        assert sequence.frames[drop.index].timestamp_ms == drop.timestamp_ms


def test_smoothing_disabled_passes_raw_fits_through(model_small):
    sequence, _ = generate_sequence(
        model_small, SequenceGenConfig(seed=62, n_frames=10, noise_sigma_px=1.0))
    result = fit_sequence(model_small, sequence, smoothing_enabled=False)
    assert result.smoothing_enabled is False
    for emitted, raw in zip(result.results, result.raw_results):
        assert emitted is raw


def test_smoothing_reduces_jitter_on_noisy_sequence(model_small):
    sequence, _ = generate_sequence(
        model_small, SequenceGenConfig(seed=63, n_frames=120, noise_sigma_px=1.5))
    result = fit_sequence(model_small, sequence, FitConfig(lambda_id=1e-8, lambda_exp=1e-8))
    raw = jitter_metric([f.pose for f in result.raw_results])
    smoothed = jitter_metric([f.pose for f in result.results])
    assert smoothed < raw


def test_timestamps_carried_through(model_small):
    sequence, _ = generate_sequence(model_small, SequenceGenConfig(seed=64, n_frames=6))
    result = fit_sequence(model_small, sequence)
    assert [f.timestamp_ms for f in result.results] == \
        [f.timestamp_ms for f in sequence.frames]
