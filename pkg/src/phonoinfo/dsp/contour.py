"""Nine-point contour sampling and per-speaker normalization."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .formants import FormantTrack
from .pitch import PitchTrack

logger = logging.getLogger(__name__)

N_POINTS = 9


class NormalizationError(ValueError):
    pass


@dataclass(frozen=True)
class ContourSample:
    """Values of each measured variable at relative positions 0.1 .. 0.9."""

    times: np.ndarray
    values: dict

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def missing(self, name: str) -> np.ndarray:
        return ~np.isfinite(self.values[name])

    @property
    def variables(self) -> list[str]:
        return list(self.values)


def contour_times(t0: float, t1: float) -> np.ndarray:
    k = np.arange(1, N_POINTS + 1)
    return t0 + k * (t1 - t0) / (N_POINTS + 1)


def _track_columns(track) -> dict[str, np.ndarray]:
    if isinstance(track, PitchTrack):
        return {"f0": track.f0}
    if isinstance(track, FormantTrack):
        return {f"F{k + 1}": track.freqs[:, k] for k in range(track.max_formants)}
    raise TypeError(f"unsupported track type {type(track).__name__}")


def sample_contour_nine(track: PitchTrack | FormantTrack, t0: float, t1: float) -> ContourSample:
    """Sample *track* at ``t0 + k (t1 - t0) / 10`` for k = 1..9.

    Each point takes the nearest frame within half a time step; points with
    no such frame, or whose frame has no value, are NaN. The segment edges
    (k = 0 and k = 10) are never sampled.
    """
    if not t0 < t1:
        raise ValueError(f"t0 {t0} must be < t1 {t1}")
    times = contour_times(t0, t1)
    columns = _track_columns(track)
    out = {name: np.full(N_POINTS, np.nan) for name in columns}
    if t1 - t0 < track.time_step:
        warnings.warn(f"interval [{t0}, {t1}] shorter than one time step; contour left empty", stacklevel=2)
        return ContourSample(times, out)
    frames = np.asarray(track.times)
    if len(frames) == 0:
        return ContourSample(times, out)
    idx = np.clip(np.searchsorted(frames, times), 1, len(frames) - 1)
    left = frames[idx - 1]
    right = frames[idx]
    idx = np.where(np.abs(times - left) <= np.abs(right - times), idx - 1, idx)
    if len(frames) == 1:
        idx = np.zeros(N_POINTS, dtype=int)
    close = np.abs(frames[idx] - times) <= 0.5 * track.time_step + 1e-9
    for name, col in columns.items():
        vals = col[idx]
        out[name] = np.where(close, vals, np.nan)
    return ContourSample(times, out)


def _zscore(values: np.ndarray, what: str) -> np.ndarray:
    x = np.asarray(values, dtype=np.float64)
    ok = np.isfinite(x)
    if ok.sum() < 2:
        raise NormalizationError(f"{what}: need at least 2 values, got {int(ok.sum())}")
    mean = x[ok].mean()
    sd = x[ok].std(ddof=1)
    if not sd > 0:
        raise NormalizationError(f"{what}: zero variance")
    return (x - mean) / sd


def zscore_f0(values: Mapping[str, Sequence[float]]) -> dict[str, np.ndarray]:
    """Per-speaker z-scores (sample standard deviation). NaNs stay NaN."""
    return {spk: _zscore(v, f"speaker {spk!r} f0") for spk, v in values.items()}


def lobanov_normalize(values: Mapping[str, Mapping[str, Sequence[float]]]) -> dict[str, dict[str, np.ndarray]]:
    """Lobanov normalization: z-score per speaker and per formant number.

    *values* maps speaker -> formant name (``"F1"``, ...) -> Hz values.
    """
    return {
        spk: {fmt: _zscore(v, f"speaker {spk!r} {fmt}") for fmt, v in per_formant.items()}
        for spk, per_formant in values.items()
    }
