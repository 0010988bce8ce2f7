"""Formant tracking (Burg LPC) and per-speaker formant ceiling search."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .audio import AudioBuffer, AudioError, pre_emphasize, resample
from .lpc import LPCError, burg_lpc, lpc_to_formants
from .pitch import frame_times

logger = logging.getLogger(__name__)

MAX_BANDWIDTH = 700.0
CEILING_GRID = tuple(range(4500, 6501, 50))


@dataclass(frozen=True)
class FormantTrack:
    """Per-frame formants; ``freqs[i, k]`` is F(k+1) of frame i, NaN if absent."""

    times: np.ndarray
    freqs: np.ndarray
    bandwidths: np.ndarray
    time_step: float
    window: float
    max_formants: int
    ceiling: float
    preemphasis_from: float
    valid: np.ndarray = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.valid is None:
            object.__setattr__(self, "valid", np.ones(len(self.times), dtype=bool))

    def __len__(self) -> int:
        return len(self.times)

    def count(self) -> np.ndarray:
        return np.isfinite(self.freqs).sum(axis=1)


def gaussian_window(n: int) -> np.ndarray:
    """Gaussian window reaching zero at its edges (as used by Praat's formant analysis)."""
    i = np.arange(1, n + 1)
    mid = 0.5 * (n + 1)
    edge = np.exp(-12.0)
    return (np.exp(-48.0 * (i - mid) ** 2 / (n + 1) ** 2) - edge) / (1.0 - edge)


def extract_formants(
    audio: AudioBuffer,
    time_step: float = 0.01,
    window: float = 0.025,
    max_formants: int = 5,
    ceiling: float = 5000.0,
    preemph_from: float = 50.0,
    max_bandwidth: float = MAX_BANDWIDTH,
    times: Sequence[float] | None = None,
) -> FormantTrack:
    """Burg formant analysis.

    The signal is resampled to ``2 * ceiling``, pre-emphasized from
    *preemph_from* Hz, and cut into Gaussian-windowed frames. *window* is
    the effective window length: the physical window spans twice that,
    which is how Praat interprets its window-length setting. Each frame
    gets a Burg fit of order ``2 * max_formants``; candidate formants
    broader than *max_bandwidth* are discarded and the lowest
    *max_formants* remain.

    With *times* given, frames are centred on those instants instead of
    the regular grid (used by :func:`optimize_ceiling`).
    """
    if time_step <= 0 or window <= 0 or max_formants < 1 or ceiling <= 0:
        raise AudioError("formant analysis parameters must be positive")
    sig = resample(audio, 2.0 * ceiling)
    sig = pre_emphasize(sig, preemph_from)
    fs = sig.sample_rate
    n_win = int(round(2.0 * window * fs))
    order = 2 * max_formants
    if n_win <= order:
        raise AudioError(f"window of {n_win} samples too short for LPC order {order}")
    x = sig.samples
    if times is None:
        if len(x) < n_win:
            raise AudioError(f"audio of {audio.duration:.4f} s is shorter than one analysis window")
        t = frame_times(len(x), fs, n_win / fs, time_step)
    else:
        t = np.asarray(times, dtype=np.float64)
    win = gaussian_window(n_win)

    freqs = np.full((len(t), max_formants), np.nan)
    bws = np.full((len(t), max_formants), np.nan)
    valid = np.ones(len(t), dtype=bool)
    half = n_win // 2
    for i, ti in enumerate(t):
        c = int(round(ti * fs))
        lo, hi = c - half, c - half + n_win
        seg = np.zeros(n_win)
        a, b = max(lo, 0), min(hi, len(x))
        if b > a:
            seg[a - lo: b - lo] = x[a:b]
        try:
            coeffs = burg_lpc(seg * win, order)
            cands = lpc_to_formants(coeffs, fs)
        except LPCError as err:
            logger.debug("frame at %.4f s invalid: %s", ti, err)
            valid[i] = False
            continue
        cands = [(f, bw) for f, bw in cands if bw <= max_bandwidth and f < ceiling][:max_formants]
        for k, (f, bw) in enumerate(cands):
            freqs[i, k] = f
            bws[i, k] = bw

    return FormantTrack(
        t, freqs, bws, time_step, window, max_formants, float(ceiling), preemph_from, valid,
        params={"max_bandwidth": max_bandwidth, "analysis_rate": fs},
    )


def ceiling_objective(audio: AudioBuffer, vowel_intervals, ceiling: float, **kw) -> float:
    """Sum over vowel categories of var(F1) + var(F2) at interval midpoints.

    Returns ``inf`` when no interval yields both F1 and F2.
    """
    mids = [0.5 * (t0 + t1) for t0, t1, _ in vowel_intervals]
    track = extract_formants(audio, ceiling=ceiling, times=mids, **kw)
    by_label: dict[str, list[tuple[float, float]]] = {}
    for (_, _, label), f in zip(vowel_intervals, track.freqs):
        if np.isfinite(f[0]) and np.isfinite(f[1]):
            by_label.setdefault(label, []).append((f[0], f[1]))
    if not by_label:
        return float("inf")
    total = 0.0
    for vals in by_label.values():
        arr = np.asarray(vals)
        total += float(arr[:, 0].var() + arr[:, 1].var())
    return total


def optimize_ceiling(
    audio: AudioBuffer,
    vowel_intervals: Sequence[tuple[float, float, str]],
    candidates: Sequence[float] = CEILING_GRID,
    initial: float = 5000.0,
    **kw,
) -> float:
    """Pick the formant ceiling that minimizes within-vowel F1/F2 variance.

    Ties go to the candidate closest to *initial*.
    """
    if not vowel_intervals:
        raise ValueError("need at least one vowel interval")
    if len(candidates) == 0:
        raise ValueError("empty ceiling candidate grid")
    scores = [(ceiling_objective(audio, vowel_intervals, c, **kw), c) for c in candidates]
    best = min(s for s, _ in scores)
    if not np.isfinite(best):
        raise ValueError("no vowel interval produced measurable F1 and F2 at any candidate ceiling")
    tied = [c for s, c in scores if s <= best * (1 + 1e-12) + 1e-12]
    return float(min(tied, key=lambda c: (abs(c - initial), c)))
