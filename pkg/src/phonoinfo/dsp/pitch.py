"""Autocorrelation pitch tracking."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer, AudioError

VOICING_THRESHOLD = 0.45
SILENCE_THRESHOLD = 0.03
PERIODS_PER_WINDOW = 3.0


@dataclass(frozen=True)
class PitchTrack:
    """Frame-wise f0 in Hz; unvoiced frames hold NaN."""

    times: np.ndarray
    f0: np.ndarray
    strength: np.ndarray
    time_step: float
    floor: float
    ceiling: float
    params: dict = field(default_factory=dict, compare=False)

    @property
    def voiced(self) -> np.ndarray:
        return np.isfinite(self.f0)

    def __len__(self) -> int:
        return len(self.times)


def frame_times(n_samples: int, sample_rate: float, window: float, time_step: float) -> np.ndarray:
    """Centres of analysis frames that fit entirely inside the signal, centred as a block."""
    duration = n_samples / sample_rate
    if window > duration:
        return np.empty(0)
    n = int(np.floor((duration - window) / time_step + 1e-9)) + 1
    first = 0.5 * (duration - (n - 1) * time_step)
    return first + time_step * np.arange(n)


def _frames(x: np.ndarray, fs: float, times: np.ndarray, n_win: int) -> np.ndarray:
    starts = np.round(times * fs - 0.5 * n_win).astype(np.int64)
    starts = np.clip(starts, 0, len(x) - n_win)
    idx = starts[:, None] + np.arange(n_win)[None, :]
    return x[idx]


def _local_maxima(r: np.ndarray, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """Parabolically interpolated local maxima of *r* at integer lags lo..hi."""
    lo = max(lo, 1)
    hi = min(hi, len(r) - 2)
    if hi < lo:
        return np.empty(0), np.empty(0)
    i = np.arange(lo, hi + 1)
    mid, left, right = r[i], r[i - 1], r[i + 1]
    peak = (mid > left) & (mid >= right)
    i, mid, left, right = i[peak], mid[peak], left[peak], right[peak]
    denom = left - 2.0 * mid + right
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = np.where(denom < 0, 0.5 * (left - right) / denom, 0.0)
    value = mid - 0.25 * (left - right) * delta
    return i + delta, value


def extract_pitch(
    audio: AudioBuffer,
    time_step: float = 0.01,
    floor: float = 75.0,
    ceiling: float = 300.0,
    voicing_threshold: float = VOICING_THRESHOLD,
    silence_threshold: float = SILENCE_THRESHOLD,
) -> PitchTrack:
    """Track f0 with the normalized autocorrelation method.

    Each frame spans ``3 / floor`` seconds under a Hann window. Its
    autocorrelation is divided by that of the window, and the strongest
    interpolated peak with a lag in ``[1/ceiling, 1/floor]`` is the
    candidate period. A frame is voiced when the peak beats the unvoiced
    strength ``vt + max(0, 2 - (local/global) / (st / (1 + vt)))``, which
    also rejects frames far quieter than the loudest part of the signal.

    A frame is also unvoiced when its periodicity sits above *ceiling*:
    if an equally strong peak appears at a lag shorter than ``1/ceiling``
    and the candidate lag is a multiple of it, the in-range peak is only a
    subharmonic.

    Parameters
    ----------
    audio : AudioBuffer
    time_step : float
        Frame hop in seconds.
    floor, ceiling : float
        Pitch search range in Hz.
    voicing_threshold, silence_threshold : float
        Praat-style voicing decision constants.
    """
    fs = audio.sample_rate
    if not 0 < floor < ceiling < audio.nyquist:
        raise AudioError(f"need 0 < floor ({floor}) < ceiling ({ceiling}) < Nyquist ({audio.nyquist})")
    window = PERIODS_PER_WINDOW / floor
    n_win = int(round(window * fs))
    x = audio.samples
    if len(x) < n_win:
        raise AudioError(f"audio of {audio.duration:.4f} s is shorter than one {window:.4f} s analysis window")

    times = frame_times(len(x), fs, n_win / fs, time_step)
    frames = _frames(x, fs, times, n_win)
    frames = frames - frames.mean(axis=1, keepdims=True)
    local_peak = np.abs(frames).max(axis=1)
    global_peak = np.abs(x - x.mean()).max()

    hann = np.hanning(n_win + 2)[1:-1]
    max_lag = int(np.ceil(fs / floor)) + 1
    nfft = 1 << int(np.ceil(np.log2(n_win + max_lag + 1)))
    win_ac = np.fft.irfft(np.abs(np.fft.rfft(hann, nfft)) ** 2, nfft)[: max_lag + 2]
    win_ac /= win_ac[0]

    spec = np.fft.rfft(frames * hann, nfft, axis=1)
    ac = np.fft.irfft(np.abs(spec) ** 2, nfft, axis=1)[:, : max_lag + 2]

    min_lag = fs / ceiling
    f0 = np.full(len(times), np.nan)
    strength = np.zeros(len(times))
    for j in range(len(times)):
        if ac[j, 0] <= 0 or global_peak == 0:
            continue
        r = ac[j] / ac[j, 0] / win_ac
        lags, vals = _local_maxima(r, int(np.floor(min_lag)), max_lag)
        keep = (lags >= min_lag) & (lags <= fs / floor)
        if not keep.any():
            continue
        lags_in, vals_in = lags[keep], vals[keep]
        best = int(np.argmax(vals_in))
        lag, val = lags_in[best], min(vals_in[best], 1.0)
        strength[j] = val

        # periodicity above the ceiling shows up as a strong short-lag peak
        short_lags, short_vals = _local_maxima(r, 2, int(np.floor(min_lag)))
        short = (short_lags < min_lag) & (short_vals >= voicing_threshold) & (short_vals >= val - 0.05)
        if short.any():
            ratios = lag / short_lags[short]
            if np.any((ratios > 1.5) & (np.abs(ratios - np.round(ratios)) < 0.1)):
                continue

        unvoiced = voicing_threshold + max(
            0.0, 2.0 - (local_peak[j] / global_peak) / (silence_threshold / (1.0 + voicing_threshold))
        )
        if val > unvoiced:
            freq = fs / lag
            if floor <= freq <= ceiling:
                f0[j] = freq

    return PitchTrack(
        times, f0, strength, time_step, floor, ceiling,
        params={"voicing_threshold": voicing_threshold, "silence_threshold": silence_threshold},
    )
