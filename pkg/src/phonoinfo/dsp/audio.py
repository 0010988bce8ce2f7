"""Audio buffers, WAV input, resampling and pre-emphasis."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.io import wavfile
from scipy.signal import firwin, kaiserord, resample_poly


class AudioError(ValueError):
    pass


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise AudioError("AudioBuffer holds mono samples; downmix first")
        if self.sample_rate <= 0:
            raise AudioError(f"sample rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(x)):
            raise AudioError("audio contains non-finite samples")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def nyquist(self) -> float:
        return 0.5 * self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)

    def segment(self, t0: float, t1: float) -> np.ndarray:
        i0 = max(int(round(t0 * self.sample_rate)), 0)
        i1 = min(int(round(t1 * self.sample_rate)), len(self.samples))
        return self.samples[i0:i1]


def read_wav(path) -> AudioBuffer:
    """Read a RIFF WAV (PCM 8/16/24/32-bit or float), downmixing to mono.

    Integer PCM is scaled to [-1, 1).
    """
    rate, data = wavfile.read(path)
    if data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.integer):
        x = data.astype(np.float64) / float(-np.iinfo(data.dtype).min)
    else:
        x = data.astype(np.float64)
    if x.ndim == 2:
        x = x.mean(axis=1)
    return AudioBuffer(x, float(rate))


def write_wav(path, audio: AudioBuffer, sampwidth: int = 2) -> None:
    x = np.clip(audio.samples, -1.0, 1.0)
    rate = int(round(audio.sample_rate))
    if sampwidth == 2:
        wavfile.write(path, rate, np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16))
    elif sampwidth == 4:
        wavfile.write(path, rate, x.astype(np.float32))
    else:
        raise ValueError("sampwidth must be 2 (PCM16) or 4 (float32)")


@lru_cache(maxsize=16)
def _lowpass(up: int, down: int, src_rate: float, dst_rate: float, attenuation: float) -> np.ndarray:
    # Kaiser-windowed sinc; transition band from 0.45 to 0.55 of the lower rate
    hi_rate = up * src_rate
    lo_rate = min(src_rate, dst_rate)
    width = 0.1 * lo_rate / (0.5 * hi_rate)
    numtaps, beta = kaiserord(attenuation, width)
    numtaps |= 1
    return firwin(numtaps, 0.5 * lo_rate, window=("kaiser", beta), fs=hi_rate)


def resample(audio: AudioBuffer, target_rate: float, attenuation: float = 70.0) -> AudioBuffer:
    """Band-limited resampling with a Kaiser-windowed sinc filter.

    Content below 0.45 x the lower of the two rates passes within 0.01 dB;
    content above 0.55 x is attenuated by at least *attenuation* dB.
    """
    if target_rate <= 0:
        raise AudioError(f"target rate must be positive, got {target_rate}")
    if target_rate == audio.sample_rate:
        return audio
    ratio = Fraction(target_rate / audio.sample_rate).limit_denominator(1000)
    up, down = ratio.numerator, ratio.denominator
    h = _lowpass(up, down, float(audio.sample_rate), float(target_rate), attenuation)
    y = resample_poly(audio.samples, up, down, window=h)
    return AudioBuffer(y, audio.sample_rate * up / down)


def preemphasis_coefficient(from_hz: float, sample_rate: float) -> float:
    return float(np.exp(-2.0 * np.pi * from_hz / sample_rate))


def pre_emphasize(audio: AudioBuffer, from_hz: float) -> AudioBuffer:
    """First-order high-pass ``y[n] = x[n] - a x[n-1]`` with ``a = exp(-2 pi F / fs)``."""
    if from_hz >= audio.nyquist:
        raise AudioError(f"pre-emphasis frequency {from_hz} Hz must be below Nyquist {audio.nyquist} Hz")
    a = preemphasis_coefficient(from_hz, audio.sample_rate)
    x = audio.samples
    y = x.copy()
    y[1:] -= a * x[:-1]
    return AudioBuffer(y, audio.sample_rate)
