"""Frame-level spectral shape measures."""

from __future__ import annotations

import numpy as np


class SpectralError(ValueError):
    pass


def spectral_tilt(frame) -> float:
    """Coefficient of the order-1 all-pole fit, ``r(1) / r(0)``.

    Uses the biased autocorrelation. Values near +1 mean energy is
    concentrated at low frequencies (steep tilt); near -1 at high ones.
    """
    x = np.asarray(frame, dtype=np.float64)
    if len(x) < 2:
        raise SpectralError("spectral tilt needs at least 2 samples")
    r0 = np.dot(x, x)
    if r0 == 0.0:
        raise SpectralError("spectral tilt of a zero-energy frame")
    return float(np.dot(x[1:], x[:-1]) / r0)


def spectral_centroid(frame, fs: float, window: str | None = "hann", weighting: str = "magnitude") -> float:
    """Magnitude-weighted mean frequency of the frame's spectrum.

    ``weighting="literal"`` computes ``sum(f |X|) / sum(f)`` instead, a
    reading of the centroid that weights by frequency alone.
    """
    x = np.asarray(frame, dtype=np.float64)
    if len(x) == 0 or not np.any(x):
        raise SpectralError("spectral centroid of a zero-energy frame")
    if window == "hann":
        x = x * np.hanning(len(x) + 2)[1:-1]
    elif window is not None:
        raise ValueError(f"unknown window {window!r}")
    mag = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(len(x), 1.0 / fs)
    if weighting == "magnitude":
        total = mag.sum()
        if total == 0.0:
            raise SpectralError("spectral centroid of a zero-energy frame")
        return float(np.dot(freqs, mag) / total)
    if weighting == "literal":
        return float(np.dot(freqs, mag) / freqs.sum())
    raise ValueError(f"unknown weighting {weighting!r}")
