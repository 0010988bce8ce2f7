"""Burg LPC analysis and conversion of predictor polynomials to formants."""

from __future__ import annotations

import numpy as np


class LPCError(ValueError):
    pass


def burg_lpc(frame, order: int, return_reflection: bool = False):
    """All-pole fit by the Burg recursion.

    Returns predictor coefficients ``a[1..order]`` such that
    ``x[n] ~ sum_k a[k] x[n-k]``. With ``return_reflection=True`` the
    reflection coefficients are returned as a second array.

    Every reflection coefficient lies in (-1, 1), so the fitted model is
    stable. If the prediction error vanishes before *order* is reached
    the remaining coefficients are zero.
    """
    x = np.asarray(frame, dtype=np.float64)
    n = len(x)
    if not 1 <= order < n:
        raise LPCError(f"need 1 <= order ({order}) < frame length ({n})")
    energy = float(np.dot(x, x))
    if energy == 0.0:
        raise LPCError("cannot fit LPC to an all-zero frame")

    f = x.copy()
    b = x.copy()
    poly = np.array([1.0])   # error filter 1 + c1 z^-1 + ...
    refl = np.zeros(order)
    for m in range(order):
        ff = f[m + 1:]
        bb = b[m:-1]
        den = np.dot(ff, ff) + np.dot(bb, bb)
        if den <= 1e-14 * energy:
            break
        k = -2.0 * np.dot(ff, bb) / den
        f_new = ff + k * bb
        b_new = bb + k * ff
        f[m + 1:] = f_new
        b[m + 1:] = b_new
        ext = np.append(poly, 0.0)
        poly = ext + k * ext[::-1]
        refl[m] = k

    a = np.zeros(order)
    a[: len(poly) - 1] = -poly[1:]
    if return_reflection:
        return a, refl
    return a


def predictor_from_poles(poles) -> np.ndarray:
    """Predictor coefficients whose error filter has the given roots."""
    poly = np.real(np.poly(poles))
    return -poly[1:]


def lpc_to_formants(coeffs, fs: float, min_freq: float = 50.0, edge_margin: float = 50.0):
    """Formant (frequency, bandwidth) pairs from predictor coefficients.

    Roots of ``1 - sum a_k z^-k`` with positive imaginary part map to
    ``F = angle * fs / (2 pi)`` and ``B = -ln|z| * fs / pi``. Roots outside
    the unit circle are reflected inside first. Frequencies outside
    ``(min_freq, fs/2 - edge_margin)`` are dropped; results ascend in F.
    """
    a = np.asarray(coeffs, dtype=np.float64)
    if a.ndim != 1 or not np.all(np.isfinite(a)):
        raise LPCError("predictor coefficients must be a finite 1-D array")
    poly = np.concatenate(([1.0], -a))
    # strip trailing zeros so zero-order terms don't become roots at the origin
    nz = np.flatnonzero(poly)
    poly = poly[: nz[-1] + 1]
    if len(poly) < 2:
        return []
    try:
        roots = np.roots(poly)
    except np.linalg.LinAlgError as err:
        raise LPCError(f"root finding did not converge: {err}") from None
    mag = np.abs(roots)
    outside = mag > 1.0
    roots[outside] = 1.0 / np.conj(roots[outside])
    roots = roots[roots.imag > 0]
    freqs = np.angle(roots) * fs / (2.0 * np.pi)
    bws = -np.log(np.abs(roots)) * fs / np.pi
    keep = (freqs > min_freq) & (freqs < fs / 2.0 - edge_margin)
    order = np.argsort(freqs[keep])
    return [(float(f), float(b)) for f, b in zip(freqs[keep][order], bws[keep][order])]
