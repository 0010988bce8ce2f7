"""Surprisal, entropy and informativity from next-token distributions."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .lm.model import GPT, next_distributions

PROB_FLOOR = 1e-12


class ProbabilityError(ValueError):
    pass


@dataclass
class FloorTally:
    """Counts probabilities raised to :data:`PROB_FLOOR` before taking logs."""

    count: int = 0


def surprisal(p: float, tally: FloorTally | None = None) -> float:
    """``-log2 p`` in bits."""
    if not p > 0.0:
        if tally is None:
            raise ProbabilityError(f"surprisal undefined for probability {p!r}")
        tally.count += 1
        p = PROB_FLOOR
    elif p > 1.0 + 1e-12:
        raise ProbabilityError(f"probability {p!r} > 1")
    elif p < PROB_FLOOR and tally is not None:
        tally.count += 1
        p = PROB_FLOOR
    return -math.log2(min(p, 1.0))


def entropy(p: Sequence[float], tol: float = 1e-6) -> float:
    """Shannon entropy in bits, with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or np.any(p < 0):
        raise ProbabilityError("entropy needs a 1-D vector of non-negative probabilities")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise ProbabilityError(f"probabilities sum to {total!r}, not 1")
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


@dataclass
class SurprisalSeries:
    """Per-position surprisal; position 0 (no context) holds NaN."""

    ids: np.ndarray
    context_length: np.ndarray
    surprisal: np.ndarray
    entropy: np.ndarray
    window: int
    floored: int = 0

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.surprisal)


def sequence_surprisals(model: GPT, ids: Sequence[int], window: int = 10, batch_size: int = 256) -> SurprisalSeries:
    """Surprisal of every token given up to *window* preceding tokens.

    Position ``i`` is predicted from ``ids[max(0, i - window) : i]``;
    position 0 has no context and is left undefined. The entropy of each
    predicted distribution is reported alongside.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    ids = np.asarray(ids, dtype=np.int64)
    n = len(ids)
    if n == 0:
        raise ValueError("empty token sequence")
    window = min(window, model.config.block_size)
    ctx_len = np.minimum(np.arange(n), window)
    surp = np.full(n, np.nan)
    ent = np.full(n, np.nan)
    tally = FloorTally()

    # group positions by context length so each group is one batch shape
    for length in np.unique(ctx_len[1:]):
        positions = np.flatnonzero(ctx_len == length)
        positions = positions[positions >= 1]
        for s in range(0, len(positions), batch_size):
            pos = positions[s:s + batch_size]
            contexts = np.stack([ids[i - length:i] for i in pos])
            dists = next_distributions(model, contexts)
            for i, dist in zip(pos, dists):
                surp[i] = surprisal(float(dist[ids[i]]), tally)
                ent[i] = entropy(dist)
    return SurprisalSeries(ids, ctx_len, surp, ent, window, tally.count)


def informativity(occurrences: Iterable[tuple[int, float]]) -> dict[int, float]:
    """Mean surprisal of each token type over its defined occurrences."""
    sums: dict[int, float] = defaultdict(float)
    counts: dict[int, int] = defaultdict(int)
    for token, s in occurrences:
        if s is None or not math.isfinite(s):
            continue
        sums[token] += s
        counts[token] += 1
    return {tok: sums[tok] / counts[tok] for tok in sorted(counts)}


def word_surprisals(series: SurprisalSeries, space_id: int | None) -> list[tuple[int, int, float]]:
    """Sum phoneme surprisals between space tokens.

    Returns ``(start, end, bits)`` per word, ``end`` exclusive. A word whose
    first token is position 0 has undefined (NaN) surprisal.
    """
    words = []
    start = None
    for i, tok in enumerate(series.ids):
        if tok == space_id:
            if start is not None:
                words.append((start, i, float(np.sum(series.surprisal[start:i]))))
                start = None
        elif start is None:
            start = i
    if start is not None:
        words.append((start, len(series.ids), float(np.sum(series.surprisal[start:]))))
    return words
