"""Per-file acoustic feature extraction over the intervals of a phoneme tier."""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dsp import (
    AudioBuffer, FormantTrack, PitchTrack, SpectralError, extract_formants, extract_pitch,
    optimize_ceiling, sample_contour_nine, spectral_centroid, spectral_tilt,
)
from .dsp.contour import N_POINTS
from .dsp.formants import CEILING_GRID
from .merge import CONTOURS, SegmentFeatures
from .textgrid import IntervalTier

logger = logging.getLogger(__name__)


@dataclass
class DSPParams:
    time_step: float = 0.01
    pitch_floor: float = 75.0
    pitch_ceiling: float = 300.0
    formant_window: float = 0.025
    max_formants: int = 5
    formant_ceiling: float = 5000.0
    preemphasis_from: float = 50.0
    optimize_ceiling: bool = False
    ceiling_grid: tuple = CEILING_GRID
    centroid_weighting: str = "magnitude"


@dataclass
class FileFeatures:
    pitch: PitchTrack
    formants: FormantTrack
    segments: dict                       # interval index -> SegmentFeatures
    labels: dict                         # interval index -> (start, end, label)
    ceiling: float
    notes: list = field(default_factory=list)


def extract_file_features(
    audio: AudioBuffer,
    tier: IntervalTier,
    params: DSPParams,
    is_pause=lambda label: label.strip() == "",
    vowel_intervals=None,
) -> FileFeatures:
    """Tracks plus per-interval contours, tilt and centroid for every non-pause interval.

    Contours are sampled for all intervals; whether they apply (vowels
    only) is decided when records are built. With ``params.optimize_ceiling``
    the formant ceiling is searched over ``params.ceiling_grid`` using
    *vowel_intervals* ``[(t0, t1, label), ...]``.
    """
    notes = []
    pitch = extract_pitch(audio, params.time_step, params.pitch_floor, params.pitch_ceiling)
    ceiling = params.formant_ceiling
    fkw = dict(time_step=params.time_step, window=params.formant_window,
               max_formants=params.max_formants, preemph_from=params.preemphasis_from)
    if params.optimize_ceiling:
        if vowel_intervals:
            ceiling = optimize_ceiling(audio, vowel_intervals, params.ceiling_grid, initial=ceiling, **fkw)
        else:
            notes.append("no vowel intervals; formant ceiling not optimized")
    formants = extract_formants(audio, ceiling=ceiling, **fkw)

    segments, labels = {}, {}
    for i, iv in enumerate(tier.intervals):
        if is_pause(iv.label):
            continue
        labels[i] = (iv.xmin, iv.xmax, iv.label)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            f0 = sample_contour_nine(pitch, iv.xmin, iv.xmax)
            fm = sample_contour_nine(formants, iv.xmin, iv.xmax)
        contours = {"f0": f0["f0"]}
        for name in CONTOURS[1:]:
            contours[name] = fm[name] if name in fm.values else np.full(N_POINTS, np.nan)
        frame = audio.segment(iv.xmin, iv.xmax)
        try:
            tilt = spectral_tilt(frame)
        except SpectralError:
            tilt = math.nan
        try:
            centroid = spectral_centroid(frame, audio.sample_rate, weighting=params.centroid_weighting)
        except SpectralError:
            centroid = math.nan
        segments[i] = SegmentFeatures(contours, tilt, centroid)
    return FileFeatures(pitch, formants, segments, labels, ceiling, notes)


def _fmt(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else ""


def segment_columns() -> list[str]:
    cols = ["index", "start", "end", "label", "spectral_tilt", "spectral_centroid"]
    for name in CONTOURS:
        cols += [f"{name}_{k}" for k in range(1, N_POINTS + 1)]
    return cols


def segments_to_text(ff: FileFeatures) -> str:
    lines = [f"# ceiling={json.dumps(ff.ceiling)}", "\t".join(segment_columns())]
    for i in sorted(ff.segments):
        seg = ff.segments[i]
        t0, t1, label = ff.labels[i]
        cells = [str(i), _fmt(t0), _fmt(t1), label.replace("\t", " "),
                 _fmt(seg.spectral_tilt), _fmt(seg.spectral_centroid)]
        for name in CONTOURS:
            cells += [_fmt(v) for v in seg.contours[name]]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def segments_from_text(text: str) -> dict[int, SegmentFeatures]:
    out = {}
    lines = [ln for ln in text.split("\n") if ln and not ln.startswith("#")]
    header = lines[0].split("\t")
    for ln in lines[1:]:
        row = dict(zip(header, ln.split("\t")))
        num = lambda s: float(s) if s else math.nan
        contours = {name: np.array([num(row[f"{name}_{k}"]) for k in range(1, N_POINTS + 1)]) for name in CONTOURS}
        out[int(row["index"])] = SegmentFeatures(contours, num(row["spectral_tilt"]), num(row["spectral_centroid"]))
    return out
