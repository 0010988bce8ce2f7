"""Plain-text track files: one frame per line, tab separated.

Header lines start with ``#`` and carry analysis parameters as ``key=value``.
Missing values are written as empty cells.
"""

from __future__ import annotations

import json

import numpy as np

from .formants import FormantTrack
from .pitch import PitchTrack


def _fmt(x: float) -> str:
    return "" if not np.isfinite(x) else repr(float(x))


def _num(s: str) -> float:
    return float(s) if s else np.nan


def _header(kind: str, params: dict) -> list[str]:
    return [f"# kind={kind}"] + [f"# {k}={json.dumps(v)}" for k, v in params.items()]


def _read_header(lines: list[str]) -> tuple[dict, list[str]]:
    params = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            params[key] = value if key == "kind" else json.loads(value)
        elif line:
            body.append(line)
    return params, body


def pitch_track_to_text(track: PitchTrack) -> str:
    params = {"time_step": track.time_step, "floor": track.floor, "ceiling": track.ceiling, **track.params}
    lines = _header("pitch", params) + ["time\tf0\tstrength\tvalid"]
    for t, f, s in zip(track.times, track.f0, track.strength):
        lines.append(f"{_fmt(t)}\t{_fmt(f)}\t{_fmt(s)}\t{int(np.isfinite(f))}")
    return "\n".join(lines) + "\n"


def pitch_track_from_text(text: str) -> PitchTrack:
    params, body = _read_header(text.split("\n"))
    rows = [r.split("\t") for r in body[1:]]
    times = np.array([_num(r[0]) for r in rows])
    f0 = np.array([_num(r[1]) for r in rows])
    strength = np.array([_num(r[2]) for r in rows])
    extra = {k: v for k, v in params.items() if k not in ("kind", "time_step", "floor", "ceiling")}
    return PitchTrack(times, f0, strength, params["time_step"], params["floor"], params["ceiling"], extra)


def formant_track_to_text(track: FormantTrack) -> str:
    params = {
        "time_step": track.time_step, "window": track.window, "max_formants": track.max_formants,
        "ceiling": track.ceiling, "preemphasis_from": track.preemphasis_from, **track.params,
    }
    cols = ["time"]
    for k in range(1, track.max_formants + 1):
        cols += [f"F{k}", f"B{k}"]
    lines = _header("formant", params) + ["\t".join(cols + ["n_formants", "valid"])]
    for i, t in enumerate(track.times):
        cells = [_fmt(t)]
        for k in range(track.max_formants):
            cells += [_fmt(track.freqs[i, k]), _fmt(track.bandwidths[i, k])]
        cells += [str(int(np.isfinite(track.freqs[i]).sum())), str(int(track.valid[i]))]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def formant_track_from_text(text: str) -> FormantTrack:
    params, body = _read_header(text.split("\n"))
    n = int(params["max_formants"])
    rows = [r.split("\t") for r in body[1:]]
    times = np.array([_num(r[0]) for r in rows])
    freqs = np.array([[_num(r[1 + 2 * k]) for k in range(n)] for r in rows]).reshape(len(rows), n)
    bws = np.array([[_num(r[2 + 2 * k]) for k in range(n)] for r in rows]).reshape(len(rows), n)
    valid = np.array([r[-1] == "1" for r in rows], dtype=bool)
    extra = {k: v for k, v in params.items()
             if k not in ("kind", "time_step", "window", "max_formants", "ceiling", "preemphasis_from")}
    return FormantTrack(times, freqs, bws, params["time_step"], params["window"], n,
                        params["ceiling"], params["preemphasis_from"], valid, extra)
