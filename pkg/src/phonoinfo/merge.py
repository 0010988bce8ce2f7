"""Join aligned phoneme intervals with language-model positions and write the per-phoneme table."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dsp.contour import N_POINTS, NormalizationError, lobanov_normalize, zscore_f0
from .infomeasures import SurprisalSeries
from .ipa_tok import Vocabulary, is_vowel
from .textgrid import Interval, IntervalTier

PAUSE = "<pause>"
DEFAULT_PAUSE_LABELS = frozenset({"", "<p:>", "<p>"})
CONTOURS = ("f0", "F1", "F2", "F3")

OK, MISSING, UNDEFINED, NOT_APPLICABLE = "", "missing", "undefined", "not_applicable"


class MergeError(ValueError):
    pass


class UnmappedLabel(MergeError):
    pass


class StreamMismatch(MergeError):
    def __init__(self, message: str, lm_position: int, interval_index: int | None):
        self.lm_position = lm_position
        self.interval_index = interval_index
        super().__init__(message)


# --------------------------------------------------------------------------
# Label map

@dataclass(frozen=True)
class LabelMap:
    entries: Mapping[str, str]
    pause_labels: frozenset = DEFAULT_PAUSE_LABELS

    def is_pause(self, label: str) -> bool:
        return label.strip() in self.pause_labels

    def target(self, label: str) -> str | None:
        return self.entries.get(label.strip())

    def validate(self, vocab: Vocabulary) -> None:
        bad = sorted(t for t in set(self.entries.values()) if t not in vocab)
        if bad:
            raise MergeError(f"label map targets missing from the vocabulary: {bad}")

    @classmethod
    def from_text(cls, text: str, include_default_pauses: bool = True) -> "LabelMap":
        entries = {}
        pauses = set(DEFAULT_PAUSE_LABELS) if include_default_pauses else set()
        for lineno, line in enumerate(text.splitlines(), start=1):
            if line.startswith("#") or not line.strip():
                continue
            if "\t" not in line:
                raise MergeError(f"label map line {lineno}: expected two tab-separated columns")
            label, target = line.split("\t", 1)
            label, target = label.strip(), target.strip("\r\n")
            if target == PAUSE:
                pauses.add(label)
            else:
                entries[label] = target
        return cls(entries, frozenset(pauses))

    @classmethod
    def load(cls, path) -> "LabelMap":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    @classmethod
    def default(cls) -> "LabelMap":
        text = resources.files("phonoinfo").joinpath("data/labelmap_pl.tsv").read_text(encoding="utf-8")
        return cls.from_text(text)


@dataclass(frozen=True)
class MappedInterval:
    index: int
    interval: Interval
    kind: str                    # "phone", "pause" or "unmapped"
    token_id: int | None = None


def map_labels(
    tier: IntervalTier, label_map: LabelMap, vocab: Vocabulary, strict: bool = True, file_id: str = ""
) -> list[MappedInterval]:
    """Translate aligner labels to vocabulary ids.

    Pause labels map to the pause marker. An unmapped label raises
    :class:`UnmappedLabel` in strict mode; in lenient mode it is kept as an
    ``"unmapped"`` item that later consumes one LM token and is skipped.
    """
    if len(tier) == 0:
        raise MergeError(f"{file_id}: tier {tier.name!r} is empty")
    out = []
    for i, iv in enumerate(tier.intervals):
        if label_map.is_pause(iv.label):
            out.append(MappedInterval(i, iv, "pause"))
            continue
        target = label_map.target(iv.label)
        if target is None or target not in vocab:
            if strict:
                what = "unmapped label" if target is None else f"target {target!r} not in vocabulary for label"
                raise UnmappedLabel(f"{file_id}: tier {tier.name!r}, interval {i + 1}: {what} {iv.label!r}")
            out.append(MappedInterval(i, iv, "unmapped"))
            continue
        out.append(MappedInterval(i, iv, "phone", vocab.id(target)))
    return out


# --------------------------------------------------------------------------
# Stream alignment

@dataclass
class Alignment:
    pairs: list[tuple[int, int]] = field(default_factory=list)      # (mapped item index, LM position)
    pause_pairs: list[tuple[int, int]] = field(default_factory=list)
    skipped: list[int] = field(default_factory=list)                # mapped item indices
    divergences: list[dict] = field(default_factory=list)

    @property
    def first_divergence(self) -> int | None:
        return self.divergences[0]["lm_position"] if self.divergences else None


def align_streams(
    mapped: Sequence[MappedInterval], lm_ids: Sequence[int], space_id: int | None, strict: bool = True
) -> Alignment:
    """Pair phoneme intervals with LM token positions, left to right.

    Space tokens in the LM stream match a pause interval when one is
    present and are otherwise absorbed silently (word boundaries without a
    pause). Phoneme intervals must match the next non-space LM token id.
    """
    lm = list(map(int, lm_ids))
    n = len(lm)
    res = Alignment()
    j = 0

    def diverge(item_idx: int | None, interval_index: int | None, j: int, expected, found, what: str):
        d = {"lm_position": j, "interval_index": interval_index, "expected": expected, "found": found, "reason": what}
        res.divergences.append(d)
        if strict:
            raise StreamMismatch(
                f"streams diverge at LM position {j} (interval {interval_index}): {what}; "
                f"expected {expected!r}, found {found!r}",
                j, interval_index,
            )
        if item_idx is not None:
            res.skipped.append(item_idx)

    for k, item in enumerate(mapped):
        if item.kind == "pause":
            if j < n and space_id is not None and lm[j] == space_id:
                res.pause_pairs.append((k, j))
                j += 1
            continue
        while j < n and lm[j] == space_id:
            j += 1
        if j >= n:
            diverge(k, item.index, j, item.token_id, None, "LM stream exhausted")
            continue
        if item.kind == "unmapped":
            res.skipped.append(k)
            j += 1
            continue
        if lm[j] == item.token_id:
            res.pairs.append((k, j))
        else:
            diverge(k, item.index, j, item.token_id, lm[j], "token mismatch")
        j += 1

    while j < n and lm[j] == space_id:
        j += 1
    if j < n:
        diverge(None, None, j, None, lm[j], "trailing LM tokens without intervals")
    return res


# --------------------------------------------------------------------------
# Records

@dataclass
class SegmentFeatures:
    """Raw per-interval acoustic measurements (Hz, NaN when missing)."""

    contours: dict                     # name -> 9 values
    spectral_tilt: float = math.nan
    spectral_centroid: float = math.nan


@dataclass
class PhonemeRecord:
    file_id: str
    speaker_id: str
    word_index: int
    phoneme: str
    token_id: int
    start: float
    end: float
    surprisal: float
    entropy: float
    informativity: float
    contours: dict
    spectral_tilt: float
    spectral_centroid: float
    flags: dict = field(default_factory=dict)
    lm_position: int = -1

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def is_vowel(self) -> bool:
        return is_vowel(self.phoneme)


def _scalar_flag(x: float, undefined: bool = False) -> str:
    if math.isfinite(x):
        return OK
    return UNDEFINED if undefined else MISSING


def word_indices(ids: Sequence[int], space_id: int | None) -> np.ndarray:
    """0-based word number of every LM position; runs of spaces count as one boundary."""
    out = np.zeros(len(ids), dtype=np.int64)
    word, in_word = 0, False
    for i, t in enumerate(ids):
        if space_id is not None and t == space_id:
            if in_word:
                word += 1
            in_word = False
            out[i] = word
        else:
            out[i] = word
            in_word = True
    return out


def build_records(
    file_id: str,
    speaker_id: str,
    mapped: Sequence[MappedInterval],
    alignment: Alignment,
    features: Mapping[int, SegmentFeatures],
    series: SurprisalSeries,
    informativity: Mapping[int, float],
    vocab: Vocabulary,
) -> list[PhonemeRecord]:
    """One record per paired phoneme interval, ordered by start time.

    *features* is keyed by interval index within the tier. Contours are
    only applicable to vowels; consonant records flag them as such.
    """
    if len(series) and len(series) <= max((j for _, j in alignment.pairs), default=-1):
        raise MergeError(f"{file_id}: surprisal series shorter than the paired LM stream")
    word_of = word_indices(series.ids, vocab.space_id)
    records = []
    for k, j in alignment.pairs:
        item = mapped[k]
        if item.index not in features:
            raise MergeError(f"{file_id}: no acoustic features for interval {item.index + 1}")
        feat = features[item.index]
        token = vocab.tokens[item.token_id]
        vowel = is_vowel(token)
        s = float(series.surprisal[j])
        e = float(series.entropy[j])
        info = float(informativity.get(item.token_id, math.nan))
        flags = {
            "surprisal": _scalar_flag(s, undefined=True),
            "entropy": _scalar_flag(e, undefined=True),
            "informativity": _scalar_flag(info, undefined=True),
            "spectral_tilt": _scalar_flag(feat.spectral_tilt),
            "spectral_centroid": _scalar_flag(feat.spectral_centroid),
        }
        contours = {}
        for name in CONTOURS:
            if vowel:
                vals = np.asarray(feat.contours.get(name, np.full(N_POINTS, np.nan)), dtype=np.float64)
                contours[name] = vals.copy()
                flags[name] = "".join("." if np.isfinite(v) else "m" for v in vals)
            else:
                contours[name] = np.full(N_POINTS, np.nan)
                flags[name] = "n" * N_POINTS
        records.append(PhonemeRecord(
            file_id=file_id, speaker_id=speaker_id,
            word_index=int(word_of[j]),
            phoneme=token, token_id=int(item.token_id), start=item.interval.xmin, end=item.interval.xmax,
            surprisal=s, entropy=e, informativity=info, contours=contours,
            spectral_tilt=feat.spectral_tilt, spectral_centroid=feat.spectral_centroid,
            flags=flags, lm_position=j,
        ))
    records.sort(key=lambda r: (r.file_id, r.start))
    return records


def normalize_records(records: Iterable[PhonemeRecord], strict: bool = True) -> list[str]:
    """Normalize vowel contours in place, per speaker.

    f0 values are z-scored per speaker; F1-F3 are Lobanov-normalized per
    speaker and formant. Returns problems found; in strict mode a speaker
    without enough data raises instead, in lenient mode that speaker's
    contours are flagged missing.
    """
    records = list(records)
    by_speaker: dict[str, list[PhonemeRecord]] = {}
    for r in records:
        if r.is_vowel:
            by_speaker.setdefault(r.speaker_id, []).append(r)
    problems = []
    for spk, recs in by_speaker.items():
        for name in CONTOURS:
            pooled = np.concatenate([r.contours[name] for r in recs])
            try:
                if name == "f0":
                    z = zscore_f0({spk: pooled})[spk]
                else:
                    z = lobanov_normalize({spk: {name: pooled}})[spk][name]
            except NormalizationError as err:
                if strict:
                    raise
                problems.append(str(err))
                z = np.full_like(pooled, np.nan)
            for i, r in enumerate(recs):
                vals = z[i * N_POINTS:(i + 1) * N_POINTS]
                r.contours[name] = vals
                r.flags[name] = "".join("." if np.isfinite(v) else "m" for v in vals)
    return problems


# --------------------------------------------------------------------------
# Table output

def table_columns() -> list[str]:
    cols = ["file_id", "speaker_id", "word_index", "phoneme", "token_id", "start", "end", "duration"]
    for name in ("surprisal", "entropy", "informativity"):
        cols += [name, f"{name}_flag"]
    for name in CONTOURS:
        cols += [f"{name}_{k}" for k in range(1, N_POINTS + 1)] + [f"{name}_flag"]
    cols += ["spectral_tilt", "spectral_tilt_flag", "spectral_centroid", "spectral_centroid_flag"]
    return cols


def _num(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else ""


def record_row(r: PhonemeRecord) -> list[str]:
    row = [r.file_id, r.speaker_id, str(r.word_index), r.phoneme, str(r.token_id),
           _num(r.start), _num(r.end), _num(r.duration)]
    for name in ("surprisal", "entropy", "informativity"):
        row += [_num(getattr(r, name)), r.flags.get(name, OK)]
    for name in CONTOURS:
        row += [_num(v) for v in r.contours[name]] + [r.flags.get(name, "")]
    row += [_num(r.spectral_tilt), r.flags.get("spectral_tilt", OK),
            _num(r.spectral_centroid), r.flags.get("spectral_centroid", OK)]
    return row


def write_table(records: Iterable[PhonemeRecord]) -> bytes:
    """CSV (RFC 4180, CRLF line ends) with a header row; missing values are empty cells."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(table_columns())
    for r in records:
        w.writerow(record_row(r))
    return buf.getvalue().encode("utf-8")


def read_table(data: bytes) -> list[dict]:
    """Parse a table written by :func:`write_table`; numeric cells become floats (NaN if empty)."""
    text = data.decode("utf-8")
    rows = list(csv.DictReader(io.StringIO(text, newline="")))
    numeric = {c for c in table_columns() if not c.endswith("_flag")} - {"file_id", "speaker_id", "phoneme"}
    out = []
    for row in rows:
        parsed = {}
        for k, v in row.items():
            if k in numeric:
                if k in ("word_index", "token_id"):
                    parsed[k] = int(v)
                else:
                    parsed[k] = float(v) if v != "" else math.nan
            else:
                parsed[k] = v
        out.append(parsed)
    return out
