"""Reading and writing Praat TextGrid files (text format, long and short).

Only interval tiers are kept. Point tiers found in an input file are skipped
and noted in :attr:`TextGrid.warnings`.
"""

from __future__ import annotations

import bisect
import codecs
import logging
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence, Union

logger = logging.getLogger(__name__)

TIME_TOL = 1e-9


class TextGridError(ValueError):
    """Malformed or invalid TextGrid input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TierNotFound(KeyError):
    pass


@dataclass(frozen=True)
class Interval:
    xmin: float
    xmax: float
    label: str = ""

    def __post_init__(self):
        if not self.xmin < self.xmax:
            raise TextGridError(f"interval xmin {self.xmin!r} must be < xmax {self.xmax!r}")

    @property
    def duration(self) -> float:
        return self.xmax - self.xmin

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.xmin + self.xmax)

    def __contains__(self, t: float) -> bool:
        # half-open membership
        return self.xmin <= t < self.xmax


@dataclass(frozen=True)
class IntervalTier:
    name: str
    xmin: float
    xmax: float
    intervals: tuple[Interval, ...]

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        check_tier(self)

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __getitem__(self, i: int) -> Interval:
        return self.intervals[i]


@dataclass(frozen=True)
class TextGrid:
    xmin: float
    xmax: float
    tiers: tuple[IntervalTier, ...]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))
        if not self.xmin < self.xmax:
            raise TextGridError(f"TextGrid xmin {self.xmin!r} must be < xmax {self.xmax!r}")
        seen = set()
        for tier in self.tiers:
            if tier.name in seen:
                raise TextGridError(f"duplicate tier name {tier.name!r}")
            seen.add(tier.name)
            if tier.xmin < self.xmin - TIME_TOL or tier.xmax > self.xmax + TIME_TOL:
                raise TextGridError(
                    f"tier {tier.name!r} [{tier.xmin}, {tier.xmax}] lies outside "
                    f"the TextGrid [{self.xmin}, {self.xmax}]"
                )

    @property
    def tier_names(self) -> list[str]:
        return [t.name for t in self.tiers]


def check_tier(tier: IntervalTier, line: int | None = None) -> None:
    ivs = tier.intervals
    if not ivs:
        raise TextGridError(f"tier {tier.name!r} has no intervals", line)
    if abs(ivs[0].xmin - tier.xmin) > TIME_TOL:
        raise TextGridError(
            f"tier {tier.name!r}: first interval starts at {ivs[0].xmin}, tier at {tier.xmin}", line
        )
    if abs(ivs[-1].xmax - tier.xmax) > TIME_TOL:
        raise TextGridError(
            f"tier {tier.name!r}: last interval ends at {ivs[-1].xmax}, tier at {tier.xmax}", line
        )
    for i in range(1, len(ivs)):
        prev, cur = ivs[i - 1], ivs[i]
        if cur.xmin < prev.xmax - TIME_TOL:
            raise TextGridError(
                f"tier {tier.name!r}: interval {i + 1} starts at {cur.xmin} "
                f"before interval {i} ends at {prev.xmax}",
                line,
            )
        if cur.xmin > prev.xmax + TIME_TOL:
            raise TextGridError(
                f"tier {tier.name!r}: gap between interval {i} (ends {prev.xmax}) "
                f"and interval {i + 1} (starts {cur.xmin})",
                line,
            )


# --------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<string>"(?:[^"]|"")*")
    | (?P<flag><[A-Za-z]+>)
    | (?P<bracket>\[[^\]\n]*\])
    | (?P<word>[A-Za-z_][A-Za-z_0-9?]*)
    | (?P<number>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
    | (?P<comment>![^\n]*)
    | (?P<newline>\n)
    | (?P<skip>[ \t\r=:]+)
    | (?P<other>.)
    """,
    re.VERBOSE | re.DOTALL,
)


def _decode(data: bytes) -> str:
    if data.startswith(codecs.BOM_UTF16_LE) or data.startswith(codecs.BOM_UTF16_BE):
        encoding = "utf-16"
    elif data.startswith(codecs.BOM_UTF8):
        encoding = "utf-8-sig"
    else:
        encoding = "utf-8"
    try:
        return data.decode(encoding)
    except UnicodeDecodeError as err:
        line = data[: err.start].count(b"\n") + 1
        raise TextGridError(f"unsupported or invalid {encoding} encoding: {err.reason}", line) from None


class _Tokens:
    """Stream of (kind, value, line) over the values of a TextGrid file.

    Labels of the long form (``xmin =``, ``intervals [3]:``) are dropped, so
    the long and short forms yield the same stream.
    """

    def __init__(self, text: str):
        self._items: list[tuple[str, str, int]] = []
        line = 1
        for m in _TOKEN_RE.finditer(text):
            kind = m.lastgroup
            value = m.group()
            if kind == "newline":
                line += 1
            elif kind in ("string", "flag", "number"):
                self._items.append((kind, value, line))
                if kind == "string":
                    line += value.count("\n")
            elif kind == "other":
                raise TextGridError(f"unexpected character {value!r}", line)
        self._pos = 0

    @property
    def line(self) -> int:
        if self._pos < len(self._items):
            return self._items[self._pos][2]
        return self._items[-1][2] if self._items else 1

    def at_end(self) -> bool:
        return self._pos >= len(self._items)

    def _next(self, expected: str) -> tuple[str, str, int]:
        if self.at_end():
            raise TextGridError(f"unexpected end of file, expected {expected}", self.line)
        item = self._items[self._pos]
        self._pos += 1
        return item

    def string(self, what: str = "string") -> str:
        kind, value, line = self._next(what)
        if kind != "string":
            raise TextGridError(f"expected {what}, found {value!r}", line)
        return value[1:-1].replace('""', '"')

    def number(self, what: str = "number") -> float:
        kind, value, line = self._next(what)
        if kind != "number":
            raise TextGridError(f"expected {what}, found {value!r}", line)
        return float(value)

    def count(self, what: str) -> int:
        line = self.line
        x = self.number(what)
        if x != int(x) or x < 0:
            raise TextGridError(f"expected non-negative integer {what}, found {x!r}", line)
        return int(x)

    def flag(self) -> str:
        kind, value, line = self._next("<exists>")
        if kind != "flag":
            raise TextGridError(f"expected <exists>, found {value!r}", line)
        return value


def parse_textgrid(source: Union[bytes, str, IO[bytes]]) -> TextGrid:
    """Parse a TextGrid from raw bytes, a path, or a binary stream.

    Accepts the long and short text forms, encoded as UTF-8 (with or
    without BOM) or UTF-16 (BOM required).
    """
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, str):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    toks = _Tokens(_decode(data))

    if toks.string("file type") != "ooTextFile":
        raise TextGridError('header must start with File type = "ooTextFile"', 1)
    if toks.string("object class") != "TextGrid":
        raise TextGridError('object class must be "TextGrid"', toks.line)
    xmin = toks.number("TextGrid xmin")
    xmax = toks.number("TextGrid xmax")
    if toks.flag() != "<exists>":
        return TextGrid(xmin, xmax, ())
    n_tiers = toks.count("tier count")

    tiers: list[IntervalTier] = []
    warnings: list[str] = []
    for _ in range(n_tiers):
        tier_line = toks.line
        cls = toks.string("tier class")
        name = toks.string("tier name")
        t_min = toks.number("tier xmin")
        t_max = toks.number("tier xmax")
        size = toks.count("interval count")
        if cls == "TextTier":
            for _ in range(size):
                toks.number("point time")
                toks.string("point mark")
            msg = f"point tier {name!r} (line {tier_line}) skipped"
            logger.warning(msg)
            warnings.append(msg)
            continue
        if cls != "IntervalTier":
            raise TextGridError(f"unknown tier class {cls!r}", tier_line)
        intervals = []
        prev_end = None
        for i in range(size):
            line = toks.line
            a = toks.number("interval xmin")
            b = toks.number("interval xmax")
            label = toks.string("interval text")
            if prev_end is not None and a < prev_end - TIME_TOL:
                raise TextGridError(
                    f"tier {name!r}: interval {i + 1} starts at {a} "
                    f"before interval {i} ends at {prev_end}",
                    line,
                )
            if not a < b:
                raise TextGridError(f"tier {name!r}: interval {i + 1} has xmin {a} >= xmax {b}", line)
            intervals.append(Interval(a, b, label))
            prev_end = b
        try:
            tiers.append(IntervalTier(name, t_min, t_max, tuple(intervals)))
        except TextGridError as err:
            raise TextGridError(str(err), tier_line) from None
    if not toks.at_end():
        raise TextGridError("trailing data after last tier", toks.line)
    try:
        return TextGrid(xmin, xmax, tuple(tiers), tuple(warnings))
    except TextGridError as err:
        raise TextGridError(str(err), 1) from None


# --------------------------------------------------------------------------
# Writing

def format_time(x: float) -> str:
    s = "%.15g" % x
    if float(s) != x:
        s = "%.17g" % x
    return s


def _quote(label: str) -> str:
    return '"' + label.replace('"', '""') + '"'


def serialize_textgrid(tg: TextGrid) -> bytes:
    """Long-form text, UTF-8 without BOM."""
    out = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        f"xmin = {format_time(tg.xmin)} ",
        f"xmax = {format_time(tg.xmax)} ",
    ]
    if not tg.tiers:
        out.append("tiers? <absent> ")
        return ("\n".join(out) + "\n").encode("utf-8")
    out += ["tiers? <exists> ", f"size = {len(tg.tiers)} ", "item []: "]
    for i, tier in enumerate(tg.tiers, start=1):
        out += [
            f"    item [{i}]:",
            '        class = "IntervalTier" ',
            f"        name = {_quote(tier.name)} ",
            f"        xmin = {format_time(tier.xmin)} ",
            f"        xmax = {format_time(tier.xmax)} ",
            f"        intervals: size = {len(tier.intervals)} ",
        ]
        for j, iv in enumerate(tier.intervals, start=1):
            out += [
                f"        intervals [{j}]:",
                f"            xmin = {format_time(iv.xmin)} ",
                f"            xmax = {format_time(iv.xmax)} ",
                f"            text = {_quote(iv.label)} ",
            ]
    return ("\n".join(out) + "\n").encode("utf-8")


def write_textgrid(tg: TextGrid, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_textgrid(tg))


# --------------------------------------------------------------------------
# Queries

def find_tier(tg: TextGrid, name: str) -> IntervalTier:
    """Return the tier called *name* (case-sensitive)."""
    for tier in tg.tiers:
        if tier.name == name:
            return tier
    raise TierNotFound(f"no tier named {name!r}; available: {tg.tier_names}")


def intervals_overlapping(tier: IntervalTier, t0: float, t1: float) -> list[Interval]:
    """Intervals with nonzero overlap with ``[t0, t1]``.

    A zero-length query ``t0 == t1`` is a point query and returns the single
    interval whose half-open span ``[xmin, xmax)`` contains the point.
    """
    if t0 > t1:
        raise ValueError(f"t0 {t0} > t1 {t1}")
    starts = [iv.xmin for iv in tier.intervals]
    if t0 == t1:
        i = bisect.bisect_right(starts, t0) - 1
        if i >= 0 and t0 in tier.intervals[i]:
            return [tier.intervals[i]]
        return []
    lo = max(bisect.bisect_right(starts, t0) - 1, 0)
    hi = bisect.bisect_left(starts, t1)
    return [iv for iv in tier.intervals[lo:hi] if iv.xmin < t1 and iv.xmax > t0]


def interval_index_at(tier: IntervalTier, t: float) -> int | None:
    """Index of the interval containing *t* (half-open), or None."""
    starts = [iv.xmin for iv in tier.intervals]
    i = bisect.bisect_right(starts, t) - 1
    if i >= 0 and t in tier.intervals[i]:
        return i
    return None


def tier_from_boundaries(name: str, boundaries: Sequence[float], labels: Iterable[str]) -> IntervalTier:
    """Build a contiguous tier from ``n + 1`` boundary times and ``n`` labels."""
    labels = list(labels)
    if len(boundaries) != len(labels) + 1:
        raise ValueError("need exactly one more boundary than labels")
    ivs = tuple(Interval(boundaries[i], boundaries[i + 1], lab) for i, lab in enumerate(labels))
    return IntervalTier(name, boundaries[0], boundaries[-1], ivs)
