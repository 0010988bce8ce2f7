"""Text cleaning, grapheme-to-phoneme backends and train/dev dataset files."""

from __future__ import annotations

import json
import re
import subprocess
import unicodedata
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ipa_tok import Vocabulary, build_vocabulary, encode, tokenize

_SENTENCE_PUNCT = frozenset(".,;:!?'\"-()«»„”“…–—")
_WS_RE = re.compile(r"\s+")


class BackendError(RuntimeError):
    pass


def clean_text(raw: str) -> str:
    """Keep letters, digits, whitespace and sentence punctuation.

    Emoji, symbols and control characters are dropped; whitespace runs
    become single spaces and the result is stripped.
    """
    raw = unicodedata.normalize("NFC", raw)
    kept = []
    for ch in raw:
        cat = unicodedata.category(ch)
        if cat[0] in "LN" or ch in _SENTENCE_PUNCT:
            kept.append(ch)
        elif cat[0] == "M" and kept and not kept[-1].isspace():
            # combining marks only survive on a kept base letter
            kept.append(ch)
        else:
            kept.append(" ")
    return _WS_RE.sub(" ", "".join(kept)).strip()


@dataclass
class TableBackend:
    """Deterministic longest-match grapheme table, for tests and small setups.

    Spaces are preserved, characters in *ignore* (punctuation by default) are
    dropped, and any other unmapped character is a backend failure.
    """

    table: dict[str, str]
    name: str = "table"
    version: str = "1"
    ignore: frozenset = frozenset(_SENTENCE_PUNCT) | frozenset("0123456789")

    def __post_init__(self):
        self._maxlen = max((len(k) for k in self.table), default=1)

    def __call__(self, text: str) -> str:
        out = []
        i = 0
        text = text.lower()
        while i < len(text):
            ch = text[i]
            if ch == " ":
                out.append(" ")
                i += 1
                continue
            for n in range(min(self._maxlen, len(text) - i), 0, -1):
                chunk = text[i : i + n]
                if chunk in self.table:
                    out.append(self.table[chunk])
                    i += n
                    break
            else:
                if ch in self.ignore:
                    i += 1
                    continue
                raise BackendError(f"{self.name}: no mapping for {ch!r} at offset {i}")
        return _WS_RE.sub(" ", "".join(out)).strip()

    @classmethod
    def from_tsv(cls, path, **kw) -> "TableBackend":
        table = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                src, _, dst = line.partition("\t")
                table[src] = dst
        return cls(table, **kw)


@dataclass
class ProcessBackend:
    """External G2P program: text on stdin, IPA on stdout.

    For eSpeak NG, ``["espeak-ng", "-q", "--ipa=3", "-v", "pl", "--stdin"]``
    style command lines fit this contract; ``version_cmd`` is run once to
    record the program version.
    """

    command: Sequence[str]
    name: str = "process"
    version_cmd: Sequence[str] | None = None
    timeout: float = 600.0
    _version: str | None = field(default=None, init=False, repr=False)

    @property
    def version(self) -> str:
        if self._version is None:
            if not self.version_cmd:
                self._version = "unknown"
            else:
                try:
                    res = subprocess.run(list(self.version_cmd), capture_output=True, text=True, timeout=60)
                    self._version = (res.stdout or res.stderr).strip().splitlines()[0] if (res.stdout or res.stderr) else "unknown"
                except OSError as err:
                    raise BackendError(f"{self.name}: cannot run {self.version_cmd!r}: {err}") from None
        return self._version

    def __call__(self, text: str) -> str:
        try:
            res = subprocess.run(
                list(self.command), input=text, capture_output=True, text=True,
                encoding="utf-8", timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as err:
            raise BackendError(f"{self.name}: {err}") from None
        if res.returncode != 0:
            raise BackendError(f"{self.name} exited with status {res.returncode}: {res.stderr.strip()}")
        return res.stdout


@dataclass(frozen=True)
class Phonemized:
    ipa: str
    backend: str
    version: str


def phonemize(text: str, backend) -> Phonemized:
    """Run *backend* on cleaned text; the output is returned verbatim."""
    if text == "":
        return Phonemized("", backend.name, str(backend.version))
    return Phonemized(backend(text), backend.name, str(backend.version))


def normalize_ipa_spacing(ipa: str) -> str:
    """Collapse whitespace (including newlines) into single word separators."""
    return _WS_RE.sub(" ", ipa).strip()


@dataclass(frozen=True)
class DatasetSplit:
    train: np.ndarray
    dev: np.ndarray
    ratio: float
    seed: int


def split_corpus(ids: Sequence[int], ratio: float = 0.9, seed: int = 0) -> DatasetSplit:
    """Contiguous split: the first ``round(ratio * n)`` tokens train, the tail is dev.

    The split only ever falls between tokens. *seed* is recorded for
    provenance; the contiguous split itself does not draw random numbers.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    arr = np.asarray(ids, dtype=np.int64)
    n = len(arr)
    if n == 0:
        raise ValueError("cannot split an empty token sequence")
    n_train = int(np.floor(ratio * n + 0.5))
    if n_train >= n:
        raise ValueError(f"{n} token(s) at ratio {ratio}: dev set would be empty")
    if n_train == 0:
        raise ValueError(f"{n} token(s) at ratio {ratio}: train set would be empty")
    return DatasetSplit(arr[:n_train].copy(), arr[n_train:].copy(), ratio, seed)


def write_ids(path, ids: Sequence[int]) -> None:
    arr = np.asarray(ids)
    if arr.size and (arr.min() < 0 or arr.max() > 0xFFFF):
        raise ValueError("token ids must fit in 16 bits")
    arr.astype("<u2").tofile(path)


def read_ids(path) -> np.ndarray:
    return np.fromfile(path, dtype="<u2").astype(np.int64)


def read_manifest(path) -> list[Path]:
    base = Path(path).parent
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                p = Path(line)
                out.append(p if p.is_absolute() else base / p)
    return out


def _process_document(args) -> list[str]:
    path, backend = args
    with open(path, encoding="utf-8") as fh:
        text = clean_text(fh.read())
    ipa = normalize_ipa_spacing(phonemize(text, backend).ipa)
    return tokenize(ipa)


def ingest_documents(paths: Iterable[Path], backend, jobs: int = 1) -> list[list[str]]:
    """Clean, phonemize and tokenize each document; output follows input order."""
    work = [(p, backend) for p in paths]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_process_document, work))
    return [_process_document(w) for w in work]


def join_documents(docs: Sequence[Sequence[str]]) -> list[str]:
    """Concatenate token lists with one space token between documents."""
    out: list[str] = []
    for doc in docs:
        if not doc:
            continue
        if out:
            out.append(" ")
        out.extend(doc)
    return out


def run_ingest(manifest, out_dir, backend, ratio: float = 0.9, seed: int = 0, jobs: int = 1) -> dict:
    """Full ingest: manifest of text files -> train.bin, dev.bin, vocab.txt, provenance.json."""
    paths = read_manifest(manifest)
    if not paths:
        raise ValueError(f"manifest {manifest} lists no files")
    tokens = join_documents(ingest_documents(paths, backend, jobs))
    if not tokens:
        raise ValueError("corpus is empty after cleaning and phonemization")
    vocab = build_vocabulary(tokens)
    split = split_corpus(encode(tokens, vocab), ratio, seed)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_ids(out / "train.bin", split.train)
    write_ids(out / "dev.bin", split.dev)
    vocab.save(out / "vocab.txt")
    provenance = {
        "backend": backend.name,
        "backend_version": str(backend.version),
        "seed": seed,
        "ratio": ratio,
        "documents": [str(p) for p in paths],
        "n_tokens": len(tokens),
        "n_train": int(len(split.train)),
        "n_dev": int(len(split.dev)),
        "vocab_size": vocab.size,
        "vocab_sha256": vocab.digest(),
    }
    with open(out / "provenance.json", "w", encoding="utf-8") as fh:
        json.dump(provenance, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    return provenance
