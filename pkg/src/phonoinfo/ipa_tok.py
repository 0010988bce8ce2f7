"""Split IPA strings into phoneme tokens and map tokens to integer ids."""

from __future__ import annotations

import hashlib
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Sequence

SPACE = " "

TIE_BARS = frozenset("͜͡")
STRESS_MARKS = frozenset("ˈˌ")
# modifier letters that belong to the preceding phoneme
_ATTACHING_MODIFIERS = frozenset("ːˑʰʱʲʷˠˤⁿˡʼ˞̃") | frozenset("˥˦˧˨˩")

VOWEL_BASES = frozenset("iyɨʉɯuɪʏʊeøɘɵɤoəɚɛœɜɞʌɔæɐaɶɑɒ")


class TokenizationError(ValueError):
    def __init__(self, char: str, offset: int, reason: str = "not an IPA character"):
        self.char = char
        self.offset = offset
        super().__init__(f"U+{ord(char):04X} {char!r} at offset {offset}: {reason}")


class VocabularyError(ValueError):
    pass


def _is_base(ch: str) -> bool:
    cat = unicodedata.category(ch)
    return cat in ("Ll", "Lu", "Lo") or ch == "ʔ"


def _attaches(ch: str) -> bool:
    return unicodedata.category(ch) in ("Mn", "Me") or ch in _ATTACHING_MODIFIERS or (
        unicodedata.category(ch) == "Lm" and ch not in STRESS_MARKS
    )


def tokenize(ipa: str) -> list[str]:
    """Split an IPA string into phoneme tokens.

    A token starts at each base letter. Combining diacritics, length marks and
    superscript modifiers stick to the current token; a tie bar also pulls in
    the base letter that follows it. Stress marks are kept on the phoneme
    they precede. Every space is its own token, so ``"".join(tokenize(s)) == s``.

    >>> tokenize("pat͡ʂka")
    ['p', 'a', 't͡ʂ', 'k', 'a']
    >>> tokenize("na dɔm")
    ['n', 'a', ' ', 'd', 'ɔ', 'm']
    """
    tokens: list[str] = []
    current = ""
    prefix = ""          # pending stress marks
    prefix_at = 0
    join_next = False    # a tie bar was just seen

    for i, ch in enumerate(ipa):
        if ch == SPACE:
            if join_next:
                raise TokenizationError(ch, i, "tie bar not followed by a phoneme")
            if prefix:
                raise TokenizationError(prefix[0], prefix_at, "stress mark not followed by a phoneme")
            if current:
                tokens.append(current)
                current = ""
            tokens.append(SPACE)
        elif ch in STRESS_MARKS:
            if join_next:
                raise TokenizationError(ch, i, "tie bar not followed by a phoneme")
            if not prefix:
                prefix_at = i
            prefix += ch
        elif ch in TIE_BARS:
            if not current:
                raise TokenizationError(ch, i, "tie bar without a preceding phoneme")
            current += ch
            join_next = True
        elif _attaches(ch):
            if not current:
                raise TokenizationError(ch, i, "modifier without a preceding phoneme")
            current += ch
        elif _is_base(ch):
            if join_next:
                current += ch
                join_next = False
            else:
                if current:
                    tokens.append(current)
                current = prefix + ch
                prefix = ""
        else:
            raise TokenizationError(ch, i)

    if join_next:
        raise TokenizationError(ipa[-1], len(ipa) - 1, "tie bar not followed by a phoneme")
    if prefix:
        raise TokenizationError(prefix[0], prefix_at, "stress mark not followed by a phoneme")
    if current:
        tokens.append(current)
    return tokens


def is_vowel(token: str) -> bool:
    """True when the token's base letter is an IPA vowel."""
    for ch in token:
        if ch in STRESS_MARKS:
            continue
        return unicodedata.normalize("NFD", ch)[0] in VOWEL_BASES
    return False


@dataclass(frozen=True)
class Vocabulary:
    """Dense bijection between token texts and ids ``0 .. size-1``."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            raise VocabularyError("duplicate tokens in vocabulary")
        for t in self.tokens:
            if not t or "\n" in t:
                raise VocabularyError(f"invalid token {t!r}")
        object.__setattr__(self, "_ids", {t: i for i, t in enumerate(self.tokens)})

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    @property
    def id_of(self) -> dict[str, int]:
        return dict(self._ids)

    @property
    def token_of(self) -> dict[int, str]:
        return dict(enumerate(self.tokens))

    def id(self, token: str) -> int:
        return self._ids[token]

    @property
    def space_id(self) -> int | None:
        return self._ids.get(SPACE)

    def to_text(self) -> str:
        return "".join(t + "\n" for t in self.tokens)

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    @classmethod
    def from_text(cls, text: str) -> "Vocabulary":
        if text.startswith("﻿"):
            text = text[1:]
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return cls(tuple(line.rstrip("\r") for line in lines))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8", newline="") as fh:
            return cls.from_text(fh.read())


def build_vocabulary(tokens: Iterable[str]) -> Vocabulary:
    """Vocabulary of all distinct tokens, ordered by codepoint sequence."""
    distinct = set(tokens)
    if not distinct:
        raise VocabularyError("cannot build a vocabulary from an empty corpus")
    return Vocabulary(tuple(sorted(distinct)))


def encode(tokens: Sequence[str], vocab: Vocabulary) -> list[int]:
    ids = vocab._ids
    out = []
    for pos, tok in enumerate(tokens):
        try:
            out.append(ids[tok])
        except KeyError:
            raise VocabularyError(f"token {tok!r} at position {pos} is not in the vocabulary") from None
    return out


def decode_tokens(ids: Sequence[int], vocab: Vocabulary) -> list[str]:
    n = vocab.size
    out = []
    for pos, i in enumerate(ids):
        i = int(i)
        if not 0 <= i < n:
            raise VocabularyError(f"id {i} at position {pos} out of range for vocabulary of size {n}")
        out.append(vocab.tokens[i])
    return out


def decode(ids: Sequence[int], vocab: Vocabulary) -> str:
    return "".join(decode_tokens(ids, vocab))
