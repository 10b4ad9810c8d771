"""Grapheme-to-phoneme conversion and phoneme-level intelligibility scores.

An utterance is represented as a flat sequence of stress-free ARPAbet
symbols.  Recognition of a perceived transcript against a target is scored
as one minus the length-normalized phoneme edit distance, and sentence
intelligibility is the mean of that rate over all listening instances.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import LexiconError, PararankError

# The 39-symbol stress-free ARPAbet inventory.
ARPABET = frozenset(
    "AA AE AH AO AW AY B CH D DH EH ER EY F G HH IH IY JH K L M N NG "
    "OW OY P R S SH T TH UH UW V W Y Z ZH".split()
)

_STRESS_RE = re.compile(r"[0-2]$")
_PLACEHOLDER_RE = re.compile(r"\(\s*\.{2,}\s*\)|\.{2,}")
_TOKEN_KEEP_RE = re.compile(r"[^a-z0-9' ]")
_DIGITS_RE = re.compile(r"^[0-9]+$")


@dataclass(frozen=True)
class PhonemeSequence:
    """Ordered stress-free ARPAbet symbols for one utterance."""

    phonemes: tuple[str, ...]
    source_text: str = ""

    def __post_init__(self):
        bad = [p for p in self.phonemes if p not in ARPABET]
        if bad:
            raise PararankError(f"symbols outside the ARPAbet inventory: {bad}")

    def __len__(self) -> int:
        return len(self.phonemes)

    def __iter__(self):
        return iter(self.phonemes)

    def __str__(self) -> str:
        return " ".join(self.phonemes)

    @classmethod
    def from_symbols(cls, symbols: Iterable[str], source_text: str = "") -> "PhonemeSequence":
        """Build from raw symbols, stripping stress digits (``AH0`` -> ``AH``)."""
        cleaned = tuple(_STRESS_RE.sub("", s) for s in symbols if s)
        return cls(cleaned, source_text)


@dataclass(frozen=True)
class Lexicon:
    """Word pronunciations plus ordered letter-to-phoneme fallback rules.

    Lookup is case-insensitive.  Each word maps to one or more
    pronunciations; the first one listed wins during conversion.  Words
    missing from the table are spelled out with the fallback rules using
    longest-match scanning.
    """

    entries: Mapping[str, tuple[tuple[str, ...], ...]]
    fallback_rules: tuple[tuple[str, tuple[str, ...]], ...] = ()
    _rules_by_first: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        by_first: dict[str, list[tuple[str, tuple[str, ...]]]] = {}
        for pattern, phones in self.fallback_rules:
            by_first.setdefault(pattern[0], []).append((pattern, phones))
        # longest pattern first; file order breaks ties
        for group in by_first.values():
            group.sort(key=lambda r: -len(r[0]))
        object.__setattr__(self, "_rules_by_first", by_first)

    def lookup(self, word: str) -> tuple[tuple[str, ...], ...] | None:
        return self.entries.get(word.lower())

    def spell_out(self, word: str) -> tuple[str, ...]:
        """Apply the fallback rules left to right, longest match first."""
        out: list[str] = []
        i = 0
        while i < len(word):
            for pattern, phones in self._rules_by_first.get(word[i], ()):
                if word.startswith(pattern, i):
                    out.extend(phones)
                    i += len(pattern)
                    break
            else:
                i += 1  # no rule for this character; skip it
        return tuple(out)

    @classmethod
    def load(cls, dict_path: str | Path, rules_path: str | Path | None = None) -> "Lexicon":
        """Read a CMU-style dictionary and, optionally, a fallback rule table.

        Dictionary lines look like ``WORD  PH1 PH2 ...``; ``WORD(1)`` marks an
        alternate pronunciation and lines starting with ``;;;`` are comments.
        """
        entries: dict[str, list[tuple[str, ...]]] = {}
        text = Path(dict_path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith(";;;"):
                continue
            parts = line.split()
            if len(parts) < 2:
                raise LexiconError(f"{dict_path}:{lineno}: malformed entry {line!r}")
            word = re.sub(r"\(\d+\)$", "", parts[0]).lower()
            phones = tuple(_STRESS_RE.sub("", p) for p in parts[1:])
            bad = [p for p in phones if p not in ARPABET]
            if bad:
                raise LexiconError(f"{dict_path}:{lineno}: unknown phonemes {bad}")
            entries.setdefault(word, []).append(phones)
        rules: list[tuple[str, tuple[str, ...]]] = []
        if rules_path is not None:
            for lineno, line in enumerate(Path(rules_path).read_text(encoding="utf-8").splitlines(), 1):
                line = line.rstrip()
                if not line or line.startswith("#"):
                    continue
                pattern, _, phones_str = line.partition("\t")
                if not pattern:
                    raise LexiconError(f"{rules_path}:{lineno}: malformed rule {line!r}")
                phones = tuple(phones_str.split())
                bad = [p for p in phones if p not in ARPABET]
                if bad:
                    raise LexiconError(f"{rules_path}:{lineno}: unknown phonemes {bad}")
                rules.append((pattern.lower(), phones))
        return cls({w: tuple(ps) for w, ps in entries.items()}, tuple(rules))


_UNITS = "zero one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen sixteen seventeen eighteen nineteen".split()
_TENS = "zero ten twenty thirty forty fifty sixty seventy eighty ninety".split()


def _number_words(n: int) -> list[str]:
    """Spell out a non-negative integer (used for digit tokens)."""
    if n < 20:
        return [_UNITS[n]]
    if n < 100:
        tens, rest = divmod(n, 10)
        return [_TENS[tens]] + (_number_words(rest) if rest else [])
    if n < 1000:
        h, rest = divmod(n, 100)
        return [_UNITS[h], "hundred"] + (_number_words(rest) if rest else [])
    for scale, name in ((10**9, "billion"), (10**6, "million"), (10**3, "thousand")):
        if n >= scale:
            head, rest = divmod(n, scale)
            return _number_words(head) + [name] + (_number_words(rest) if rest else [])
    raise AssertionError


def normalize_tokens(text: str) -> list[str]:
    """Lowercase, drop ``(...)`` placeholders, strip punctuation, spell digits.

    Apostrophes inside words are kept so contractions resolve in the lexicon.
    """
    text = text.lower()
    text = _PLACEHOLDER_RE.sub(" ", text)
    text = re.sub(r"[-–—_/]", " ", text)
    text = _TOKEN_KEEP_RE.sub(" ", text)
    tokens: list[str] = []
    for tok in text.split():
        tok = tok.strip("'")
        if not tok:
            continue
        if _DIGITS_RE.match(tok):
            tokens.extend(_number_words(int(tok)))
        else:
            tokens.append(tok)
    return tokens


def g2p(text: str, lexicon: Lexicon) -> PhonemeSequence:
    """Convert text to a flat phoneme sequence.

    In-lexicon words take their first listed pronunciation; everything else
    is spelled out with the fallback rules.  Word-level phoneme lists are
    concatenated with no boundary markers.
    """
    phones: list[str] = []
    for token in normalize_tokens(text):
        prons = lexicon.lookup(token)
        if prons:
            phones.extend(prons[0])
        else:
            phones.extend(lexicon.spell_out(token))
    return PhonemeSequence(tuple(phones), text)


def levenshtein(a: Sequence[str] | PhonemeSequence, b: Sequence[str] | PhonemeSequence) -> int:
    """Edit distance with unit cost for insertions, deletions and substitutions."""
    xs = tuple(a)
    ys = tuple(b)
    if len(xs) < len(ys):
        xs, ys = ys, xs
    prev = list(range(len(ys) + 1))
    for i, x in enumerate(xs, 1):
        cur = [i] + [0] * len(ys)
        for j, y in enumerate(ys, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def recog_rate_exact(target: PhonemeSequence, perceived: PhonemeSequence) -> Fraction:
    """Recognition rate as an exact rational (floored at zero)."""
    if len(target) == 0:
        raise PararankError("undefined recognition rate: empty target")
    rate = 1 - Fraction(levenshtein(target, perceived), len(target))
    return max(rate, Fraction(0))


def recog_rate(target: PhonemeSequence, perceived: PhonemeSequence) -> float:
    """Phoneme recognition rate in [0, 1] of a perceived transcript."""
    return float(recog_rate_exact(target, perceived))


def sent_int_exact(target: PhonemeSequence, perceived: Sequence[PhonemeSequence]) -> Fraction:
    if not perceived:
        raise PararankError("sentence intelligibility needs at least one listening instance")
    total = sum((recog_rate_exact(target, p) for p in perceived), Fraction(0))
    return total / len(perceived)


def sent_int(target: PhonemeSequence, perceived: Sequence[PhonemeSequence]) -> float:
    """Mean recognition rate of a target across its listening instances."""
    return float(sent_int_exact(target, perceived))
