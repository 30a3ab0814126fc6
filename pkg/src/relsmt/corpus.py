"""Sentence/bi-text types, tokenisation, corpus I/O and bi-text concatenation."""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

MAX_TOKENS = 100

Sentence = tuple  # tuple[str, ...]
Pair = tuple  # tuple[Sentence, Sentence]


class CorpusError(ValueError):
    pass


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(raw_line: str) -> Sentence:
    """Lowercase ``raw_line`` and split it into tokens.

    Leading and trailing punctuation characters of each whitespace-separated
    chunk become tokens of their own; inner punctuation (``don't``) stays.

    >>> tokenize("Hello, world!")
    ('hello', ',', 'world', '!')
    """
    out = []
    for chunk in raw_line.lower().split():
        lo, hi = 0, len(chunk)
        lead = []
        while lo < hi and _is_punct(chunk[lo]):
            lead.append(chunk[lo])
            lo += 1
        trail = []
        while hi > lo and _is_punct(chunk[hi - 1]):
            trail.append(chunk[hi - 1])
            hi -= 1
        out.extend(lead)
        if lo < hi:
            out.append(chunk[lo:hi])
        out.extend(reversed(trail))
    return tuple(out)


@dataclass(frozen=True)
class Bitext:
    pairs: tuple = ()
    dropped: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((tuple(s), tuple(t)) for s, t in self.pairs))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    @property
    def sources(self) -> list:
        return [s for s, _ in self.pairs]

    @property
    def targets(self) -> list:
        return [t for _, t in self.pairs]

    def source_vocab(self) -> set:
        return {w for s, _ in self.pairs for w in s}

    def target_vocab(self) -> set:
        return {w for _, t in self.pairs for w in t}

    def swapped(self) -> "Bitext":
        return Bitext([(t, s) for s, t in self.pairs])

    def __add__(self, other: "Bitext") -> "Bitext":
        return Bitext(self.pairs + other.pairs)


@dataclass(frozen=True)
class CombinedBitext(Bitext):
    """A bi-text built from ``k`` copies of an original plus extra data."""

    orig_len: int = 0
    k: int = 1
    layout: str = "cat"


def read_sentences(path, raw: bool = False) -> list:
    """Read one sentence per line; ``raw`` applies :func:`tokenize`."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    split = tokenize if raw else (lambda s: tuple(s.split()))
    return [split(line) for line in lines]


def write_sentences(path, sentences: Iterable[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            fh.write(" ".join(s) + "\n")


def load_bitext(src_path, tgt_path, raw: bool = False, max_tokens: int = MAX_TOKENS) -> Bitext:
    """Load a line-aligned bi-text, dropping empty and over-long pairs.

    Files are expected to be tokenised already (tokens separated by
    whitespace) unless ``raw`` is set. The number of dropped pairs is
    logged and kept on ``Bitext.dropped``.
    """
    src = read_sentences(src_path, raw=raw)
    tgt = read_sentences(tgt_path, raw=raw)
    if len(src) != len(tgt):
        raise CorpusError(
            f"line count mismatch: {src_path} has {len(src)} lines, {tgt_path} has {len(tgt)}"
        )
    return filter_pairs(zip(src, tgt), max_tokens)


def filter_pairs(pairs, max_tokens: int = MAX_TOKENS) -> Bitext:
    kept = []
    dropped = 0
    for s, t in pairs:
        if not s or not t or len(s) > max_tokens or len(t) > max_tokens:
            dropped += 1
            continue
        kept.append((s, t))
    if dropped:
        log.info("dropped %d sentence pairs (empty or over %d tokens)", dropped, max_tokens)
    return Bitext(kept, dropped=dropped)


def write_bitext(bitext: Bitext, src_path, tgt_path) -> None:
    write_sentences(src_path, bitext.sources)
    write_sentences(tgt_path, bitext.targets)


def concat(orig: Bitext, extra: Bitext, k: int = 1, layout: str = "rep") -> CombinedBitext:
    """Concatenate ``k`` copies of ``orig`` followed by ``extra``.

    ``layout="cat"`` is plain concatenation and forces ``k=1``.
    """
    if layout not in ("rep", "cat"):
        raise CorpusError(f"unknown layout {layout!r}")
    if len(orig) == 0:
        raise CorpusError("original bi-text is empty")
    if layout == "cat":
        k = 1
    if k < 1:
        raise CorpusError(f"k must be a positive integer, got {k}")
    pairs = orig.pairs * k + extra.pairs
    return CombinedBitext(pairs, orig_len=len(orig), k=k, layout=layout)


def select_k(orig_pairs: int, extra_pairs: int) -> int:
    """Number of copies of the original that roughly balances the extra data."""
    if orig_pairs <= 0:
        raise CorpusError("orig_pairs must be positive")
    if extra_pairs < 0:
        raise CorpusError("extra_pairs must be non-negative")
    return max(1, round(extra_pairs / orig_pairs))


def vocab_counts(sentences: Iterable[Sequence[str]]) -> dict:
    counts: dict = {}
    for s in sentences:
        for w in s:
            counts[w] = counts.get(w, 0) + 1
    return counts
