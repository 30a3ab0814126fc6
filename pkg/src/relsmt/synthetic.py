"""Synthetic related-language corpora with known ground truth.

A target language Y is sampled from a Zipf-weighted bigram grammar. X1 is a
word-for-word relabelling of Y. X2 is X1 after systematic spelling rules,
with a fraction of the vocabulary replaced by unrelated words and a few
false friends (an X2 word spelled like the X1 word for something else).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .corpus import Bitext, write_bitext, write_sentences

DEFAULT_RULES = ("suffix:cao>cion", "suffix:dade>dad", "char:v>b")
LETTERS = "abcdefghilmnoprstuvz"
SUFFIXES = ("cao", "dade", "mente", "oso", "ar")


class SyntheticError(ValueError):
    pass


@dataclass(frozen=True)
class Rule:
    kind: str  # "suffix" or "char"
    old: str
    new: str

    def apply(self, word: str) -> str:
        if self.kind == "suffix":
            if word.endswith(self.old) and len(word) > len(self.old):
                return word[: len(word) - len(self.old)] + self.new
            return word
        return word.replace(self.old, self.new)


def parse_rule(spec: str) -> Rule:
    """``"suffix:cao>cion"`` or ``"char:v>b"``."""
    try:
        kind, body = spec.split(":", 1)
        old, new = body.split(">", 1)
    except ValueError:
        raise SyntheticError(f"bad rule {spec!r}; expected kind:old>new") from None
    kind = kind.strip()
    if kind not in ("suffix", "char"):
        raise SyntheticError(f"unknown rule kind {kind!r}")
    if not old:
        raise SyntheticError(f"rule {spec!r} has an empty left side")
    return Rule(kind, old, new)


@dataclass
class SyntheticCorpora:
    orig: Bitext  # X1-Y
    extra: Bitext  # X2-Y
    dev: Bitext  # X1-Y
    test: Bitext  # X1-Y
    mono: list  # Y sentences
    lex_x1: dict  # Y word -> X1 word
    lex_x2: dict  # Y word -> X2 word
    cognates: dict  # X2 word -> X1 word, for true cognates
    false_friends: dict  # X2 word -> X1 word spelled the same but meaning differently

    def write(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        j = lambda name: os.path.join(directory, name)  # noqa: E731
        write_bitext(self.orig, j("orig.x1"), j("orig.y"))
        write_bitext(self.extra, j("extra.x2"), j("extra.y"))
        write_bitext(self.dev, j("dev.x1"), j("dev.y"))
        write_bitext(self.test, j("test.x1"), j("test.y"))
        write_sentences(j("mono.y"), self.mono)
        with open(j("cognates.tsv"), "w", encoding="utf-8") as fh:
            for w2 in sorted(self.cognates):
                fh.write(f"{w2}\t{self.cognates[w2]}\n")


def _fresh_word(rng, used: set, suffix_prob: float = 0.0) -> str:
    while True:
        n = int(rng.integers(3, 8))
        w = "".join(LETTERS[i] for i in rng.integers(0, len(LETTERS), size=n))
        if rng.random() < suffix_prob:
            w += SUFFIXES[int(rng.integers(0, len(SUFFIXES)))]
        if w not in used:
            used.add(w)
            return w


class _Grammar:
    def __init__(self, rng, vocab_size: int, n_successors: int, zipf_s: float):
        ranks = np.arange(1, vocab_size + 1, dtype=np.float64)
        self.p = ranks ** -zipf_s
        self.p /= self.p.sum()
        self.succ = []
        self.succ_p = []
        for _ in range(vocab_size):
            s = rng.choice(vocab_size, size=n_successors, replace=False, p=self.p)
            w = self.p[s] * rng.uniform(0.5, 1.5, size=n_successors)
            self.succ.append(s)
            self.succ_p.append(w / w.sum())
        self.vocab_size = vocab_size
        self.cdf = np.cumsum(self.p)
        self.succ_cdf = [np.cumsum(w) for w in self.succ_p]

    def sentence(self, rng, lo: int, hi: int) -> list:
        n = int(rng.integers(lo, hi + 1))
        u = rng.random(2 * n)
        out = [self._draw(self.cdf, u[0])]
        for k in range(1, n):
            prev = out[-1]
            if u[2 * k - 1] < 0.8:
                out.append(int(self.succ[prev][self._draw(self.succ_cdf[prev], u[2 * k])]))
            else:
                out.append(self._draw(self.cdf, u[2 * k]))
        return out

    @staticmethod
    def _draw(cdf, x) -> int:
        return min(int(np.searchsorted(cdf, x, side="right")), cdf.shape[0] - 1)


def gen_synthetic(
    seed: int = 0,
    n_orig: int = 1000,
    n_extra: int = 10000,
    n_test: int = 200,
    n_dev: int = 200,
    n_mono: int | None = None,
    rules=DEFAULT_RULES,
    substitution_rate: float = 0.2,
    n_false_friends: int = 5,
    vocab_size: int = 2000,
    sent_len: tuple = (4, 12),
    zipf_s: float = 1.0,
) -> SyntheticCorpora:
    """Sample the whole bundle from one seed; the same seed gives the same output."""
    for name, v in (("n_orig", n_orig), ("n_extra", n_extra), ("n_test", n_test), ("n_dev", n_dev)):
        if v < 1:
            raise SyntheticError(f"{name} must be >= 1")
    if not 0.0 <= substitution_rate < 1.0:
        raise SyntheticError("substitution_rate must lie in [0, 1)")
    parsed = [r if isinstance(r, Rule) else parse_rule(r) for r in rules]
    rng = np.random.default_rng(seed)
    grammar = _Grammar(rng, vocab_size, min(20, vocab_size), zipf_s)

    used_y: set = set()
    y_words = [_fresh_word(rng, used_y) for _ in range(vocab_size)]
    used_x1: set = set()
    x1_words = [_fresh_word(rng, used_x1, suffix_prob=0.3) for _ in range(vocab_size)]

    x2_words = []
    for w in x1_words:
        for r in parsed:
            w = r.apply(w)
        x2_words.append(w)
    used_x2 = set(used_x1)
    n_sub = int(round(substitution_rate * vocab_size))
    substituted = set(int(i) for i in rng.choice(vocab_size, size=n_sub, replace=False)) if n_sub else set()

    false_friends = {}
    top = list(range(min(50, vocab_size)))
    rng.shuffle(top)
    n_ff = min(n_false_friends, len(top) // 2)
    for a in range(n_ff):
        u, v = top[2 * a], top[2 * a + 1]
        substituted.discard(u)
        false_friends[u] = v
        substituted.add(v)
    taken: dict = {}
    for u, v in false_friends.items():
        x2_words[u] = x1_words[v]
        taken[x1_words[v]] = u
    used_x2.update(x2_words)
    for i in sorted(substituted):
        x2_words[i] = _fresh_word(rng, used_x2)
    # spelling rules can merge two words; keep the X2 lexicon one-to-one
    seen: dict = dict(taken)
    for i, w in enumerate(x2_words):
        if i in false_friends:
            continue
        if w in seen and seen[w] != i:
            x2_words[i] = _fresh_word(rng, used_x2)
            substituted.add(i)
        seen[x2_words[i]] = i

    lo, hi = sent_len
    if n_mono is None:
        n_mono = n_orig + n_extra

    def sample(n):
        return [grammar.sentence(rng, lo, hi) for _ in range(n)]

    def render(sents, words):
        return [tuple(words[i] for i in s) for s in sents]

    ys_orig, ys_extra, ys_dev, ys_test, ys_mono = (sample(n) for n in (n_orig, n_extra, n_dev, n_test, n_mono))
    orig = Bitext(tuple(zip(render(ys_orig, x1_words), render(ys_orig, y_words))))
    extra = Bitext(tuple(zip(render(ys_extra, x2_words), render(ys_extra, y_words))))
    dev = Bitext(tuple(zip(render(ys_dev, x1_words), render(ys_dev, y_words))))
    test = Bitext(tuple(zip(render(ys_test, x1_words), render(ys_test, y_words))))
    mono = render(ys_mono, y_words)

    cognates = {
        x2_words[i]: x1_words[i]
        for i in range(vocab_size)
        if i not in substituted and i not in false_friends
    }
    ff = {x2_words[u]: x1_words[u] for u in false_friends}
    return SyntheticCorpora(
        orig, extra, dev, test, mono,
        dict(zip(y_words, x1_words)), dict(zip(y_words, x2_words)), cognates, ff,
    )


def gen_cognate_pairs(seed: int = 0, n: int = 1000, rules=DEFAULT_RULES, suffix_prob: float = 0.5) -> list:
    """Distinct ``(x2 word, x1 word)`` pairs where x2 = rules applied to x1.

    About ``suffix_prob`` of the x1 words end in one of :data:`SUFFIXES`, so
    suffix rules fire on a known share of the data.
    """
    parsed = [r if isinstance(r, Rule) else parse_rule(r) for r in rules]
    rng = np.random.default_rng(seed)
    used: set = set()
    seen_x2: set = set()
    out = []
    while len(out) < n:
        w1 = _fresh_word(rng, used, suffix_prob)
        w2 = w1
        for r in parsed:
            w2 = r.apply(w2)
        if w2 in seen_x2:
            continue
        seen_x2.add(w2)
        out.append((w2, w1))
    return out
