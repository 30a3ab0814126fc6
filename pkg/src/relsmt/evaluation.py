"""BLEU, the paired sign test, and OOV / phrase-table usage diagnostics."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

MAX_N = 4
TIE_EPS = 1e-12
UNIGRAM_FLOOR = 0.1


class EvalError(ValueError):
    pass


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_stats(hyp: Sequence[str], ref: Sequence[str]) -> np.ndarray:
    """Sufficient statistics ``[m1..m4, c1..c4, hyp_len, ref_len]``.

    ``m_n`` is the clipped n-gram match count, ``c_n`` the hypothesis
    n-gram count.
    """
    hyp = tuple(hyp)
    ref = tuple(ref)
    out = np.zeros(2 * MAX_N + 2, dtype=np.int64)
    for n in range(1, MAX_N + 1):
        h = _ngrams(hyp, n)
        r = _ngrams(ref, n)
        out[n - 1] = sum(min(c, r[g]) for g, c in h.items())
        out[MAX_N + n - 1] = max(len(hyp) - n + 1, 0)
    out[2 * MAX_N] = len(hyp)
    out[2 * MAX_N + 1] = len(ref)
    return out


@dataclass(frozen=True)
class BleuScore:
    score: float
    precisions: tuple
    brevity_penalty: float
    hyp_len: int
    ref_len: int

    def __float__(self):
        return self.score

    def render(self) -> str:
        p = " ".join(f"{100 * x:.2f}" for x in self.precisions)
        return (
            f"BLEU = {100 * self.score:.2f} ({p}) BP = {self.brevity_penalty:.4f} "
            f"hyp_len = {self.hyp_len} ref_len = {self.ref_len}"
        )


def bleu_from_stats(stats) -> BleuScore:
    m = stats[:MAX_N]
    c = stats[MAX_N:2 * MAX_N]
    hyp_len = int(stats[2 * MAX_N])
    ref_len = int(stats[2 * MAX_N + 1])
    precisions = tuple(float(mi) / ci if ci > 0 else 0.0 for mi, ci in zip(m, c))
    if hyp_len == 0:
        bp = 0.0
    elif hyp_len <= ref_len:
        bp = math.exp(1.0 - ref_len / hyp_len)
    else:
        bp = 1.0
    if hyp_len > 0 and hyp_len == ref_len and all(mi == ci for mi, ci in zip(m, c)):
        # every hypothesis n-gram matched, including corpora of short lines
        score = 1.0
    elif min(precisions) <= 0.0:
        score = 0.0
    else:
        score = bp * math.exp(sum(math.log(p) for p in precisions) / MAX_N)
    return BleuScore(score, precisions, bp, hyp_len, ref_len)


def bleu(hyps, refs) -> BleuScore:
    """Corpus BLEU with a single reference per hypothesis."""
    if len(hyps) != len(refs):
        raise EvalError(f"{len(hyps)} hypotheses but {len(refs)} references")
    total = np.zeros(2 * MAX_N + 2, dtype=np.int64)
    for h, r in zip(hyps, refs):
        total += bleu_stats(h, r)
    return bleu_from_stats(total)


def sentence_bleu(hyp, ref) -> float:
    """Sentence BLEU with add-one smoothing of the n >= 2 counts.

    A hypothesis without any unigram match is credited ``UNIGRAM_FLOOR``
    matches so that the score stays positive.
    """
    st = bleu_stats(hyp, ref)
    hyp_len = int(st[2 * MAX_N])
    ref_len = int(st[2 * MAX_N + 1])
    if hyp_len == 0:
        return 0.0
    logp = 0.0
    for n in range(MAX_N):
        m, c = st[n], st[MAX_N + n]
        if n > 0:
            m, c = m + 1, c + 1
        elif m == 0:
            m = UNIGRAM_FLOOR
        logp += math.log(m / c)
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(logp / MAX_N)


@dataclass(frozen=True)
class SignTest:
    better: int
    worse: int
    ties: int
    p_value: float

    def render(self) -> str:
        return f"better={self.better} worse={self.worse} ties={self.ties} p={self.p_value:.4g}"


def sign_test(hyps_a, hyps_b, refs) -> SignTest:
    """Paired sign test of system A against B on sentence-level BLEU.

    Ties are dropped and the two-sided exact binomial p-value (p = 0.5) is
    computed on the remaining wins and losses.
    """
    if not len(hyps_a) == len(hyps_b) == len(refs):
        raise EvalError("sign test needs equally long hypothesis and reference lists")
    better = worse = ties = 0
    for a, b, r in zip(hyps_a, hyps_b, refs):
        d = sentence_bleu(a, r) - sentence_bleu(b, r)
        if abs(d) < TIE_EPS:
            ties += 1
        elif d > 0:
            better += 1
        else:
            worse += 1
    n = better + worse
    p = 1.0 if n == 0 else float(binomtest(better, n, 0.5).pvalue)
    return SignTest(better, worse, ties, min(p, 1.0))


def oov_stats(train_src_vocab, test) -> tuple:
    """``(unknown types, unknown tokens)`` of ``test`` w.r.t. the vocabulary."""
    vocab = set(train_src_vocab)
    types = set()
    tokens = 0
    for s in test:
        for w in s:
            if w not in vocab:
                types.add(w)
                tokens += 1
    return len(types), tokens


def table_usage(table, test) -> tuple:
    """``(total, used, percent)``: entries whose source phrase occurs in test."""
    total = len(table)
    if total == 0:
        return 0, 0, 0.0
    max_len = max(len(f) for f, _ in table.entries)
    spans = set()
    for s in test:
        s = tuple(s)
        for i in range(len(s)):
            for j in range(i + 1, min(len(s), i + max_len) + 1):
                spans.add(s[i:j])
    used = sum(1 for f, _ in table.entries if f in spans)
    return total, used, 100.0 * used / total


def render_report(score: BleuScore, signtest: SignTest | None = None) -> str:
    lines = [score.render()]
    if signtest is not None:
        lines.append("sign test: " + signtest.render())
    return "\n".join(lines)
