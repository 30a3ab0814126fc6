"""Independent reference implementations used to cross-check the package.

Everything here is written from the textbook definitions with plain loops
and without importing the code under test's internals.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter


def lcs_dp(a: str, b: str) -> int:
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[-1][-1]


def greedy_matching(weights: dict) -> set:
    """Reference competitive linking over ``{(x2, x1): score}``."""
    remaining = dict(weights)
    out = set()
    while remaining:
        best = None
        for (a, b), s in remaining.items():
            if best is None or s > best[0] or (s == best[0] and (a, b) < best[1]):
                best = (s, (a, b))
        a, b = best[1]
        out.add((a, b))
        remaining = {k: v for k, v in remaining.items() if k[0] != a and k[1] != b}
    return out


def consistent_spans(n_src: int, n_tgt: int, links, max_len: int) -> set:
    """All span pairs that contain a link and let no link cross their border."""
    links = set(links)
    out = set()
    for s0 in range(n_src):
        for s1 in range(s0 + 1, min(n_src, s0 + max_len) + 1):
            for t0 in range(n_tgt):
                for t1 in range(t0 + 1, min(n_tgt, t0 + max_len) + 1):
                    inside = False
                    ok = True
                    for i, j in links:
                        in_s = s0 <= i < s1
                        in_t = t0 <= j < t1
                        if in_s != in_t:
                            ok = False
                            break
                        inside = inside or in_s
                    if ok and inside:
                        out.add(((s0, s1), (t0, t1)))
    return out


def binomial_two_sided(k: int, n: int) -> float:
    """Exact two-sided sign-test p-value with p = 1/2."""
    if n == 0:
        return 1.0
    probs = [math.comb(n, i) / 2 ** n for i in range(n + 1)]
    pk = probs[k]
    return min(1.0, sum(p for p in probs if p <= pk * (1 + 1e-7)))


def clipped_precision(hyp, ref, n: int):
    h = Counter(tuple(hyp[i:i + n]) for i in range(len(hyp) - n + 1))
    r = Counter(tuple(ref[i:i + n]) for i in range(len(ref) - n + 1))
    return sum(min(c, r[g]) for g, c in h.items()), max(len(hyp) - n + 1, 0)


def smoothed_sentence_bleu(hyp, ref, unigram_floor: float = 0.1) -> float:
    if not hyp:
        return 0.0
    logs = []
    for n in range(1, 5):
        m, c = clipped_precision(hyp, ref, n)
        if n == 1:
            m = m if m > 0 else unigram_floor
        else:
            m, c = m + 1, c + 1
        logs.append(math.log(m / c))
    bp = 1.0 if len(hyp) > len(ref) else math.exp(1 - len(ref) / len(hyp))
    return bp * math.exp(sum(logs) / 4)


def model1_em(pairs, iterations: int, null_prior: float = 0.01):
    """Plain-loop IBM Model 1 with a NULL word; returns (t, loglik history)."""
    null = "<null>"
    t: dict = {}
    for s, e in pairs:
        for c in list(s) + [null]:
            for w in e:
                t.setdefault(c, {})[w] = 1.0
    for c in t:
        z = len(t[c])
        for w in t[c]:
            t[c][w] = 1.0 / z

    def loglik():
        total = 0.0
        for s, e in pairs:
            for w in e:
                p = (1 - null_prior) / len(s) * sum(t[c][w] for c in s) + null_prior * t[null][w]
                total += math.log(p)
        return total

    history = [loglik()]
    for _ in range(iterations):
        counts: dict = {}
        for s, e in pairs:
            for w in e:
                parts = [((1 - null_prior) / len(s) * t[c][w], c) for c in s]
                parts.append((null_prior * t[null][w], null))
                z = sum(p for p, _ in parts)
                for p, c in parts:
                    counts.setdefault(c, {})
                    counts[c][w] = counts[c].get(w, 0.0) + p / z
        t = {c: {w: v / sum(row.values()) for w, v in row.items()} for c, row in counts.items()}
        history.append(loglik())
    return t, history


def exhaustive_decode(sentence, tables, lm, weights, unk_weight_index: int = 3):
    """Score every segmentation and ordering of ``sentence``.

    ``tables`` is a list of PhraseTable; features follow the decoder layout
    (lm, word penalty, distortion, unknown words, then each table's logs).
    Returns ``{output: best score}``.
    """
    n = len(sentence)
    w = list(weights.values)
    offsets = []
    base = 4
    for t in tables:
        offsets.append(base)
        base += t.n_features
    options = []
    for i in range(n):
        for j in range(i + 1, n + 1):
            f = tuple(sentence[i:j])
            for t, off in zip(tables, offsets):
                if j - i > t.max_phrase_len:
                    continue
                for (src, tgt), fv in t.items():
                    if src == f:
                        logs = [math.log(max(v, 1e-10)) for v in fv.values()]
                        options.append((i, j, tgt, {off + k: v for k, v in enumerate(logs)}))
    covered_single = {(o[0], o[1]) for o in options}
    for i in range(n):
        if (i, i + 1) not in covered_single:
            options.append((i, i + 1, (sentence[i],), {unk_weight_index: -1.0}))
    best: dict = {}

    def rec(cov, last_end, out, feats, dist):
        if cov == (1 << n) - 1:
            f = dict(feats)
            f[0] = lm.logprob(out)
            f[1] = -len(out)
            f[2] = -dist
            score = sum(w[k] * v for k, v in f.items())
            if out not in best or score > best[out]:
                best[out] = score
            return
        for i, j, tgt, sparse in options:
            mask = ((1 << (j - i)) - 1) << i
            if cov & mask:
                continue
            new = dict(feats)
            for k, v in sparse.items():
                new[k] = new.get(k, 0.0) + v
            rec(cov | mask, j - 1, out + tgt, new, dist + abs(i - last_end - 1))

    if n == 0:
        return {(): w[0] * lm.logprob(())}
    rec(0, -1, (), {}, 0)
    return best


def brute_substring_usage(table, test) -> int:
    used = 0
    for f, _ in table.entries:
        hit = False
        for s in test:
            for i in range(len(s) - len(f) + 1):
                if tuple(s[i:i + len(f)]) == f:
                    hit = True
                    break
            if hit:
                break
        used += hit
    return used


def all_permutations(seq):
    return list(itertools.permutations(seq))
