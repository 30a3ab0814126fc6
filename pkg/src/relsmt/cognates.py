"""Cognate extraction through a pivot language, and pivot paraphrasing.

Naming follows the use case: ``x1`` is the resource-poor source language,
``x2`` the related resource-rich one, and the pivot is the shared target.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import sparse

from . import _kernels
from .align import NULL, LexProbTable, align_bitext, lexical_table, train_model1
from .corpus import Bitext, vocab_counts
from .phrases import PhraseTable

log = logging.getLogger(__name__)

PROD_THRESHOLD = 0.01
LCSR_THRESHOLD = 0.58
PARAPHRASE_THRESHOLD = 0.01
MIN_WORD_LEN = 3
N_STOPWORDS = 100


@dataclass(frozen=True)
class PivotLexicon:
    """``p_given_s[(x2 word, x1 word)]`` and ``s_given_p[(x1 word, x2 word)]``."""

    p_given_s: dict
    s_given_p: dict


@dataclass(frozen=True, order=True)
class CognatePair:
    word_x2: str
    word_x1: str
    prod: float
    lcsr: float


def _matrix(table: LexProbTable, rows: dict, cols: dict):
    r, c, v = [], [], []
    for cond, row in table.probs.items():
        if cond == NULL or cond not in rows:
            continue
        for emit, p in row.items():
            j = cols.get(emit)
            if j is not None:
                r.append(rows[cond])
                c.append(j)
                v.append(p)
    return sparse.csr_matrix((v, (r, c)), shape=(len(rows), len(cols)))


def _index(words) -> dict:
    return {w: i for i, w in enumerate(sorted(words))}


def _compose(left: LexProbTable, right: LexProbTable, left_conds, right_emits):
    """``out[a][c] = sum_b right[b][c] * left[a][b]`` over pivot words ``b``."""
    pivots = set()
    for cond in left_conds:
        pivots.update(left.probs.get(cond, {}))
    pivots &= {b for b in right.probs if b != NULL}
    a_idx = _index(left_conds)
    b_idx = _index(pivots)
    c_idx = _index(right_emits)
    prod = (_matrix(left, a_idx, b_idx) @ _matrix(right, b_idx, c_idx)).tocoo()
    a_words = sorted(a_idx)
    c_words = sorted(c_idx)
    return {(a_words[i], c_words[j]): float(v) for i, j, v in zip(prod.row, prod.col, prod.data) if v > 0.0}


def induce_pivot_lexicon(lex_x2_to_pivot, lex_pivot_to_x2, lex_x1_to_pivot, lex_pivot_to_x1) -> PivotLexicon:
    """Compose lexical tables through the pivot language.

    ``lex_x2_to_pivot`` holds Pr(pivot | x2), ``lex_pivot_to_x2`` holds
    Pr(x2 | pivot), and likewise for x1. Then
    Pr(x2 | x1) = sum_e Pr(x2 | e) Pr(e | x1) and symmetrically.
    """
    x1_words = {w for w in lex_x1_to_pivot.probs if w != NULL}
    x2_words = {w for w in lex_x2_to_pivot.probs if w != NULL}
    x2_emits = {p for row in lex_pivot_to_x2.probs.values() for p in row}
    x1_emits = {s for row in lex_pivot_to_x1.probs.values() for s in row}
    by_s = _compose(lex_x1_to_pivot, lex_pivot_to_x2, x1_words, x2_emits)  # (s, p)
    by_p = _compose(lex_x2_to_pivot, lex_pivot_to_x1, x2_words, x1_emits)  # (p, s)
    if not by_s and not by_p:
        log.warning("pivot vocabularies do not overlap; empty pivot lexicon")
    p_given_s = {(p, s): v for (s, p), v in by_s.items()}
    s_given_p = {(s, p): v for (p, s), v in by_p.items()}
    return PivotLexicon(p_given_s, s_given_p)


def prod_score(pivot: PivotLexicon, word_x2: str, word_x1: str) -> float:
    """Pr(x2 | x1) * Pr(x1 | x2); zero when either factor is missing."""
    a = pivot.p_given_s.get((word_x2, word_x1))
    b = pivot.s_given_p.get((word_x1, word_x2))
    if a is None or b is None:
        return 0.0
    return a * b


def _codepoints(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32).astype(np.int64)


def lcs_len(s1: str, s2: str) -> int:
    return int(_kernels.lcs_length(_codepoints(s1), _codepoints(s2)))


def lcsr(s1: str, s2: str) -> float:
    """Longest common subsequence ratio over Unicode code points."""
    if not s1 or not s2:
        raise ValueError("lcsr is undefined for empty strings")
    return lcs_len(s1, s2) / max(len(s1), len(s2))


def _content_word(w: str, stop: set, min_len: int) -> bool:
    return len(w) >= min_len and w not in stop and not any(ch.isdigit() for ch in w)


def filter_candidates(
    pivot: PivotLexicon,
    stopwords_x1: Iterable[str] = (),
    stopwords_x2: Iterable[str] = (),
    prod_threshold: float = PROD_THRESHOLD,
    lcsr_threshold: float = LCSR_THRESHOLD,
    min_len: int = MIN_WORD_LEN,
) -> list:
    """Scored word pairs passing the stopword, length, digit, Prod and LCSR filters."""
    if not (0.0 <= prod_threshold <= 1.0 and 0.0 <= lcsr_threshold <= 1.0):
        raise ValueError("thresholds must lie in [0, 1]")
    stop1 = set(stopwords_x1)
    stop2 = set(stopwords_x2)
    out = []
    for (p, s), a in pivot.p_given_s.items():
        b = pivot.s_given_p.get((s, p))
        if b is None:
            continue
        prod = a * b
        if prod < prod_threshold:
            continue
        if not (_content_word(p, stop2, min_len) and _content_word(s, stop1, min_len)):
            continue
        r = lcsr(p, s)
        if r >= lcsr_threshold:
            out.append(CognatePair(p, s, prod, r))
    out.sort(key=lambda c: (-c.prod, c.word_x2, c.word_x1))
    return out


def competitive_link(candidates) -> list:
    """Greedy one-to-one matching by decreasing Prod.

    Accepts ``CognatePair`` objects or ``((word_x2, word_x1), score)`` items.
    Ties are broken by ``(word_x2, word_x1)``. Returns the accepted items in
    acceptance order.
    """
    items = []
    for c in candidates:
        if isinstance(c, CognatePair):
            items.append((c.prod, c.word_x2, c.word_x1, c))
        else:
            (w2, w1), score = c
            items.append((score, w2, w1, c))
    items.sort(key=lambda it: (-it[0], it[1], it[2]))
    used2, used1 = set(), set()
    out = []
    for _, w2, w1, c in items:
        if w2 in used2 or w1 in used1:
            continue
        used2.add(w2)
        used1.add(w1)
        out.append(c)
    return out


@dataclass
class CognateConfig:
    iterations: int = 5
    prod_threshold: float = PROD_THRESHOLD
    lcsr_threshold: float = LCSR_THRESHOLD
    n_stopwords: int = N_STOPWORDS
    min_len: int = MIN_WORD_LEN
    stopwords_x1: frozenset | None = None
    stopwords_x2: frozenset | None = None
    lex_source: str = "alignment"  # or "model1"


def top_types(sentences, n: int) -> frozenset:
    counts = vocab_counts(sentences)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return frozenset(w for w, _ in ranked[:n])


def _tables(bitext: Bitext, cfg: CognateConfig):
    """(Pr(pivot | word), Pr(word | pivot)) for a word-pivot bi-text."""
    if cfg.lex_source == "model1":
        return train_model1(bitext, cfg.iterations), train_model1(bitext, cfg.iterations, reverse=True)
    if cfg.lex_source != "alignment":
        raise ValueError(f"unknown lex_source {cfg.lex_source!r}")
    aligned = align_bitext(bitext, cfg.iterations)
    return lexical_table(aligned), lexical_table(aligned, reverse=True)


def extract_cognates(bitext_x1_pivot: Bitext, bitext_x2_pivot: Bitext, config: CognateConfig | None = None) -> list:
    """Likely cognates between the source sides of two bi-texts sharing a target."""
    cfg = config or CognateConfig()
    x1_piv, piv_x1 = _tables(bitext_x1_pivot, cfg)
    x2_piv, piv_x2 = _tables(bitext_x2_pivot, cfg)
    pivot = induce_pivot_lexicon(x2_piv, piv_x2, x1_piv, piv_x1)
    stop1 = cfg.stopwords_x1 if cfg.stopwords_x1 is not None else top_types(bitext_x1_pivot.sources, cfg.n_stopwords)
    stop2 = cfg.stopwords_x2 if cfg.stopwords_x2 is not None else top_types(bitext_x2_pivot.sources, cfg.n_stopwords)
    cands = filter_candidates(pivot, stop1, stop2, cfg.prod_threshold, cfg.lcsr_threshold, cfg.min_len)
    return competitive_link(cands)


def augment_with_cognates(bitext: Bitext, pairs) -> Bitext:
    """Append every ``(source word, target word)`` as a one-word sentence pair."""
    extra = [((s,), (t,)) for s, t in pairs]
    return Bitext(bitext.pairs + tuple(extra))


def write_cognates(path, pairs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in pairs:
            fh.write(f"{c.word_x2}\t{c.word_x1}\t{c.prod:.6g}\t{c.lcsr:.6g}\n")


def read_cognates(path) -> list:
    """Read ``x2<TAB>x1[<TAB>prod<TAB>lcsr]`` lines; missing scores default to 1."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) == 2:
                fields += ["1", "1"]
            if len(fields) != 4:
                raise ValueError(f"{path}: expected 2 or 4 tab-separated fields, got {len(fields)}")
            w2, w1, prod, r = fields
            out.append(CognatePair(w2, w1, float(prod), float(r)))
    return out


# -- phrase-level pivoting ---------------------------------------------------

def pivot_paraphrases(table: PhraseTable, threshold: float = PARAPHRASE_THRESHOLD) -> dict:
    """Source paraphrase probabilities ``{(f1, f2): Pr(f2 | f1)}``.

    Pr(f2 | f1) = sum_e phi(f2 | e) phi(e | f1) over target phrases shared by
    both sources; pairs below ``threshold`` are dropped.
    """
    by_target: dict = {}
    for (f, e), fv in table.items():
        by_target.setdefault(e, []).append((f, fv.phi_fe, fv.phi_ef))
    scores: dict = {}
    for e in sorted(by_target):
        rows = by_target[e]
        if len(rows) < 2:
            continue
        for f1, _, phi_e_f1 in rows:
            for f2, phi_f2_e, _ in rows:
                if f1 != f2:
                    scores[(f1, f2)] = scores.get((f1, f2), 0.0) + phi_f2_e * phi_e_f1
    return {k: v for k, v in sorted(scores.items()) if v >= threshold}


def add_paraphrases(table: PhraseTable, paraphrases: dict) -> PhraseTable:
    """Add paraphrased source phrases as new entries.

    For every ``(f1, f2)`` with probability ``p``, each entry ``(f1, e)``
    yields ``(f2, e)`` with f1's features, unless ``(f2, e)`` already exists.
    A trailing feature holds ``p`` for added entries and 1 for original ones;
    competing paraphrases keep the most probable.
    """
    out = {k: fv._replace(extra=tuple(fv.extra) + (1.0,)) for k, fv in table.items()}
    by_source = table.by_source()
    added: dict = {}
    for (f1, f2), p in paraphrases.items():
        for e, fv in by_source.get(f1, ()):
            key = (f2, e)
            if key in table.entries:
                continue
            old = added.get(key)
            if old is None or p > old[0]:
                added[key] = (p, fv)
    for key, (p, fv) in added.items():
        out[key] = fv._replace(extra=tuple(fv.extra) + (p,))
    return PhraseTable(out, table.max_phrase_len, table.n_extra + 1)
