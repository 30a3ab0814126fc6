"""Phrase-pair extraction and scored phrase tables."""

from __future__ import annotations

import math
from typing import NamedTuple

from .align import NULL, AlignedBitext, LexProbTable, lexical_table

PENALTY = math.e
MAX_LEN = 7
CHAR_MAX_LEN = 10
PRUNE_K = 20
LEX_FLOOR = 1e-7


class PhraseTableError(ValueError):
    pass


class FeatureVector(NamedTuple):
    phi_fe: float
    lex_fe: float
    phi_ef: float
    lex_ef: float
    penalty: float = PENALTY
    extra: tuple = ()

    @property
    def probs(self) -> tuple:
        return (self.phi_fe, self.lex_fe, self.phi_ef, self.lex_ef)

    def values(self) -> tuple:
        return (self.phi_fe, self.lex_fe, self.phi_ef, self.lex_ef, self.penalty) + tuple(self.extra)


BASE_FEATURES = ("phi_fe", "lex_fe", "phi_ef", "lex_ef", "penalty")


class PhraseTable:
    """Map ``(source phrase, target phrase) -> FeatureVector``.

    Phrases are tuples of tokens. ``n_extra`` is the number of trailing
    extra features every entry carries.
    """

    def __init__(self, entries: dict | None = None, max_phrase_len: int = MAX_LEN, n_extra: int | None = None):
        self.entries = dict(entries or {})
        self.max_phrase_len = max_phrase_len
        if n_extra is None:
            n_extra = len(next(iter(self.entries.values())).extra) if self.entries else 0
        self.n_extra = n_extra
        self._by_source = None

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return key in self.entries

    def __getitem__(self, key):
        return self.entries[key]

    def __iter__(self):
        return iter(self.entries)

    def items(self):
        return self.entries.items()

    def __eq__(self, other):
        return isinstance(other, PhraseTable) and self.entries == other.entries

    def __repr__(self):
        return f"PhraseTable({len(self)} entries, max_len={self.max_phrase_len}, n_extra={self.n_extra})"

    @property
    def n_features(self) -> int:
        return len(BASE_FEATURES) + self.n_extra

    def by_source(self) -> dict:
        """Source phrase -> list of ``(target, FeatureVector)``, targets sorted."""
        if self._by_source is None:
            idx: dict = {}
            for (f, e), fv in self.entries.items():
                idx.setdefault(f, []).append((e, fv))
            for opts in idx.values():
                opts.sort()
            self._by_source = idx
        return self._by_source

    def sources(self) -> set:
        return {f for f, _ in self.entries}

    def rounded(self) -> "PhraseTable":
        """Copy with every feature rounded the way the text format stores it."""
        def r(x):
            return float(f"{x:.6g}")

        entries = {
            k: FeatureVector(*(r(v) for v in fv[:5]), tuple(r(v) for v in fv.extra))
            for k, fv in self.entries.items()
        }
        return PhraseTable(entries, self.max_phrase_len, self.n_extra)


# -- extraction ------------------------------------------------------------

def extract_phrases(pair, alignment, max_len: int = MAX_LEN) -> set:
    """All alignment-consistent span pairs up to ``max_len`` tokens per side.

    Spans are half-open ``(start, end)`` index pairs. A span pair is kept
    when it contains at least one link and no link leaves it on either side;
    unaligned target words at the boundaries are absorbed.
    """
    src, tgt = pair
    ls, lt = len(src), len(tgt)
    s2t: list = [[] for _ in range(ls)]
    t2s: list = [[] for _ in range(lt)]
    for i, j in alignment:
        s2t[i].append(j)
        t2s[j].append(i)
    out = set()
    for s0 in range(ls):
        t_min, t_max = lt, -1
        for s1 in range(s0, min(ls, s0 + max_len)):
            for j in s2t[s1]:
                if j < t_min:
                    t_min = j
                if j > t_max:
                    t_max = j
            if t_max < 0 or t_max - t_min + 1 > max_len:
                continue
            if any(i < s0 or i > s1 for j in range(t_min, t_max + 1) for i in t2s[j]):
                continue
            lo = t_min
            while True:
                hi = t_max
                while hi - lo + 1 <= max_len:
                    out.add(((s0, s1 + 1), (lo, hi + 1)))
                    hi += 1
                    if hi >= lt or t2s[hi]:
                        break
                lo -= 1
                if lo < 0 or t2s[lo] or t_max - lo + 1 > max_len:
                    break
    return out


def _word_factors(cond_words, emit_words, links, table: LexProbTable) -> list:
    # links: (cond index, emit index); one factor per emitted word
    linked: dict = {}
    for c, e in sorted(links):
        linked.setdefault(e, []).append(c)
    out = []
    for e, word in enumerate(emit_words):
        cs = linked.get(e)
        if cs:
            out.append(sum(table.prob(cond_words[c], word, LEX_FLOOR) for c in cs) / len(cs))
        else:
            out.append(table.prob(NULL, word, LEX_FLOOR))
    return out


def _lex_weight(cond_words, emit_words, links, table: LexProbTable) -> float:
    w = 1.0
    for x in _word_factors(cond_words, emit_words, links, table):
        w *= x
    return w


def lexical_weights(pair, links, lex_s2t: LexProbTable, lex_t2s: LexProbTable):
    """``(lex_fe, lex_ef)`` of a phrase pair given its internal links.

    Each word's lexical probability is averaged over the words it links to,
    NULL when unlinked, and the per-word values are multiplied.
    """
    f, e = pair
    lex_ef = _lex_weight(f, e, links, lex_s2t)
    lex_fe = _lex_weight(e, f, [(j, i) for i, j in links], lex_t2s)
    return lex_fe, lex_ef


def prune(entries: dict, k: int | None) -> dict:
    """Keep the ``k`` best targets per source by phi(e|f), ties to smaller target."""
    if k is None:
        return dict(entries)
    groups: dict = {}
    for (f, e), fv in entries.items():
        groups.setdefault(f, []).append((-fv.phi_ef, e, fv))
    out = {}
    for f, opts in groups.items():
        opts.sort(key=lambda o: (o[0], o[1]))
        for _, e, fv in opts[:k]:
            out[(f, e)] = fv
    return out


def _product(xs, lo, hi) -> float:
    w = 1.0
    for k in range(lo, hi):
        w *= xs[k]
    return w


def build_table(aligned: AlignedBitext, max_len: int = MAX_LEN, prune_k: int | None = PRUNE_K) -> PhraseTable:
    """Score every extracted phrase pair of ``aligned``.

    Phrase probabilities are relative frequencies over extracted instances;
    lexical weights use word probabilities read off the same alignments and
    keep the best value seen across instances of a pair.
    """
    if len(aligned) == 0:
        raise PhraseTableError("cannot build a phrase table from an empty bi-text")
    lex_s2t = lexical_table(aligned)
    lex_t2s = lexical_table(aligned, reverse=True)
    counts: dict = {}
    lex: dict = {}
    for (src, tgt), links in zip(aligned.bitext, aligned.alignments):
        # a consistent phrase pair contains every link of its words, so each
        # word's factor is the same in all phrase pairs covering it
        e_fac = _word_factors(src, tgt, links, lex_s2t)
        f_fac = _word_factors(tgt, src, [(j, i) for i, j in links], lex_t2s)
        for (s0, s1), (t0, t1) in extract_phrases((src, tgt), links, max_len):
            key = (src[s0:s1], tgt[t0:t1])
            counts[key] = counts.get(key, 0) + 1
            w = (_product(f_fac, s0, s1), _product(e_fac, t0, t1))
            old = lex.get(key)
            if old is None or w > old:
                lex[key] = w
    f_tot: dict = {}
    e_tot: dict = {}
    for (f, e), c in counts.items():
        f_tot[f] = f_tot.get(f, 0) + c
        e_tot[e] = e_tot.get(e, 0) + c
    entries = {}
    for (f, e), c in counts.items():
        lex_fe, lex_ef = lex[(f, e)]
        entries[(f, e)] = FeatureVector(c / e_tot[e], lex_fe, c / f_tot[f], lex_ef)
    return PhraseTable(prune(entries, prune_k), max_len, 0)


# -- text format -------------------------------------------------------------

def format_entry(f, e, fv: FeatureVector) -> str:
    vals = " ".join(f"{v:.6g}" for v in fv.values())
    return f"{' '.join(f)} ||| {' '.join(e)} ||| {vals}"


def write_table(path, table: PhraseTable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (f, e) in sorted(table.entries):
            fh.write(format_entry(f, e, table.entries[(f, e)]) + "\n")


def read_table(path, max_phrase_len: int = MAX_LEN) -> PhraseTable:
    entries = {}
    n_extra = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ||| ")
            if len(parts) != 3:
                raise PhraseTableError(f"{path}:{lineno}: expected 3 fields separated by ' ||| '")
            vals = [float(v) for v in parts[2].split()]
            if len(vals) < 5:
                raise PhraseTableError(f"{path}:{lineno}: expected at least 5 feature values")
            n_extra = len(vals) - 5
            entries[(tuple(parts[0].split()), tuple(parts[1].split()))] = FeatureVector(*vals[:5], tuple(vals[5:]))
    return PhraseTable(entries, max_phrase_len, n_extra)
