"""IBM Model 1 word alignment, directed Viterbi links and symmetrisation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .corpus import Bitext, CombinedBitext, CorpusError

NULL = "<null>"
DEFAULT_ITERATIONS = 5
NULL_PRIOR = 0.01
FLOOR = 1e-12


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class LexProbTable:
    """Conditional lexical probabilities ``probs[cond][emit]``.

    ``direction`` is ``"src2tgt"`` when the conditioning words come from the
    source side (so the table holds Pr(target | source)) and ``"tgt2src"``
    otherwise. ``history`` holds the corpus log-likelihood before the first
    and after every EM iteration, when the table came from EM.
    """

    direction: str
    probs: dict
    history: tuple = field(default=(), compare=False)

    def prob(self, cond: str, emit: str, floor: float = FLOOR) -> float:
        p = self.probs.get(cond, {}).get(emit, 0.0)
        return p if p > 0.0 else floor

    def conditioning_words(self):
        return self.probs.keys()


@dataclass(frozen=True)
class AlignedBitext:
    bitext: Bitext
    alignments: tuple

    def __post_init__(self):
        if len(self.alignments) != len(self.bitext):
            raise AlignmentError(
                f"{len(self.alignments)} alignments for {len(self.bitext)} sentence pairs"
            )

    def __len__(self):
        return len(self.bitext)


class _Cells:
    """Flat cell layout of a corpus for one alignment direction."""

    def __init__(self, conds, emits, null_prior, diagonal_tension):
        # conds/emits: per-sentence lists of words (conditioning / emitted side)
        cvocab = {NULL: 0}
        evocab: dict = {}
        c_ids = []
        e_ids = []
        c_len = np.empty(len(conds), dtype=np.int64)
        e_len = np.empty(len(conds), dtype=np.int64)
        for n, (cs, es) in enumerate(zip(conds, emits)):
            c_ids.extend(cvocab.setdefault(w, len(cvocab)) for w in cs)
            e_ids.extend(evocab.setdefault(w, len(evocab)) for w in es)
            c_len[n] = len(cs)
            e_len[n] = len(es)
        c_flat = np.asarray(c_ids, dtype=np.int64)
        e_flat = np.asarray(e_ids, dtype=np.int64)
        c_off = np.concatenate(([0], np.cumsum(c_len)))
        e_off = np.concatenate(([0], np.cumsum(e_len)))
        use_null = null_prior > 0.0
        width = c_len + (1 if use_null else 0)

        sent_of_col = np.repeat(np.arange(len(conds)), e_len)
        col_len = width[sent_of_col]
        col_ptr = np.concatenate(([0], np.cumsum(col_len)))
        n_cells = int(col_ptr[-1])
        col_of_cell = np.repeat(np.arange(sent_of_col.shape[0]), col_len)
        pos = np.arange(n_cells) - col_ptr[:-1][col_of_cell]
        sent = sent_of_col[col_of_cell]
        l_cell = c_len[sent]
        is_null = pos >= l_cell
        cond = np.where(is_null, 0, c_flat[np.minimum(c_off[sent] + pos, max(len(c_flat) - 1, 0))])
        emit = e_flat[col_of_cell]

        if diagonal_tension > 0.0:
            j = (col_of_cell - e_off[sent] + 1) / e_len[sent]
            i = (pos + 1) / np.maximum(l_cell, 1)
            raw = np.where(is_null, 0.0, np.exp(-diagonal_tension * np.abs(i - j)))
            z = np.add.reduceat(raw, col_ptr[:-1])
            prior = raw / np.repeat(z, col_len)
        else:
            prior = np.where(is_null, 0.0, 1.0 / np.maximum(l_cell, 1))
        if use_null:
            prior = np.where(is_null, null_prior, (1.0 - null_prior) * prior)

        n_emit = max(len(evocab), 1)
        keys = cond * n_emit + emit
        uniq, param = np.unique(keys, return_inverse=True)
        self.col_ptr = col_ptr.astype(np.int64)
        self.cell_param = param.astype(np.int64).ravel()
        self.cell_prior = prior.astype(np.float64)
        self.param_cond = uniq // n_emit
        self.param_emit = uniq % n_emit
        self.n_params = uniq.shape[0]
        self.cond_words = list(cvocab)
        self.emit_words = list(evocab)
        self.c_len = c_len
        self.e_len = e_len
        self.use_null = use_null

    def uniform(self):
        fanout = np.bincount(self.param_cond, minlength=len(self.cond_words))
        return 1.0 / fanout[self.param_cond]

    def normalise(self, counts):
        totals = np.bincount(self.param_cond, weights=counts, minlength=len(self.cond_words))
        return counts / totals[self.param_cond]

    def to_table(self, t, direction, history):
        probs: dict = {}
        for c, e, p in zip(self.param_cond.tolist(), self.param_emit.tolist(), t.tolist()):
            probs.setdefault(self.cond_words[c], {})[self.emit_words[e]] = p
        return LexProbTable(direction, probs, tuple(history))


def _em(cells: _Cells, iterations: int):
    t = cells.uniform()
    history = []
    for _ in range(iterations):
        counts, ll = _kernels.em_step(cells.col_ptr, cells.cell_param, cells.cell_prior, t, cells.n_params)
        history.append(ll)
        t = cells.normalise(counts)
    _, ll = _kernels.em_step(cells.col_ptr, cells.cell_param, cells.cell_prior, t, cells.n_params)
    history.append(ll)
    return t, history


def _check(bitext, iterations):
    if len(bitext) == 0:
        raise AlignmentError("cannot train on an empty bi-text")
    if iterations < 1:
        raise AlignmentError(f"iterations must be >= 1, got {iterations}")


def train_model1(
    bitext: Bitext,
    iterations: int = DEFAULT_ITERATIONS,
    reverse: bool = False,
    null_prior: float = NULL_PRIOR,
    diagonal_tension: float = 0.0,
) -> LexProbTable:
    """Train IBM Model 1 by EM.

    By default the table conditions on source words and emits target words;
    ``reverse=True`` swaps the roles. Parameters are initialised uniformly
    over co-occurring word pairs. ``null_prior`` is the prior probability of
    a token linking to NULL; ``diagonal_tension > 0`` replaces the uniform
    position prior by an exponential preference for the diagonal.
    """
    _check(bitext, iterations)
    conds, emits = (bitext.targets, bitext.sources) if reverse else (bitext.sources, bitext.targets)
    cells = _Cells(conds, emits, null_prior, diagonal_tension)
    t, history = _em(cells, iterations)
    return cells.to_table(t, "tgt2src" if reverse else "src2tgt", history)


def model1_loglik(table: LexProbTable, bitext: Bitext, null_prior: float = NULL_PRIOR) -> float:
    """Corpus log-likelihood under ``table`` (uniform position prior)."""
    rev = table.direction == "tgt2src"
    total = 0.0
    for s, t in bitext:
        conds, emits = (t, s) if rev else (s, t)
        for e in emits:
            p = sum(table.prob(c, e, 0.0) for c in conds) * (1.0 - null_prior) / len(conds)
            if null_prior > 0:
                p += null_prior * table.prob(NULL, e, 0.0)
            total += math.log(p)
    return total


def viterbi_align(
    table: LexProbTable,
    pair,
    null_prior: float = NULL_PRIOR,
    floor: float = FLOOR,
) -> frozenset:
    """Best link for every emitted token of ``pair`` under ``table``.

    Links are ``(source index, target index)`` whatever the table direction.
    NULL links are dropped; ties go to the smallest position and NULL only
    wins when strictly better than every real word.
    """
    src, tgt = pair
    rev = table.direction == "tgt2src"
    conds, emits = (tgt, src) if rev else (src, tgt)
    if not conds:
        return frozenset()
    share = (1.0 - null_prior) / len(conds)
    links = set()
    for j, e in enumerate(emits):
        best_i, best = -1, -1.0
        for i, c in enumerate(conds):
            v = share * table.prob(c, e, floor)
            if v > best:
                best_i, best = i, v
        if null_prior > 0 and null_prior * table.prob(NULL, e, floor) > best:
            continue
        links.add((j, best_i) if rev else (best_i, j))
    return frozenset(links)


def _viterbi_corpus(cells: _Cells, t, rev: bool) -> list:
    best = _kernels.viterbi_cells(cells.col_ptr, cells.cell_param, cells.cell_prior, t)
    out = []
    k = 0
    for c_len, e_len in zip(cells.c_len.tolist(), cells.e_len.tolist()):
        links = set()
        for j in range(e_len):
            i = int(best[k])
            k += 1
            if i < c_len:
                links.add((j, i) if rev else (i, j))
        out.append(frozenset(links))
    return out


def _neighbours(i, j):
    return ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1))


def symmetrize(fwd, rev) -> frozenset:
    """Intersect the two directed link sets, then grow from the union.

    A union link is added when it touches an existing link horizontally or
    vertically and its source or its target word is still unaligned.
    Candidates are visited in sorted order, repeated until nothing changes.
    """
    fwd = set(fwd)
    rev = set(rev)
    current = fwd & rev
    candidates = sorted((fwd | rev) - current)
    src_done = {i for i, _ in current}
    tgt_done = {j for _, j in current}
    changed = True
    while changed and candidates:
        changed = False
        rest = []
        for i, j in candidates:
            if (i not in src_done or j not in tgt_done) and any(n in current for n in _neighbours(i, j)):
                current.add((i, j))
                src_done.add(i)
                tgt_done.add(j)
                changed = True
            else:
                rest.append((i, j))
        candidates = rest
    return frozenset(current)


def align_bitext(
    bitext: Bitext,
    iterations: int = DEFAULT_ITERATIONS,
    null_prior: float = NULL_PRIOR,
    diagonal_tension: float = 0.0,
    return_tables: bool = False,
):
    """Train both Model 1 directions on ``bitext`` and symmetrise the links."""
    _check(bitext, iterations)
    src, tgt = bitext.sources, bitext.targets
    fwd_cells = _Cells(src, tgt, null_prior, diagonal_tension)
    t_fwd, h_fwd = _em(fwd_cells, iterations)
    rev_cells = _Cells(tgt, src, null_prior, diagonal_tension)
    t_rev, h_rev = _em(rev_cells, iterations)
    fwd_links = _viterbi_corpus(fwd_cells, t_fwd, rev=False)
    rev_links = _viterbi_corpus(rev_cells, t_rev, rev=True)
    alignments = tuple(symmetrize(f, r) for f, r in zip(fwd_links, rev_links))
    aligned = AlignedBitext(bitext, alignments)
    if return_tables:
        return aligned, (fwd_cells.to_table(t_fwd, "src2tgt", h_fwd), rev_cells.to_table(t_rev, "tgt2src", h_rev))
    return aligned


def truncate_alignments(aligned: AlignedBitext) -> AlignedBitext:
    """Keep only the first copy of the original bi-text of a ``rep`` layout."""
    bt = aligned.bitext
    if not isinstance(bt, CombinedBitext) or bt.layout != "rep":
        raise AlignmentError("truncate_alignments needs a bi-text built with layout='rep'")
    n = bt.orig_len
    return AlignedBitext(Bitext(bt.pairs[:n]), aligned.alignments[:n])


def lexical_table(aligned: AlignedBitext, reverse: bool = False) -> LexProbTable:
    """Relative-frequency lexical probabilities read off symmetrised links.

    Unaligned words count as linked to NULL. ``reverse=False`` gives
    Pr(target | source).
    """
    counts: dict = {}
    for (src, tgt), links in zip(aligned.bitext, aligned.alignments):
        conds, emits = (tgt, src) if reverse else (src, tgt)
        linked = set()
        for i, j in links:
            c, e = (j, i) if reverse else (i, j)
            row = counts.setdefault(conds[c], {})
            row[emits[e]] = row.get(emits[e], 0) + 1
            linked.add(e)
        for e, w in enumerate(emits):
            if e not in linked:
                row = counts.setdefault(NULL, {})
                row[w] = row.get(w, 0) + 1
    probs = {}
    for c, row in counts.items():
        z = sum(row.values())
        probs[c] = {e: n / z for e, n in row.items()}
    return LexProbTable("tgt2src" if reverse else "src2tgt", probs)


# -- alignment files -------------------------------------------------------

def format_links(links) -> str:
    return " ".join(f"{i}-{j}" for i, j in sorted(links))


def parse_links(line: str) -> frozenset:
    out = set()
    for tok in line.split():
        i, _, j = tok.partition("-")
        out.add((int(i), int(j)))
    return frozenset(out)


def write_alignments(path, alignments) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for links in alignments:
            fh.write(format_links(links) + "\n")


def read_alignments(path) -> list:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [parse_links(line) for line in lines]


def write_lex_table(path, table: LexProbTable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in sorted(table.probs):
            for e, p in sorted(table.probs[c].items()):
                fh.write(f"{c}\t{e}\t{p!r}\n")


def read_lex_table(path, direction: str = "src2tgt") -> LexProbTable:
    probs: dict = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            c, e, p = line.rstrip("\n").split("\t")
            probs.setdefault(c, {})[e] = float(p)
    return LexProbTable(direction, probs)


__all__ = [
    "NULL",
    "AlignmentError",
    "LexProbTable",
    "AlignedBitext",
    "train_model1",
    "model1_loglik",
    "viterbi_align",
    "symmetrize",
    "align_bitext",
    "truncate_alignments",
    "lexical_table",
    "CorpusError",
]
