"""Beam-search phrase-based decoder with n-best extraction.

Scores are log-linear: ``score = weights . features`` where the global
features are the LM log-probability, the negated output length, the
negated total distortion and the negated number of copied unknown words;
every table in the bundle contributes the logs of its own feature columns.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .combine import TableBundle, bundle as make_bundle
from .lm import LOG_FLOOR, NGramLM
from .phrases import BASE_FEATURES, PhraseTable

GLOBAL_FEATURES = ("lm", "word_penalty", "distortion", "unk")
UNK_WEIGHT = 1.0 - LOG_FLOOR  # one word-penalty unit plus the LM floor cost
PROB_FLOOR = 1e-10
DEFAULT_INIT = {"lm": 0.5, "word_penalty": 0.0, "distortion": 0.3, "unk": UNK_WEIGHT}
TABLE_INIT = {"phi_fe": 0.2, "lex_fe": 0.2, "phi_ef": 0.2, "lex_ef": 0.2, "penalty": 0.0}
EXTRA_INIT = 0.1


class DecoderError(ValueError):
    pass


class Weights:
    """Named log-linear weight vector."""

    def __init__(self, names: Sequence[str], values):
        self.names = tuple(names)
        self.values = np.asarray(values, dtype=np.float64).copy()
        if self.values.shape != (len(self.names),):
            raise DecoderError("one value per feature name required")
        self._index = {n: i for i, n in enumerate(self.names)}

    @classmethod
    def for_bundle(cls, bundle: TableBundle) -> "Weights":
        names = list(GLOBAL_FEATURES)
        values = [DEFAULT_INIT[n] for n in GLOBAL_FEATURES]
        for tid, table in zip(bundle.ids, bundle.tables):
            for f in BASE_FEATURES:
                names.append(f"{tid}.{f}")
                values.append(TABLE_INIT[f])
            for k in range(table.n_extra):
                names.append(f"{tid}.x{k + 1}")
                values.append(EXTRA_INIT)
        return cls(names, values)

    def __len__(self):
        return len(self.names)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self._index[name]])

    def index(self, name: str) -> int:
        return self._index[name]

    def with_values(self, values) -> "Weights":
        return Weights(self.names, values)

    def copy(self) -> "Weights":
        return Weights(self.names, self.values)

    def tunable(self) -> np.ndarray:
        return np.array([n != "unk" for n in self.names])

    def dot(self, features) -> float:
        return float(np.dot(self.values, np.asarray(features, dtype=np.float64)))

    def __eq__(self, other):
        return isinstance(other, Weights) and self.names == other.names and np.array_equal(self.values, other.values)

    def __repr__(self):
        body = ", ".join(f"{n}={v:.4g}" for n, v in zip(self.names, self.values))
        return f"Weights({body})"

    def matches(self, bundle: TableBundle) -> bool:
        return self.names == Weights.for_bundle(bundle).names

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for n, v in zip(self.names, self.values.tolist()):
                fh.write(f"{n}\t{v!r}\n")

    @classmethod
    def read(cls, path) -> "Weights":
        names, values = [], []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                n, v = line.rstrip("\n").split("\t")
                names.append(n)
                values.append(float(v))
        return cls(names, values)


@dataclass(frozen=True)
class DecoderConfig:
    beam_size: int | None = 100  # None: no histogram pruning
    distortion_limit: int | None = 6  # None: unlimited
    monotone: bool = False
    nbest_size: int = 100
    ttable_limit: int | None = 20  # options kept per span and table

    def __post_init__(self):
        if self.beam_size is not None and self.beam_size < 1:
            raise DecoderError("beam_size must be >= 1")
        if self.nbest_size < 1:
            raise DecoderError("nbest_size must be >= 1")


class _Option:
    __slots__ = ("start", "end", "target", "sparse", "static")

    def __init__(self, start, end, target, sparse, static):
        self.start = start
        self.end = end
        self.target = target
        self.sparse = sparse  # ((feature index, value), ...) of translation features
        self.static = static  # weighted translation score incl. word penalty and unk


class _Hyp:
    __slots__ = ("score", "coverage", "last_end", "lm_state", "back", "option", "lm_delta",
                 "dist", "alternates", "n_out")

    def __init__(self, score, coverage, last_end, lm_state, back, option, lm_delta, dist, n_out):
        self.score = score
        self.coverage = coverage
        self.last_end = last_end
        self.lm_state = lm_state
        self.back = back
        self.option = option
        self.lm_delta = lm_delta
        self.dist = dist
        self.alternates = None
        self.n_out = n_out

    def output(self) -> tuple:
        parts = []
        h = self
        while h.back is not None:
            parts.append(h.option.target)
            h = h.back
        out = []
        for p in reversed(parts):
            out.extend(p)
        return tuple(out)


def _as_bundle(tables) -> TableBundle:
    if isinstance(tables, TableBundle):
        return tables
    if isinstance(tables, PhraseTable):
        return make_bundle([tables])
    return make_bundle(tables)


def _log_entries(table: PhraseTable, f: tuple):
    cache = table.__dict__.setdefault("_log_cache", {})
    hit = cache.get(f)
    if hit is None:
        opts = table.by_source().get(f, ())
        hit = [(e, tuple(math.log(max(v, PROB_FLOOR)) for v in fv.values())) for e, fv in opts]
        cache[f] = hit
    return hit


def _collect_options(sentence, bundle: TableBundle, lm: NGramLM, w: np.ndarray, config: DecoderConfig):
    n = len(sentence)
    max_len = bundle.max_phrase_len
    wp = w[1]
    options: dict = {}
    base = len(GLOBAL_FEATURES)
    offsets = []
    for t in bundle.tables:
        offsets.append(base)
        base += t.n_features
    for i in range(n):
        for j in range(i + 1, min(n, i + max_len) + 1):
            f = tuple(sentence[i:j])
            span_opts = []
            for table, off in zip(bundle.tables, offsets):
                if j - i > table.max_phrase_len:
                    continue
                cand = []
                for e, logs in _log_entries(table, f):
                    sparse = tuple((off + k, v) for k, v in enumerate(logs))
                    static = sum(w[k] * v for k, v in sparse) - wp * len(e)
                    cand.append(_Option(i, j, e, sparse, static))
                if config.ttable_limit is not None and len(cand) > config.ttable_limit:
                    wl = w[0]
                    cand.sort(key=lambda o: (-(o.static + wl * lm.phrase_logprob(o.target)), o.target))
                    cand = cand[:config.ttable_limit]
                span_opts.extend(cand)
            if span_opts:
                options[(i, j)] = span_opts
    for i in range(n):
        if (i, i + 1) not in options:
            unk = w[3]
            options[(i, i + 1)] = [_Option(i, i + 1, (sentence[i],), ((3, -1.0),), -wp - unk)]
    return options


def _future_costs(n, options, lm, wl):
    best = {}
    for span, opts in options.items():
        best[span] = max(o.static + wl * lm.phrase_logprob(o.target) for o in opts)
    fc = [[-math.inf] * (n + 1) for _ in range(n + 1)]
    for length in range(1, n + 1):
        for i in range(0, n - length + 1):
            j = i + length
            v = best.get((i, j), -math.inf)
            for k in range(i + 1, j):
                s = fc[i][k] + fc[k][j]
                if s > v:
                    v = s
            fc[i][j] = v
    return fc


def _future(coverage, n, fc, cache):
    hit = cache.get(coverage)
    if hit is not None:
        return hit
    total = 0.0
    i = 0
    while i < n:
        if coverage >> i & 1:
            i += 1
            continue
        j = i
        while j < n and not coverage >> j & 1:
            j += 1
        total += fc[i][j]
        i = j
    cache[coverage] = total
    return total


def _better(a: _Hyp, b: _Hyp) -> bool:
    if a.score != b.score:
        return a.score > b.score
    return a.output() < b.output()


def _add(stack: dict, key, hyp: _Hyp):
    old = stack.get(key)
    if old is None:
        stack[key] = hyp
        return
    if _better(hyp, old):
        alts = old.alternates or []
        old.alternates = None
        alts.append(old)
        hyp.alternates = alts
        stack[key] = hyp
    else:
        if old.alternates is None:
            old.alternates = []
        old.alternates.append(hyp)


def _search(sentence, bundle, lm, weights: Weights, config: DecoderConfig, monotone: bool):
    n = len(sentence)
    w = weights.values.tolist()
    wl, wd = w[0], w[2]
    options = _collect_options(sentence, bundle, lm, w, config)
    fc = _future_costs(n, options, lm, wl)
    by_start: dict = {}
    for (i, j), opts in options.items():
        by_start.setdefault(i, []).append((j, opts))
    full = (1 << n) - 1
    stacks = [dict() for _ in range(n + 1)]
    root = _Hyp(0.0, 0, -1, lm.initial_state(), None, None, 0.0, 0, 0)
    stacks[0][None] = root
    fcache: dict = {}
    limit = config.distortion_limit
    for size in range(n):
        hyps = list(stacks[size].values())
        if config.beam_size is not None and len(hyps) > config.beam_size:
            hyps.sort(key=lambda h: -(h.score + _future(h.coverage, n, fc, fcache)))
            hyps = hyps[:config.beam_size]
        for h in hyps:
            for i in range(n):
                if h.coverage >> i & 1:
                    continue
                jump = abs(i - h.last_end - 1)
                if monotone:
                    if jump:
                        continue
                elif limit is not None and jump > limit:
                    continue
                for j, opts in by_start.get(i, ()):
                    mask = ((1 << (j - i)) - 1) << i
                    if h.coverage & mask:
                        continue
                    cov = h.coverage | mask
                    done = cov == full
                    target_stack = stacks[size + j - i]
                    for o in opts:
                        st = h.lm_state
                        lmd = 0.0
                        for tok in o.target:
                            lp, st = lm.score(st, tok)
                            lmd += lp
                        if done:
                            lp, _ = lm.score(st, "</s>")
                            lmd += lp
                            key = "end"
                        else:
                            key = (cov, st, j - 1)
                        score = h.score + o.static + wl * lmd - wd * jump
                        _add(target_stack, key, _Hyp(score, cov, j - 1, st, h, o, lmd, jump, h.n_out + len(o.target)))
    return stacks[n].get("end")


def _features(path_nodes, n_features):
    feats = [0.0] * n_features
    for h in path_nodes:
        if h.back is None:
            continue
        feats[0] += h.lm_delta
        feats[1] -= len(h.option.target)
        feats[2] -= h.dist
        for k, v in h.option.sparse:
            feats[k] += v
    return feats


def _chain(h):
    out = []
    while h is not None:
        out.append(h)
        h = h.back
    return out


def _output_of(nodes) -> tuple:
    out = []
    for h in reversed(nodes):
        if h.back is not None:
            out.extend(h.option.target)
    return tuple(out)


def _empty_result(lm, weights):
    feats = [0.0] * len(weights)
    feats[0] = lm.logprob(())
    return [((), feats, weights.dot(feats))]


def _nbest(final: _Hyp, n_features: int, nbest: int, max_pops: int):
    nodes = _chain(final)
    heap = [(-final.score, _output_of(nodes), 0, 0, nodes)]
    seen: dict = {}
    results = []
    counter = 1
    pops = 0
    while heap and len(results) < nbest and pops < max_pops:
        neg, out, _, start, nodes = heapq.heappop(heap)
        pops += 1
        if out not in seen:
            seen[out] = True
            results.append((out, _features(nodes, n_features), -neg))
        for p in range(start, len(nodes)):
            node = nodes[p]
            for alt in node.alternates or ():
                new_nodes = nodes[:p] + _chain(alt)
                score = -neg - node.score + alt.score
                heapq.heappush(heap, (-score, _output_of(new_nodes), counter, p + 1, new_nodes))
                counter += 1
    return results


def decode_nbest(sentence, tables, lm: NGramLM, weights: Weights, config: DecoderConfig | None = None):
    """Up to ``nbest_size`` distinct outputs as ``(tokens, features, score)``.

    Outputs are sorted by descending model score; an output reachable
    through several derivations appears once, with its best derivation.
    """
    config = config or DecoderConfig()
    bundle = _as_bundle(tables)
    if not weights.matches(bundle):
        raise DecoderError("weight names do not match the table bundle layout")
    sentence = tuple(sentence)
    if not sentence:
        return _empty_result(lm, weights)
    monotone = config.monotone
    final = _search(sentence, bundle, lm, weights, config, monotone)
    if final is None and not monotone:
        final = _search(sentence, bundle, lm, weights, config, True)
    if final is None:
        raise DecoderError("no complete hypothesis")
    return _nbest(final, len(weights), config.nbest_size, max(20 * config.nbest_size, 100))


def decode(sentence, tables, lm: NGramLM, weights: Weights, config: DecoderConfig | None = None) -> tuple:
    """Best translation of ``sentence``."""
    config = config or DecoderConfig()
    bundle = _as_bundle(tables)
    if not weights.matches(bundle):
        raise DecoderError("weight names do not match the table bundle layout")
    sentence = tuple(sentence)
    if not sentence:
        return ()
    final = _search(sentence, bundle, lm, weights, config, config.monotone)
    if final is None and not config.monotone:
        final = _search(sentence, bundle, lm, weights, config, True)
    if final is None:
        raise DecoderError("no complete hypothesis")
    return final.output()


def decode_corpus(sentences, tables, lm, weights, config=None) -> list:
    return [decode(s, tables, lm, weights, config) for s in sentences]


def format_nbest(sent_id: int, entries) -> list:
    lines = []
    for out, feats, score in entries:
        fs = " ".join(f"{v:.6g}" for v in feats)
        lines.append(f"{sent_id} ||| {' '.join(out)} ||| {fs} ||| {score:.6g}")
    return lines
