"""Weight tuning: MERT with exact line search, alpha grid and feature-count choice."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .decoder import DecoderConfig, Weights, decode_nbest
from .evaluation import MAX_N, bleu, bleu_stats

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = (0.5, 0.6, 0.7, 0.8, 0.9)
FEATURE_COUNTS = (1, 2, 3)
MIN_GAIN = 1e-4
MAX_ROUNDS = 50
POOL_FACTOR = 10


class TuneError(ValueError):
    pass


@dataclass
class TuneResult:
    weights: Weights
    dev_bleu: float
    iterations_run: int
    history: list = field(default_factory=list)


def bleu_vec(stats: np.ndarray) -> np.ndarray:
    """Corpus BLEU for every row of a ``(rows, 2 * MAX_N + 2)`` stats matrix."""
    stats = np.atleast_2d(stats).astype(np.float64)
    m = stats[:, :MAX_N]
    c = stats[:, MAX_N:2 * MAX_N]
    hyp = stats[:, 2 * MAX_N]
    ref = stats[:, 2 * MAX_N + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.where((m > 0) & (c > 0), np.log(np.where(m > 0, m, 1.0) / np.where(c > 0, c, 1.0)), -np.inf)
        bp = np.where(hyp >= ref, 0.0, 1.0 - ref / np.where(hyp > 0, hyp, 1.0))
        score = np.exp(logp.mean(axis=1) + bp)
    score = np.where(np.isfinite(score) & (hyp > 0), score, 0.0)
    perfect = (hyp > 0) & (hyp == ref) & np.all(m == c, axis=1)
    return np.where(perfect, 1.0, score)


class NBestPool:
    """Distinct candidates per dev sentence, accumulated across iterations."""

    def __init__(self, refs, cap: int):
        self.refs = [tuple(r) for r in refs]
        self.cap = cap
        self.seen = [dict() for _ in self.refs]
        self.feats = [[] for _ in self.refs]
        self.stats = [[] for _ in self.refs]

    def add(self, i: int, entries) -> int:
        added = 0
        for out, feats, _ in entries:
            if out in self.seen[i] or len(self.feats[i]) >= self.cap:
                continue
            self.seen[i][out] = len(self.feats[i])
            self.feats[i].append(np.asarray(feats, dtype=np.float64))
            self.stats[i].append(bleu_stats(out, self.refs[i]))
            added += 1
        return added

    def matrices(self):
        """Stacked features, stats and per-sentence offsets."""
        ptr = np.zeros(len(self.refs) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(f) for f in self.feats])
        return np.vstack([np.vstack(f) for f in self.feats]), np.vstack([np.vstack(s) for s in self.stats]), ptr


def _argmax_per_sentence(scores, ptr):
    out = np.empty(ptr.shape[0] - 1, dtype=np.int64)
    for s in range(out.shape[0]):
        out[s] = ptr[s] + int(np.argmax(scores[ptr[s]:ptr[s + 1]]))
    return out


def pool_bleu(H, S, ptr, w) -> float:
    """BLEU of the pool candidates that ``w`` ranks first."""
    best = _argmax_per_sentence(H @ w, ptr)
    return float(bleu_vec(S[best].sum(axis=0))[0])


def line_search(H, S, ptr, w, d):
    """Exact search over ``w[d]``: returns ``(best value, its pool BLEU)``.

    The pool BLEU is piecewise constant in ``w[d]``; every sentence's
    best candidate changes only where its upper envelope of score lines
    breaks. The returned value is the midpoint of the best interval, or the
    current value when its interval is among the best.
    """
    b = H[:, d].copy()
    a = H @ w - b * w[d]
    seg_idx, seg_x, seg_ptr = _kernels.upper_envelopes(a, b, ptr)
    first = seg_idx[seg_ptr[:-1]]
    base = S[first].sum(axis=0)
    is_event = np.ones(seg_idx.shape[0], dtype=bool)
    is_event[seg_ptr[:-1]] = False
    ev = np.flatnonzero(is_event)
    if ev.shape[0] == 0:
        return float(w[d]), float(bleu_vec(base)[0])
    xs = seg_x[ev]
    delta = S[seg_idx[ev]] - S[seg_idx[ev - 1]]
    order = np.argsort(xs, kind="mergesort")
    xs = xs[order]
    cum = base + np.cumsum(delta[order], axis=0)
    last = np.flatnonzero(np.r_[xs[1:] != xs[:-1], True])
    bx = xs[last]
    scores = np.concatenate((bleu_vec(base), bleu_vec(cum[last])))
    # interval k spans (bx[k-1], bx[k]) with bx[-1] = -inf, bx[len] = +inf
    lo = np.concatenate(([-np.inf], bx))
    hi = np.concatenate((bx, [np.inf]))
    top = scores.max()
    cur = float(w[d])
    winners = np.flatnonzero(scores >= top - 1e-15)
    for k in winners:
        if lo[k] < cur < hi[k]:
            return cur, float(scores[k])
    k = int(winners[0])
    if np.isinf(lo[k]):
        x = hi[k] - 1.0
    elif np.isinf(hi[k]):
        x = lo[k] + 1.0
    else:
        x = 0.5 * (lo[k] + hi[k])
    return float(x), float(scores[k])


def optimise(H, S, ptr, w, tunable, max_rounds: int = MAX_ROUNDS):
    """Coordinate ascent taking the single best line-search move per round."""
    w = np.asarray(w, dtype=np.float64).copy()
    cur = pool_bleu(H, S, ptr, w)
    dims = np.flatnonzero(tunable)
    for _ in range(max_rounds):
        move = None
        for d in dims:
            x, b = line_search(H, S, ptr, w, d)
            if b > cur + 1e-12 and (move is None or b > move[2]):
                move = (d, x, b)
        if move is None:
            break
        w[move[0]] = move[1]
        cur = pool_bleu(H, S, ptr, w)
    return w, cur


def _decode_dev(sources, tables, lm, weights, config):
    return [decode_nbest(s, tables, lm, weights, config) for s in sources]


def mert(
    dev,
    tables,
    lm,
    init_weights: Weights | None = None,
    config: DecoderConfig | None = None,
    iterations: int = 8,
    restarts: int = 3,
    seed: int = 0,
    min_gain: float = MIN_GAIN,
) -> TuneResult:
    """Minimum error rate training on ``dev`` (a bi-text of source/reference).

    Each iteration decodes the dev set to n-best lists, adds them to the
    pool and re-optimises the weights on the pool from the best accepted
    weights and from ``restarts`` random points. An iteration is accepted
    when its dev BLEU does not drop; tuning stops once the gain falls
    below ``min_gain``.
    """
    if len(dev) == 0:
        raise TuneError("empty development set")
    from .decoder import _as_bundle

    bundle = _as_bundle(tables)
    config = config or DecoderConfig()
    weights = init_weights if init_weights is not None else Weights.for_bundle(bundle)
    if iterations <= 0:
        return TuneResult(weights, float("nan"), 0, [])
    sources = [s for s, _ in dev]
    refs = [r for _, r in dev]
    tunable = weights.tunable()
    rng = np.random.default_rng(seed)
    pool = NBestPool(refs, POOL_FACTOR * config.nbest_size)
    best_w = weights
    best_bleu = -1.0
    history = []
    current = weights
    run = 0
    for it in range(iterations):
        nbests = _decode_dev(sources, bundle, lm, current, config)
        run += 1
        score = bleu([nb[0][0] for nb in nbests], refs).score
        log.info("mert iteration %d: dev BLEU %.4f", it + 1, score)
        gain = score - best_bleu
        if score >= best_bleu:
            best_w, best_bleu = current, score
            history.append(score)
        if it > 0 and gain < min_gain:
            break
        added = sum(pool.add(i, nb) for i, nb in enumerate(nbests))
        if it > 0 and added == 0:
            break
        H, S, ptr = pool.matrices()
        starts = [best_w.values]
        for _ in range(restarts):
            r = best_w.values.copy()
            r[tunable] = rng.uniform(-1.0, 1.0, size=int(tunable.sum()))
            starts.append(r)
        cand = None
        for st in starts:
            w, b = optimise(H, S, ptr, st, tunable)
            if cand is None or b > cand[1]:
                cand = (w, b)
        current = best_w.with_values(cand[0])
    return TuneResult(best_w, best_bleu, run, history)


def grid_alpha(candidates, build, tune) -> tuple:
    """Tune one interpolated system per alpha; best dev BLEU wins, ties go to
    the larger alpha. ``build(alpha)`` returns tables, ``tune(tables)`` a
    :class:`TuneResult`. Returns ``(alpha, dev_bleu, result)``."""
    candidates = list(candidates)
    if not candidates:
        raise TuneError("no alpha candidates")
    if len(candidates) == 1:
        res = tune(build(candidates[0]))
        return candidates[0], res.dev_bleu, res
    best = None
    for alpha in sorted(candidates):
        res = tune(build(alpha))
        log.info("alpha %.2f: dev BLEU %.4f", alpha, res.dev_bleu)
        if best is None or res.dev_bleu >= best[1]:
            best = (alpha, res.dev_bleu, res)
    return best


def select_num_features(build, tune, counts=FEATURE_COUNTS) -> tuple:
    """Pick how many provenance features to keep; ties go to fewer.
    Returns ``(count, dev_bleu, result)``."""
    best = None
    for n in counts:
        res = tune(build(n))
        log.info("%d extra features: dev BLEU %.4f", n, res.dev_bleu)
        if best is None or res.dev_bleu > best[1]:
            best = (n, res.dev_bleu, res)
    return best
