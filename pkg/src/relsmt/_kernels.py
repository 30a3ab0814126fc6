"""Hot numeric kernels.

Each kernel has a loop version compiled with numba and a fallback written
with numpy (vectorised where the recurrence allows it). The public names
(``em_step``, ``viterbi_cells``, ``lcs_length``, ``upper_envelopes``)
dispatch on :data:`relsmt._accel.USE_NUMBA`.

Alignment kernels work on a flat "cell" layout: every target token of every
sentence owns one column, and a column holds one cell per candidate
conditioning position (source words first, NULL last). ``col_ptr[k]`` is the
first cell of column ``k``; ``cell_param`` indexes the translation parameter
and ``cell_prior`` holds the alignment prior of that cell.
"""

import numpy as np

from ._accel import USE_NUMBA, njit


@njit(cache=True)
def _em_step_loop(col_ptr, cell_param, cell_prior, t, n_params):
    counts = np.zeros(n_params)
    loglik = 0.0
    n_cols = col_ptr.shape[0] - 1
    for k in range(n_cols):
        lo = col_ptr[k]
        hi = col_ptr[k + 1]
        denom = 0.0
        for c in range(lo, hi):
            denom += cell_prior[c] * t[cell_param[c]]
        loglik += np.log(denom)
        for c in range(lo, hi):
            counts[cell_param[c]] += cell_prior[c] * t[cell_param[c]] / denom
    return counts, loglik


def _em_step_numpy(col_ptr, cell_param, cell_prior, t, n_params):
    w = cell_prior * t[cell_param]
    denom = np.add.reduceat(w, col_ptr[:-1])
    lens = np.diff(col_ptr)
    r = w / np.repeat(denom, lens)
    counts = np.bincount(cell_param, weights=r, minlength=n_params)
    return counts, float(np.log(denom).sum())


@njit(cache=True)
def _viterbi_loop(col_ptr, cell_param, cell_prior, t):
    n_cols = col_ptr.shape[0] - 1
    best = np.empty(n_cols, dtype=np.int64)
    for k in range(n_cols):
        lo = col_ptr[k]
        hi = col_ptr[k + 1]
        arg = lo
        top = cell_prior[lo] * t[cell_param[lo]]
        for c in range(lo + 1, hi):
            v = cell_prior[c] * t[cell_param[c]]
            if v > top:
                top = v
                arg = c
        best[k] = arg - lo
    return best


def _viterbi_numpy(col_ptr, cell_param, cell_prior, t):
    w = cell_prior * t[cell_param]
    starts = col_ptr[:-1]
    lens = np.diff(col_ptr)
    top = np.maximum.reduceat(w, starts)
    idx = np.arange(w.shape[0])
    big = w.shape[0] + 1
    hit = np.where(w == np.repeat(top, lens), idx, big)
    first = np.minimum.reduceat(hit, starts)
    return (first - starts).astype(np.int64)


@njit(cache=True)
def _lcs_loop(a, b):
    n = a.shape[0]
    m = b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        cur[0] = 0
        for j in range(1, m + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            elif prev[j] >= cur[j - 1]:
                cur[j] = prev[j]
            else:
                cur[j] = cur[j - 1]
        prev, cur = cur, prev
    return prev[m]


def _lcs_numpy(a, b):
    # Row recurrence as a running maximum: a match never falls below the
    # left neighbour, since LCS grows by at most one per character.
    prev = np.zeros(b.shape[0] + 1, dtype=np.int64)
    for ch in a:
        tmp = np.where(b == ch, prev[:-1] + 1, prev[1:])
        prev = np.concatenate(([0], np.maximum.accumulate(tmp)))
    return int(prev[-1])



@njit(cache=True)
def _envelope_loop(a, b, ptr):
    # Upper envelope of the lines a + b*x of every sentence. Returns the
    # candidate index of each hull segment, the x where it starts to win
    # (-inf for the first) and per-sentence segment offsets.
    n = ptr.shape[0] - 1
    total = ptr[-1]
    seg_idx = np.empty(total, dtype=np.int64)
    seg_x = np.empty(total)
    seg_ptr = np.zeros(n + 1, dtype=np.int64)
    out = 0
    for s in range(n):
        lo = ptr[s]
        hi = ptr[s + 1]
        order = np.argsort(b[lo:hi], kind="mergesort") + lo
        start = out
        k = 0
        while k < order.shape[0]:
            # among equal slopes keep the largest intercept, lowest index on ties
            best = order[k]
            k2 = k + 1
            while k2 < order.shape[0] and b[order[k2]] == b[best]:
                c = order[k2]
                if a[c] > a[best] or (a[c] == a[best] and c < best):
                    best = c
                k2 += 1
            k = k2
            xs = -np.inf
            while out > start:
                top = seg_idx[out - 1]
                x = (a[top] - a[best]) / (b[best] - b[top])
                if x <= seg_x[out - 1]:
                    out -= 1
                    continue
                xs = x
                break
            seg_idx[out] = best
            seg_x[out] = xs
            out += 1
        seg_ptr[s + 1] = out
    return seg_idx[:out], seg_x[:out], seg_ptr


def _envelope_python(a, b, ptr):
    seg_idx = []
    seg_x = []
    seg_ptr = [0]
    for s in range(ptr.shape[0] - 1):
        lo, hi = int(ptr[s]), int(ptr[s + 1])
        order = np.lexsort((np.arange(lo, hi), -a[lo:hi], b[lo:hi])) + lo
        hull = []
        last_b = None
        for c in order.tolist():
            if b[c] == last_b:
                continue
            last_b = b[c]
            xs = -np.inf
            while hull:
                top, top_x = hull[-1]
                x = (a[top] - a[c]) / (b[c] - b[top])
                if x <= top_x:
                    hull.pop()
                    continue
                xs = x
                break
            hull.append((c, xs))
        seg_idx.extend(c for c, _ in hull)
        seg_x.extend(x for _, x in hull)
        seg_ptr.append(len(seg_idx))
    return (np.asarray(seg_idx, dtype=np.int64), np.asarray(seg_x, dtype=np.float64),
            np.asarray(seg_ptr, dtype=np.int64))


if USE_NUMBA:
    em_step = _em_step_loop
    viterbi_cells = _viterbi_loop
    lcs_length = _lcs_loop
    upper_envelopes = _envelope_loop
else:
    em_step = _em_step_numpy
    viterbi_cells = _viterbi_numpy
    lcs_length = _lcs_numpy
    upper_envelopes = _envelope_python

KERNELS = {
    "em_step": (_em_step_loop, _em_step_numpy),
    "viterbi_cells": (_viterbi_loop, _viterbi_numpy),
    "lcs_length": (_lcs_loop, _lcs_numpy),
    "upper_envelopes": (_envelope_loop, _envelope_python),
}
