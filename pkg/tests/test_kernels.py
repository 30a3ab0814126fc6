"""The numba kernels and their numpy fallbacks must agree exactly."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relsmt import _kernels
from relsmt._accel import USE_NUMBA

from oracles import lcs_dp


def random_cells(rng, n_cols=50, max_cells=6, n_params=30):
    lens = rng.integers(1, max_cells + 1, size=n_cols)
    col_ptr = np.concatenate(([0], np.cumsum(lens))).astype(np.int64)
    cell_param = rng.integers(0, n_params, size=col_ptr[-1]).astype(np.int64)
    cell_prior = rng.uniform(0.01, 1.0, size=col_ptr[-1])
    t = rng.uniform(0.01, 1.0, size=n_params)
    return col_ptr, cell_param, cell_prior, t, n_params


@pytest.mark.parametrize("seed", range(5))
def test_em_step_agrees(seed):
    args = random_cells(np.random.default_rng(seed))
    loop, vec = _kernels.KERNELS["em_step"]
    c1, l1 = loop(*args)
    c2, l2 = vec(*args)
    np.testing.assert_allclose(c1, c2, rtol=1e-12)
    assert l1 == pytest.approx(l2, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_viterbi_agrees_with_ties(seed):
    rng = np.random.default_rng(seed)
    col_ptr, cell_param, cell_prior, t, _ = random_cells(rng, n_params=3)
    cell_prior = np.round(cell_prior, 1) + 0.1  # plenty of exact ties
    t = np.ones_like(t)
    loop, vec = _kernels.KERNELS["viterbi_cells"]
    np.testing.assert_array_equal(loop(col_ptr, cell_param, cell_prior, t), vec(col_ptr, cell_param, cell_prior, t))


@given(st.text(alphabet="abcé漢", max_size=12), st.text(alphabet="abcé漢", max_size=12))
def test_lcs_agrees(a, b):
    to = lambda s: np.array([ord(c) for c in s], dtype=np.int64)  # noqa: E731
    loop, vec = _kernels.KERNELS["lcs_length"]
    assert loop(to(a), to(b)) == vec(to(a), to(b)) == lcs_dp(a, b)


@pytest.mark.parametrize("seed", range(10))
def test_envelopes_agree(seed):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, 12, size=8)
    ptr = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    a = rng.integers(-3, 4, size=ptr[-1]).astype(np.float64)
    b = rng.integers(-3, 4, size=ptr[-1]).astype(np.float64)
    loop, vec = _kernels.KERNELS["upper_envelopes"]
    for x, y in zip(loop(a, b, ptr), vec(a, b, ptr)):
        np.testing.assert_array_equal(x, y)
    # the envelope picks the best line at any probe point
    idx, xs, sp = vec(a, b, ptr)
    for s in range(len(sizes)):
        lo, hi = ptr[s], ptr[s + 1]
        for probe in (-100.0, -1.3, 0.1, 2.7, 100.0):
            seg = sp[s] + np.searchsorted(xs[sp[s]:sp[s + 1]], probe, side="right") - 1
            best = (a[lo:hi] + b[lo:hi] * probe).max()
            assert a[idx[seg]] + b[idx[seg]] * probe == pytest.approx(best)


def test_dispatch_follows_flag():
    expected = _kernels._em_step_loop if USE_NUMBA else _kernels._em_step_numpy
    assert _kernels.em_step is expected
    code = "from relsmt import _kernels, _accel; print(_accel.USE_NUMBA, _kernels.lcs_length is _kernels._lcs_numpy)"
    env = dict(os.environ, RELSMT_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]
