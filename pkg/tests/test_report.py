import pytest
from hypothesis import given
from hypothesis import strategies as st

from relsmt.report import ReportError, data_saving_factor, grid_cells, marker, render_factors, render_grid


def rep(bleu, p=None, test_id="t"):
    return {"test_bleu": bleu, "sign_test": None if p is None else {"p_value": p}, "test_id": test_id}


def test_markers():
    assert (marker(0.001), marker(0.03), marker(0.05), marker(None)) == ("**", "*", "", "")


def test_baseline_against_itself():
    base = rep(0.2534)
    cell = grid_cells({"baseline": {"10K": base}}, {"10K": base})[("baseline", "10K")]
    assert (cell.bleu, cell.gain, cell.marker) == (25.34, 0.0, "")
    assert "25.34 (+0.00)" in render_grid({"baseline": {"10K": base}}, {"10K": base})


def test_known_p_values_and_gains():
    base = {"10K": rep(0.20), "20K": rep(0.25)}
    rows = {"a": {"10K": rep(0.2135, 0.004), "20K": rep(0.2601, 0.02)}, "b": {"10K": rep(0.19, 0.3)}}
    cells = grid_cells(rows, base)
    assert cells[("a", "10K")].marker == "**" and cells[("a", "10K")].gain == 1.35
    assert cells[("a", "20K")].marker == "*" and cells[("a", "20K")].gain == 1.01
    assert cells[("b", "10K")].marker == "" and cells[("b", "10K")].gain == -1.0
    text = render_grid(rows, base)
    assert "21.35** (+1.35)" in text and "19.00 (-1.00)" in text
    csv = render_grid(rows, base, csv=True).splitlines()
    assert csv[1] == "a,21.35,+1.35,**,26.01,+1.01,*"


def test_mismatched_test_sets():
    with pytest.raises(ReportError):
        grid_cells({"a": {"c": rep(0.3, test_id="x")}}, {"c": rep(0.2, test_id="y")})
    with pytest.raises(ReportError):
        grid_cells({"a": {"c": rep(0.3)}}, {})


CURVE = [(10_000, 20.0), (20_000, 22.0), (40_000, 24.0), (80_000, 26.0)]


def test_exact_hit_factor_four():
    (f,) = data_saving_factor(CURVE, [(10_000, 24.0)])
    assert f.factor == 4.0 and not f.extrapolated


def test_below_baseline_factor_below_one():
    (f,) = data_saving_factor(CURVE, [(40_000, 23.0)])
    assert f.factor < 1.0
    assert f.equivalent_size == pytest.approx((20_000 * 40_000) ** 0.5)


def test_above_curve_clamped():
    (f,) = data_saving_factor(CURVE, [(10_000, 30.0)])
    assert f.extrapolated and f.factor == 8.0


@pytest.mark.parametrize("curve", [[(10, 1.0)], [(10, 1.0), (10, 2.0)], [(20, 1.0), (10, 2.0)], [(0, 1.0), (10, 2.0)]])
def test_bad_curves(curve):
    with pytest.raises(ReportError):
        data_saving_factor(curve, [(10, 1.0)])


@given(st.floats(0.01, 1000), st.floats(19.0, 27.0), st.sampled_from([10_000, 20_000, 40_000]))
def test_scale_invariance(c, score, size):
    (a,) = data_saving_factor(CURVE, [(size, score)])
    (b,) = data_saving_factor([(s * c, v) for s, v in CURVE], [(size * c, score)])
    assert b.factor == pytest.approx(a.factor, rel=1e-9)
    assert a.extrapolated == b.extrapolated


def test_render_factors():
    text = render_factors(data_saving_factor(CURVE, [(10_000, 24.0)]))
    assert text.splitlines()[1] == "10000\t24.00\t40000.0\t4.00\tfalse"
