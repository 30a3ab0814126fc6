"""Comparison grids with significance markers and data-saving factors."""

from __future__ import annotations

import math
from dataclasses import dataclass

STRONG = "**"  # p < 0.01
WEAK = "*"  # p < 0.05


class ReportError(ValueError):
    pass


def marker(p_value) -> str:
    if p_value is None:
        return ""
    if p_value < 0.01:
        return STRONG
    if p_value < 0.05:
        return WEAK
    return ""


@dataclass(frozen=True)
class Cell:
    bleu: float  # percent
    gain: float  # percent points over the baseline
    marker: str


def _get(report, name):
    return report[name] if isinstance(report, dict) else getattr(report, name)


def grid_cells(rows, baselines) -> dict:
    """``{(label, column): Cell}`` from reports grouped by row and column.

    ``rows`` maps a row label to ``{column: report}``; ``baselines`` maps a
    column to the baseline report of that column. Each report needs
    ``test_bleu`` (a fraction), ``sign_test`` (None or with ``p_value``) and
    ``test_id`` when test sets must be checked for equality.
    """
    cells = {}
    for label, by_col in rows.items():
        for col, rep in by_col.items():
            if col not in baselines:
                raise ReportError(f"no baseline for column {col!r}")
            base = baselines[col]
            tid, bid = _test_id(rep), _test_id(base)
            if tid is not None and bid is not None and tid != bid:
                raise ReportError(f"{label!r} / {col!r} was evaluated on a different test set than the baseline")
            b = round(100.0 * _get(rep, "test_bleu"), 2)
            g = round(b - round(100.0 * _get(base, "test_bleu"), 2), 2)
            st = _get(rep, "sign_test")
            p = None if st is None or rep is base else _get(st, "p_value")
            cells[(label, col)] = Cell(b, g, marker(p))
    return cells


def _test_id(report):
    if isinstance(report, dict):
        return report.get("test_id")
    return getattr(report, "test_id", None)


def render_grid(rows, baselines, csv: bool = False) -> str:
    """Plain-text (or comma-separated) grid of BLEU %, gains and markers.

    Markers: ``**`` for p < 0.01 and ``*`` for p < 0.05 in the sign test
    against the baseline.
    """
    cols = list(baselines)
    cells = grid_cells(rows, baselines)
    if csv:
        lines = ["system," + ",".join(f"{c} bleu,{c} gain,{c} sig" for c in cols)]
        for label in rows:
            parts = [label]
            for c in cols:
                cell = cells.get((label, c))
                parts += ["", "", ""] if cell is None else [f"{cell.bleu:.2f}", f"{cell.gain:+.2f}", cell.marker]
            lines.append(",".join(parts))
        return "\n".join(lines)
    texts = {
        key: f"{cell.bleu:.2f}{cell.marker} ({cell.gain:+.2f})" for key, cell in cells.items()
    }
    width0 = max([len("system")] + [len(str(label)) for label in rows])
    widths = [max([len(str(c))] + [len(texts.get((label, c), "")) for label in rows]) for c in cols]
    head = "system".ljust(width0) + "  " + "  ".join(str(c).rjust(w) for c, w in zip(cols, widths))
    lines = [head, "-" * len(head)]
    for label in rows:
        row = str(label).ljust(width0) + "  " + "  ".join(
            texts.get((label, c), "").rjust(w) for c, w in zip(cols, widths)
        )
        lines.append(row)
    return "\n".join(lines)


@dataclass(frozen=True)
class SavingFactor:
    size: float
    bleu: float
    equivalent_size: float
    factor: float
    extrapolated: bool


def data_saving_factor(baseline_curve, method_points) -> list:
    """How much more baseline data would match each method point.

    The baseline curve is interpolated linearly in log-size; a method BLEU
    outside the curve's BLEU range is clamped to its end and flagged.
    """
    curve = [(float(s), float(b)) for s, b in baseline_curve]
    if len(curve) < 2:
        raise ReportError("the baseline curve needs at least two points")
    sizes = [s for s, _ in curve]
    if any(s <= 0 for s in sizes):
        raise ReportError("sizes must be positive")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ReportError("baseline sizes must be strictly increasing")
    logs = [math.log(s) for s, _ in curve]
    bleus = [b for _, b in curve]
    lo_b, hi_b = min(bleus), max(bleus)
    out = []
    for size, score in method_points:
        size, score = float(size), float(score)
        extrapolated = False
        eq = None
        if score in bleus:
            # an exact hit on a curve point keeps its size without a log round trip
            eq = sizes[bleus.index(score)]
        elif score > hi_b or score < lo_b:
            eq = sizes[bleus.index(hi_b if score > hi_b else lo_b)]
            extrapolated = True
        else:
            for k in range(len(curve) - 1):
                b0, b1 = bleus[k], bleus[k + 1]
                if min(b0, b1) < score < max(b0, b1):
                    eq = math.exp(logs[k] + (score - b0) / (b1 - b0) * (logs[k + 1] - logs[k]))
                    break
        out.append(SavingFactor(size, score, eq, eq / size, extrapolated))
    return out


def render_factors(factors, csv: bool = False) -> str:
    sep = "," if csv else "\t"
    lines = [sep.join(("size", "bleu", "equivalent_size", "factor", "extrapolated"))]
    for f in factors:
        lines.append(sep.join((f"{f.size:g}", f"{f.bleu:.2f}", f"{f.equivalent_size:.1f}", f"{f.factor:.2f}", str(f.extrapolated).lower())))
    return "\n".join(lines)
