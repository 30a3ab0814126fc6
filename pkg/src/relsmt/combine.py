"""Phrase-table combination: merge, interpolation, bundles and diff reports."""

from __future__ import annotations

from dataclasses import dataclass

from .phrases import PENALTY, FeatureVector, PhraseTable

IN_ORIG = (1.0, 0.5, 0.5)
IN_EXTRA = (0.5, 1.0, 0.5)
IN_BOTH = (1.0, 1.0, 1.0)


class CombineError(ValueError):
    pass


def merge(t_orig: PhraseTable, t_extra: PhraseTable, num_extra_features: int = 3) -> PhraseTable:
    """Union of both tables with priority to ``t_orig``.

    Pairs already in ``t_orig`` keep its scores; pairs only in ``t_extra``
    keep theirs. Every entry gets the first ``num_extra_features`` of the
    provenance indicators F1 (from orig), F2 (from extra), F3 (from both),
    valued 1 when true and 0.5 otherwise. Probabilities are not
    re-normalised.
    """
    if num_extra_features not in (1, 2, 3):
        raise CombineError(f"num_extra_features must be 1, 2 or 3, got {num_extra_features}")
    n = num_extra_features
    out = {}
    for key, fv in t_orig.items():
        flags = IN_BOTH if key in t_extra else IN_ORIG
        out[key] = fv._replace(extra=flags[:n])
    for key, fv in t_extra.items():
        if key not in out:
            out[key] = fv._replace(extra=IN_EXTRA[:n])
    return PhraseTable(out, max(t_orig.max_phrase_len, t_extra.max_phrase_len), n)


def interpolate(t_orig: PhraseTable, t_extra: PhraseTable, alpha: float) -> PhraseTable:
    """Linear interpolation ``alpha * orig + (1 - alpha) * extra`` of the four
    probability features over the union of pairs; a missing pair counts as 0."""
    if not 0.0 <= alpha <= 1.0:
        raise CombineError(f"alpha must lie in [0, 1], got {alpha}")
    zero = (0.0, 0.0, 0.0, 0.0)
    out = {}
    for key in list(t_orig.entries) + [k for k in t_extra.entries if k not in t_orig.entries]:
        a = t_orig.entries[key].probs if key in t_orig.entries else zero
        b = t_extra.entries[key].probs if key in t_extra.entries else zero
        out[key] = FeatureVector(*(alpha * x + (1.0 - alpha) * y for x, y in zip(a, b)), PENALTY, ())
    return PhraseTable(out, max(t_orig.max_phrase_len, t_extra.max_phrase_len), 0)


@dataclass(frozen=True)
class TableBundle:
    """Phrase tables used side by side as alternative decoding paths."""

    tables: tuple
    ids: tuple

    def __post_init__(self):
        if not self.tables:
            raise CombineError("a bundle needs at least one table")
        if len(set(self.ids)) != len(self.ids):
            raise CombineError(f"duplicate table ids: {self.ids}")
        if len(self.ids) != len(self.tables):
            raise CombineError("one id per table required")

    def __len__(self):
        return len(self.tables)

    @property
    def max_phrase_len(self) -> int:
        return max(t.max_phrase_len for t in self.tables)

    def feature_counts(self) -> tuple:
        return tuple(t.n_features for t in self.tables)


def bundle(tables, ids=None) -> TableBundle:
    tables = tuple(tables)
    if not tables:
        raise CombineError("a bundle needs at least one table")
    if ids is None:
        ids = tuple(f"t{i}" for i in range(len(tables)))
    return TableBundle(tables, tuple(ids))


@dataclass
class DiffReport:
    size1: int
    size2: int
    shared: int
    sources1: int
    sources2: int
    shared_sources: int
    mean_abs_diff: tuple | None  # phi_fe, lex_fe, phi_ef, lex_ef

    @property
    def overlap_pct(self) -> float:
        smaller = min(self.size1, self.size2)
        return 100.0 * self.shared / smaller if smaller else 0.0

    @property
    def source_overlap_pct(self) -> float:
        smaller = min(self.sources1, self.sources2)
        return 100.0 * self.shared_sources / smaller if smaller else 0.0

    def render(self) -> str:
        head = "size1\tsize2\tshared\toverlap%\tsrc1\tsrc2\tsrc_shared\tsrc_overlap%\tphi_fe\tlex_fe\tphi_ef\tlex_ef"
        if self.mean_abs_diff is None:
            diffs = ["n/a"] * 4
        else:
            diffs = [f"{d:.4f}" for d in self.mean_abs_diff]
        row = [
            str(self.size1), str(self.size2), str(self.shared), f"{self.overlap_pct:.2f}",
            str(self.sources1), str(self.sources2), str(self.shared_sources),
            f"{self.source_overlap_pct:.2f}", *diffs,
        ]
        return head + "\n" + "\t".join(row)


def diff_report(t1: PhraseTable, t2: PhraseTable) -> DiffReport:
    """Sizes, overlap and mean absolute score differences over shared pairs."""
    shared = sorted(k for k in t1.entries if k in t2.entries)
    s1 = t1.sources()
    s2 = t2.sources()
    if shared:
        sums = [0.0, 0.0, 0.0, 0.0]
        for k in shared:
            for i, (a, b) in enumerate(zip(t1.entries[k].probs, t2.entries[k].probs)):
                sums[i] += abs(a - b)
        diffs = tuple(s / len(shared) for s in sums)
    else:
        diffs = None
    return DiffReport(len(t1), len(t2), len(shared), len(s1), len(s2), len(s1 & s2), diffs)
