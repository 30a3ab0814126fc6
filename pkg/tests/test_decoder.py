import math
import random

import numpy as np
import pytest

from oracles import exhaustive_decode
from relsmt.combine import bundle
from relsmt.decoder import (
    DecoderConfig,
    DecoderError,
    Weights,
    decode,
    decode_nbest,
    format_nbest,
)
from relsmt.lm import train_ngram
from relsmt.phrases import FeatureVector, PhraseTable

EXACT = DecoderConfig(beam_size=None, distortion_limit=None, ttable_limit=None, nbest_size=10)


def identity_table(words):
    return PhraseTable({((w,), (w,)): FeatureVector(1.0, 1.0, 1.0, 1.0) for w in words})


def random_instance(rng, n_tables=1):
    src = [f"s{i}" for i in range(4)]
    tgt = [f"t{i}" for i in range(5)]
    tables = []
    for _ in range(n_tables):
        entries = {}
        for _ in range(rng.randint(2, 10)):
            f = tuple(rng.choice(src) for _ in range(rng.randint(1, 2)))
            e = tuple(rng.choice(tgt) for _ in range(rng.randint(1, 2)))
            entries[(f, e)] = FeatureVector(*(rng.uniform(0.05, 1.0) for _ in range(4)))
        n_extra = rng.randint(0, 2)
        entries = {k: fv._replace(extra=tuple(rng.choice((0.5, 1.0)) for _ in range(n_extra))) for k, fv in entries.items()}
        tables.append(PhraseTable(entries, 2, n_extra))
    corpus = [tuple(rng.choice(tgt + src) for _ in range(rng.randint(1, 5))) for _ in range(15)]
    lm = train_ngram(corpus, rng.randint(1, 3))
    b = bundle(tables)
    w = Weights.for_bundle(b)
    w = w.with_values([v if n == "unk" else rng.uniform(-0.5, 1.0) for n, v in zip(w.names, w.values)])
    sentence = tuple(rng.choice(src) for _ in range(rng.randint(1, 4)))
    return sentence, b, lm, w


def test_identity_monotone():
    words = ["a", "b", "c"]
    lm = train_ngram([("q",)], order=1)  # uniform over everything else
    b = bundle([identity_table(words)])
    cfg = DecoderConfig(monotone=True)
    assert decode(("a", "b", "c"), b, lm, Weights.for_bundle(b), cfg) == ("a", "b", "c")


def test_unknown_word_copied():
    b = bundle([identity_table(["a"])])
    lm = train_ngram([("a",)], order=2)
    assert decode(("zz",), b, lm, Weights.for_bundle(b)) == ("zz",)


def test_empty_sentence():
    b = bundle([identity_table(["a"])])
    lm = train_ngram([("a",)], order=2)
    assert decode((), b, lm, Weights.for_bundle(b)) == ()


def test_weight_layout_mismatch():
    b = bundle([identity_table(["a"])])
    other = bundle([identity_table(["a"]), identity_table(["a"])])
    lm = train_ngram([("a",)], order=2)
    with pytest.raises(DecoderError):
        decode(("a",), b, lm, Weights.for_bundle(other))


@pytest.mark.parametrize("seed", range(40))
def test_matches_exhaustive_search(seed):
    rng = random.Random(seed)
    sentence, b, lm, w = random_instance(rng, n_tables=1 + seed % 2)
    ref = exhaustive_decode(sentence, list(b.tables), lm, w)
    best_score = max(ref.values())
    out = decode(sentence, b, lm, w, EXACT)
    assert ref[out] == pytest.approx(best_score, abs=1e-9)
    top = decode_nbest(sentence, b, lm, w, EXACT)
    assert top[0][0] == out
    expected = sorted(ref.values(), reverse=True)[: len(top)]
    assert [s for _, _, s in top] == pytest.approx(expected, abs=1e-9)
    assert len(top) == min(len(ref), EXACT.nbest_size)


@pytest.mark.parametrize("seed", range(20))
def test_nbest_scores_decompose(seed):
    sentence, b, lm, w = random_instance(random.Random(100 + seed), n_tables=2)
    entries = decode_nbest(sentence, b, lm, w, EXACT)
    outs = [o for o, _, _ in entries]
    assert len(outs) == len(set(outs))
    scores = [s for _, _, s in entries]
    assert scores == sorted(scores, reverse=True)
    for out, feats, score in entries:
        assert len(feats) == len(w)
        assert w.dot(feats) == pytest.approx(score, abs=1e-9)
        assert feats[0] == pytest.approx(lm.logprob(out), abs=1e-9)
        assert feats[1] == -len(out)


def test_nbest_one_equals_decode():
    sentence, b, lm, w = random_instance(random.Random(5))
    cfg = DecoderConfig(nbest_size=1)
    top = decode_nbest(sentence, b, lm, w, cfg)
    assert len(top) == 1 and top[0][0] == decode(sentence, b, lm, w, cfg)


def test_bundle_of_one_equals_table():
    sentence, b, lm, w = random_instance(random.Random(9))
    assert decode(sentence, b.tables[0], lm, w) == decode(sentence, b, lm, w)


def test_two_disjoint_tables_use_union():
    t1 = PhraseTable({(("a",), ("x",)): FeatureVector(1, 1, 1, 1)})
    t2 = PhraseTable({(("b",), ("y",)): FeatureVector(1, 1, 1, 1)})
    b = bundle([t1, t2])
    lm = train_ngram([("x", "y")], order=2)
    assert decode(("a", "b"), b, lm, Weights.for_bundle(b)) == ("x", "y")


def test_monotone_forbids_reordering():
    t = PhraseTable({(("a",), ("x",)): FeatureVector(1, 1, 1, 1), (("b",), ("y",)): FeatureVector(1, 1, 1, 1)})
    lm = train_ngram([("y", "x")] * 5, order=3)
    b = bundle([t])
    w = Weights.for_bundle(b)
    w = w.with_values(np.where(np.array(w.names) == "lm", 5.0, w.values) * (np.array(w.names) != "distortion"))
    assert decode(("a", "b"), b, lm, w, DecoderConfig(monotone=True)) == ("x", "y")
    assert decode(("a", "b"), b, lm, w) == ("y", "x")


def test_distortion_limit_zero_is_monotone():
    sentence, b, lm, w = random_instance(random.Random(11))
    for out, feats, _ in decode_nbest(sentence, b, lm, w, DecoderConfig(distortion_limit=0)):
        assert feats[2] == 0.0


def test_format_nbest():
    lines = format_nbest(3, [(("a", "b"), [1.0, -2.0], 0.5)])
    assert lines == ["3 ||| a b ||| 1 -2 ||| 0.5"]


def test_weights_round_trip(tmp_path):
    b = bundle([identity_table(["a"])])
    w = Weights.for_bundle(b).with_values(np.linspace(-1, 1, 9))
    w.write(tmp_path / "w")
    assert Weights.read(tmp_path / "w") == w
    assert not w.tunable()[w.index("unk")]
    assert math.isfinite(w["unk"])
