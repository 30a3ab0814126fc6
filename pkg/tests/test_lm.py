import math
import random
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from relsmt.lm import BOS, EOS, FLOOR, LMError, NGramLM, train_ngram


def wb_reference(corpus, order):
    """Witten-Bell interpolation written directly from counts."""
    grams = [Counter() for _ in range(order + 1)]
    for s in corpus:
        padded = [BOS] + list(s) + [EOS]
        for n in range(1, order + 1):
            for i in range(1, len(padded)):
                if i - n + 1 < 0:
                    continue
                grams[n][tuple(padded[i - n + 1:i + 1])] += 1
    vocab = {g[0] for g in grams[1]}
    uniform = 1.0 / (len(vocab - {EOS}) + 2)

    def prob(word, context):
        if word not in vocab and word != EOS:
            word = "<unk>"
        p = uniform
        for n in range(len(context) + 1):
            h = tuple(context[len(context) - n:]) if n else ()
            follow = {g[-1]: c for g, c in grams[n + 1].items() if g[:-1] == h}
            if not follow:
                break
            total, types = sum(follow.values()), len(follow)
            p = (follow.get(word, 0) + types * p) / (total + types)
        return p

    return prob


def random_corpus(rng, n=20, vocab=6):
    return [tuple(f"w{rng.randrange(vocab)}" for _ in range(rng.randint(0, 6))) for _ in range(n)]


def test_single_type_unigram():
    lm = train_ngram([("a", "a")], order=1)
    assert lm.prob("a") > lm.prob(EOS) > lm.prob("zzz")


def test_seen_beats_unseen():
    lm = train_ngram([("a", "b", "c")], order=3)
    assert lm.prob("c", ("a", "b")) > lm.prob("d", ("a", "b"))


def test_order_zero_and_empty_errors():
    with pytest.raises(LMError):
        train_ngram([("a",)], order=0)
    with pytest.raises(LMError):
        train_ngram([], order=2)


def test_empty_sentence_is_end_given_begin():
    lm = train_ngram([("a", "b")], order=2)
    assert lm.logprob(()) == pytest.approx(math.log(lm.prob(EOS, (BOS,))))


def test_unseen_sentence_floor_bound():
    lm = train_ngram([("a", "b")], order=3)
    s = ("q", "r", "s")
    lp = lm.logprob(s)
    assert math.isfinite(lp) and lp >= (len(s) + 1) * math.log(FLOOR)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_matches_reference_formula(order):
    corpus = random_corpus(random.Random(order))
    lm = train_ngram(corpus, order)
    ref = wb_reference(corpus, order)
    words = lm.event_space() + ["unseen"]
    for n in range(1, order + 1):
        for h in lm.contexts(n)[:10]:
            for w in words:
                assert lm.prob(w, h) == pytest.approx(ref(w, h), rel=1e-12)


@given(st.integers(0, 1000), st.integers(1, 4))
def test_distributions_sum_to_one(seed, order):
    lm = train_ngram(random_corpus(random.Random(seed)), order)
    for n in range(1, order + 1):
        for h in lm.contexts(n):
            total = sum(lm.prob(w, h) for w in lm.event_space())
            assert total == pytest.approx(1.0, abs=1e-9)


@given(st.integers(0, 1000))
def test_logprob_is_sum_of_conditionals(seed):
    rng = random.Random(seed)
    lm = train_ngram(random_corpus(rng), 3)
    s = random_corpus(rng, n=1, vocab=8)[0]
    padded = [BOS] + list(s) + [EOS]
    direct = sum(math.log(lm.prob(padded[i], padded[max(0, i - 2):i])) for i in range(1, len(padded)))
    assert lm.logprob(s) == pytest.approx(direct, abs=1e-9)


def test_dump_load_round_trip(tmp_path):
    corpus = random_corpus(random.Random(3))
    lm = train_ngram(corpus, 3)
    lm.dump(tmp_path / "lm")
    back = NGramLM.load(tmp_path / "lm")
    for s in corpus + [("x", "w1")]:
        assert back.logprob(s) == lm.logprob(s)
