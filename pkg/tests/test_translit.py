import logging

import pytest
from hypothesis import given
from hypothesis import strategies as st

from relsmt.cognates import CognatePair
from relsmt.corpus import Bitext
from relsmt.synthetic import gen_cognate_pairs
from relsmt.translit import (
    TranslitError,
    TransliterationModel,
    apply_to_corpus,
    dev_size,
    format_chars,
    passes_through,
    train_transliterator,
    transliterate,
    unformat,
)

SUFFIX_RULES = ("suffix:cao>cion", "suffix:dade>dad")


def test_format_examples():
    assert format_chars("evolução") == tuple("^evolução$")
    assert format_chars("a") == ("^", "a", "$")
    with pytest.raises(TranslitError):
        format_chars("")


@given(st.text(min_size=1, max_size=20).filter(lambda w: not any(c.isspace() for c in w)))
def test_round_trip(word):
    assert unformat(format_chars(word)) == word


def test_dev_size():
    assert dev_size(1000, 0.1) == 100
    assert dev_size(100_000, 0.1) == 2000
    assert dev_size(1000, 0.0) == 0
    assert dev_size(5, 0.5) < 5


@pytest.fixture(scope="module")
def suffix_model():
    pairs = gen_cognate_pairs(seed=1, n=1100, rules=SUFFIX_RULES)
    train, held = pairs[:1000], pairs[1000:]
    model = train_transliterator([CognatePair(w2, w1, 1.0, 1.0) for w2, w1 in train])
    return model, train, held


def test_learns_suffix_rules(suffix_model):
    model, _, held = suffix_model
    bearing = [(w2, w1) for w2, w1 in held if w1.endswith(("cao", "dade"))]
    assert len(bearing) >= 10
    correct = sum(transliterate(model, w2) == w1 for w2, w1 in bearing)
    assert correct / len(bearing) >= 0.9


def test_unchanged_training_words_map_to_themselves(suffix_model):
    model, train, _ = suffix_model
    same = [w for w2, w in train if w2 == w][:50]
    assert all(transliterate(model, w) == w for w in same)


def test_unseen_characters_copied(suffix_model):
    model, _, _ = suffix_model
    assert transliterate(model, "жзщ") == "жзщ"


def test_deterministic_and_cached(suffix_model):
    model, _, held = suffix_model
    w = held[0][0]
    assert transliterate(model, w) == transliterate(model, w)


def test_identity_data_gives_identity():
    words = [w1 for _, w1 in gen_cognate_pairs(seed=2, n=150, rules=())]
    model = train_transliterator([CognatePair(w, w, 1.0, 1.0) for w in words], mert_iterations=1)
    assert all(transliterate(model, w) == w for w in words[:40])


def test_no_dev_warns(caplog):
    pairs = [CognatePair(w2, w1, 1.0, 1.0) for w2, w1 in gen_cognate_pairs(seed=3, n=120, rules=SUFFIX_RULES)]
    with caplog.at_level(logging.WARNING):
        model = train_transliterator(pairs, dev_fraction=0.0)
    assert "tuning" in caplog.text
    assert list(model.weights.values) == list(type(model.weights).for_bundle(
        __import__("relsmt.combine", fromlist=["bundle"]).bundle([model.table])).values)


def test_empty_training_data():
    with pytest.raises(TranslitError):
        train_transliterator([])


def test_passes_through():
    assert passes_through("2010") and passes_through("a1") and passes_through("...")
    assert not passes_through("casa")


def test_apply_to_corpus(suffix_model, tmp_path):
    model, _, held = suffix_model
    w2, w1 = next((a, b) for a, b in held if a != b and transliterate(model, a) == b)
    bt = Bitext([((w2, "2010", ","), ("y",))] * 2)
    out, stats = apply_to_corpus(model, bt, "source")
    assert out.pairs[0] == ((w1, "2010", ","), ("y",))
    assert (stats.types, stats.types_changed, stats.tokens, stats.tokens_changed) == (3, 1, 6, 2)
    same, st0 = apply_to_corpus(model, Bitext([(("2010",), ("y",))]), "source")
    assert st0.types_changed == 0 and same.pairs == ((("2010",), ("y",)),)
    with pytest.raises(TranslitError):
        apply_to_corpus(model, bt, "middle")
    model.save(tmp_path)
    back = TransliterationModel.load(tmp_path)
    assert transliterate(back, w2) == w1
