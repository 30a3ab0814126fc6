"""Character-level monotone transliteration between related spellings."""

from __future__ import annotations

import logging
import os
import unicodedata
from dataclasses import dataclass, field

from .align import align_bitext
from .combine import bundle
from .corpus import Bitext
from .decoder import DecoderConfig, Weights, decode
from .lm import NGramLM, train_ngram
from .phrases import CHAR_MAX_LEN, PhraseTable, build_table, read_table, write_table
from .tune import mert

log = logging.getLogger(__name__)

BEGIN = "^"
END = "$"
LM_ORDER = 10
MAX_DEV = 2000
DEV_FRACTION = 0.1
DIAGONAL_TENSION = 4.0
CHAR_CONFIG = DecoderConfig(beam_size=20, distortion_limit=0, monotone=True, nbest_size=20, ttable_limit=10)


class TranslitError(ValueError):
    pass


def format_chars(word: str) -> tuple:
    """``"abc"`` -> ``("^", "a", "b", "c", "$")``."""
    if not word:
        raise TranslitError("cannot format an empty word")
    return (BEGIN, *word, END)


def unformat(chars) -> str:
    """Inverse of :func:`format_chars`: drop one leading and one trailing marker."""
    chars = list(chars)
    if chars and chars[0] == BEGIN:
        chars = chars[1:]
    if chars and chars[-1] == END:
        chars = chars[:-1]
    return "".join(chars)


@dataclass
class TransliterationModel:
    table: PhraseTable
    lm: NGramLM
    weights: Weights
    config: DecoderConfig = CHAR_CONFIG
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        write_table(os.path.join(directory, "chars.table"), self.table)
        self.lm.dump(os.path.join(directory, "chars.lm"))
        self.weights.write(os.path.join(directory, "weights.txt"))

    @classmethod
    def load(cls, directory) -> "TransliterationModel":
        table = read_table(os.path.join(directory, "chars.table"), max_phrase_len=CHAR_MAX_LEN)
        lm = NGramLM.load(os.path.join(directory, "chars.lm"))
        weights = Weights.read(os.path.join(directory, "weights.txt"))
        return cls(table, lm, weights)


def _char_bitext(cognates) -> Bitext:
    return Bitext(tuple((format_chars(c.word_x2), format_chars(c.word_x1)) for c in cognates))


def _build(bitext: Bitext, iterations: int) -> PhraseTable:
    aligned = align_bitext(bitext, iterations, diagonal_tension=DIAGONAL_TENSION)
    return build_table(aligned, max_len=CHAR_MAX_LEN)


def dev_size(n_pairs: int, dev_fraction: float, max_dev: int = MAX_DEV) -> int:
    if dev_fraction <= 0.0:
        return 0
    return min(max_dev, int(round(n_pairs * dev_fraction)), n_pairs - 1)


def train_transliterator(
    cognates,
    target_words=(),
    dev_fraction: float = DEV_FRACTION,
    max_dev: int = MAX_DEV,
    iterations: int = 5,
    mert_iterations: int = 3,
    seed: int = 0,
    config: DecoderConfig = CHAR_CONFIG,
) -> TransliterationModel:
    """Learn to rewrite ``word_x2`` spellings as ``word_x1`` from cognate pairs.

    The last ``dev`` pairs are held out for tuning; the table is then rebuilt
    on all pairs while keeping the tuned weights. ``target_words`` feed the
    character LM; without them the x1 side of the pairs is used.
    """
    cognates = list(cognates)
    if not cognates:
        raise TranslitError("no cognate pairs to train on")
    if len(cognates) < 100:
        log.warning("only %d cognate pairs; transliteration may be unreliable", len(cognates))
    words = list(target_words) or [c.word_x1 for c in cognates]
    lm = train_ngram([format_chars(w) for w in words if w], order=LM_ORDER)
    n_dev = dev_size(len(cognates), dev_fraction, max_dev)
    full = _char_bitext(cognates)
    if n_dev <= 0:
        log.warning("no tuning data; using default weights")
        table = _build(full, iterations)
        return TransliterationModel(table, lm, Weights.for_bundle(bundle([table])), config)
    train = Bitext(full.pairs[:-n_dev])
    dev = Bitext(full.pairs[-n_dev:])
    table = _build(train, iterations)
    res = mert(dev, table, lm, config=config, iterations=mert_iterations, restarts=1, seed=seed)
    log.info("transliteration dev BLEU %.4f", res.dev_bleu)
    table = _build(full, iterations)
    return TransliterationModel(table, lm, res.weights, config)


def transliterate(model: TransliterationModel, word: str) -> str:
    """Rewrite one word; characters the model has never seen are copied.

    Words containing a boundary marker character are returned unchanged.
    """
    if not word or BEGIN in word or END in word:
        return word
    hit = model._cache.get(word)
    if hit is None:
        out = decode(format_chars(word), model.table, model.lm, model.weights, model.config)
        hit = model._cache[word] = unformat(out).replace(BEGIN, "").replace(END, "")
    return hit


def passes_through(token: str) -> bool:
    """Tokens with digits or made only of punctuation are left alone."""
    if any(ch.isdigit() for ch in token):
        return True
    return all(unicodedata.category(ch).startswith("P") for ch in token)


@dataclass(frozen=True)
class ChangeStats:
    types: int
    types_changed: int
    tokens: int
    tokens_changed: int


def apply_to_corpus(model: TransliterationModel, bitext: Bitext, side: str = "source"):
    """Transliterate one side of ``bitext`` type by type.

    Returns the new bi-text and the counts of changed types and tokens.
    """
    if side not in ("source", "target"):
        raise TranslitError(f"side must be 'source' or 'target', got {side!r}")
    col = 0 if side == "source" else 1
    mapping = {}
    for pair in bitext:
        for w in pair[col]:
            if w not in mapping:
                mapping[w] = w if passes_through(w) else transliterate(model, w)
    pairs = []
    tokens = changed = 0
    for pair in bitext:
        new = tuple(mapping[w] for w in pair[col])
        tokens += len(new)
        changed += sum(1 for a, b in zip(pair[col], new) if a != b)
        pairs.append((new, pair[1]) if col == 0 else (pair[0], new))
    stats = ChangeStats(len(mapping), sum(1 for a, b in mapping.items() if a != b), tokens, changed)
    return Bitext(tuple(pairs), bitext.dropped), stats
