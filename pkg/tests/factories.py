"""Random inputs shared by several test modules."""

import random

from relsmt.phrases import FeatureVector, PhraseTable


def random_table(rng: random.Random, n: int, vocab: int = 30, max_len: int = 3) -> PhraseTable:
    entries = {}
    while len(entries) < n:
        f = tuple(f"f{rng.randrange(vocab)}" for _ in range(rng.randint(1, max_len)))
        e = tuple(f"e{rng.randrange(vocab)}" for _ in range(rng.randint(1, max_len)))
        entries[(f, e)] = FeatureVector(*(rng.random() for _ in range(4)))
    return PhraseTable(entries, max_len)


def overlapping_tables(rng: random.Random, n1: int, n2: int, shared: int):
    pool = random_table(rng, n1 + n2 - shared, vocab=max(30, n1 + n2))
    keys = list(pool.entries)
    rng.shuffle(keys)
    k1 = keys[:n1]
    k2 = keys[n1 - shared:n1 + n2 - shared]
    t1 = PhraseTable({k: pool[k] for k in k1})
    t2 = PhraseTable({k: FeatureVector(*(rng.random() for _ in range(4))) for k in k2})
    return t1, t2
