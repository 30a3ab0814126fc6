"""Interpolated Witten-Bell n-gram language models."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
FLOOR = 1e-10
LOG_FLOOR = math.log(FLOOR)


class LMError(ValueError):
    pass


class NGramLM:
    """Word (or character) n-gram model with Witten-Bell interpolation.

    Probabilities are defined over the training vocabulary plus ``</s>`` and
    a single ``<unk>`` event; the lowest level interpolates with the uniform
    distribution over that event space.
    """

    def __init__(self, order: int, ngrams: dict):
        # ngrams[n][context][word] = count, context a tuple of n-1 tokens
        self.order = order
        self._ngrams = ngrams
        self._stats = []
        for n in range(order):
            table = ngrams.get(n + 1, {})
            self._stats.append({h: (sum(row.values()), len(row)) for h, row in table.items()})
        self.vocab = frozenset(ngrams.get(1, {}).get((), {}))
        self._uniform = 1.0 / (len(self.vocab - {EOS}) + 2)
        self._cache: dict = {}

    # -- probabilities ---------------------------------------------------

    def _prob(self, word: str, context: tuple) -> float:
        p = self._uniform
        for n in range(len(context) + 1):
            h = context[len(context) - n:] if n else ()
            stats = self._stats[n].get(h)
            if stats is None:
                break
            total, types = stats
            c = self._ngrams[n + 1][h].get(word, 0)
            p = (c + types * p) / (total + types)
        return p

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        """Pr(word | context); unseen words get the ``<unk>`` mass."""
        context = tuple(context)[-(self.order - 1):] if self.order > 1 else ()
        if word not in self.vocab and word != EOS:
            word = UNK
        return self._prob(word, context)

    def score(self, state: tuple, word: str):
        """Log-probability of ``word`` after ``state`` and the next state.

        ``state`` holds at most ``order - 1`` preceding tokens. Results are
        memoised; the floor keeps every value finite.
        """
        key = (state, word)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        lp = max(math.log(self.prob(word, state)), LOG_FLOOR)
        nxt = (state + (word,))[-(self.order - 1):] if self.order > 1 else ()
        self._cache[key] = (lp, nxt)
        return lp, nxt

    def initial_state(self) -> tuple:
        return (BOS,) if self.order > 1 else ()

    def token_logprobs(self, tokens: Sequence[str], eos: bool = True) -> list:
        state = self.initial_state()
        out = []
        for w in list(tokens) + ([EOS] if eos else []):
            lp, state = self.score(state, w)
            out.append(lp)
        return out

    def logprob(self, tokens: Sequence[str], eos: bool = True) -> float:
        """Natural-log probability of a sentence, ``</s>`` included."""
        return sum(self.token_logprobs(tokens, eos))

    def phrase_logprob(self, tokens: Sequence[str]) -> float:
        """Context-free estimate used for future costs."""
        state: tuple = ()
        total = 0.0
        for w in tokens:
            lp, state = self.score(state, w)
            total += lp
        return total

    def perplexity(self, corpus: Iterable[Sequence[str]]) -> float:
        lp = 0.0
        n = 0
        for s in corpus:
            lp += self.logprob(s)
            n += len(s) + 1
        return math.exp(-lp / n)

    def event_space(self) -> list:
        return sorted(self.vocab - {EOS}) + [EOS, UNK]

    def contexts(self, n: int) -> list:
        """Observed contexts of length ``n - 1``."""
        return list(self._ngrams.get(n, {}))

    # -- text dump ---------------------------------------------------------

    def dump(self, path) -> None:
        """Write ``order TAB n-gram TAB logprob TAB backoff TAB count`` lines.

        ``backoff`` is the log interpolation weight the n-gram receives when
        used as a context (0 if it never is); ``count`` makes the dump
        reloadable.
        """
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"#order\t{self.order}\n")
            for n in range(1, self.order + 1):
                for h, row in self._ngrams.get(n, {}).items():
                    for w, c in row.items():
                        g = h + (w,)
                        lp = math.log(self._prob(w, h))
                        st = self._stats[n].get(g) if n < self.order else None
                        bo = math.log(st[1] / (st[0] + st[1])) if st else 0.0
                        fh.write(f"{n}\t{' '.join(g)}\t{lp:.6f}\t{bo:.6f}\t{c}\n")

    @classmethod
    def load(cls, path) -> "NGramLM":
        ngrams: dict = {}
        order = None
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("#order"):
                    order = int(line.split("\t")[1])
                    continue
                n, gram, _, _, c = line.split("\t")
                g = tuple(gram.split(" "))
                ngrams.setdefault(int(n), {}).setdefault(g[:-1], {})[g[-1]] = int(c)
        if order is None:
            raise LMError(f"{path}: missing order header")
        return cls(order, ngrams)


def train_ngram(corpus: Iterable[Sequence[str]], order: int = 3) -> NGramLM:
    """Count all n-grams up to ``order`` with sentence boundary markers."""
    if order < 1:
        raise LMError(f"order must be >= 1, got {order}")
    ngrams: dict = {n: {} for n in range(1, order + 1)}
    seen = False
    for sent in corpus:
        seen = True
        padded = (BOS,) + tuple(sent) + (EOS,)
        for i in range(1, len(padded)):
            w = padded[i]
            for n in range(1, order + 1):
                if i - n + 1 < 0:
                    break
                h = padded[i - n + 1:i]
                row = ngrams[n].setdefault(h, {})
                row[w] = row.get(w, 0) + 1
    if not seen:
        raise LMError("cannot train a language model on an empty corpus")
    return NGramLM(order, ngrams)
