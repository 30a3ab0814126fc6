"""End-to-end experiments: baseline, bi-text combination strategies and the
proposed balanced-merge method, with persisted artifacts and verification."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field

from .align import align_bitext, truncate_alignments
from .cognates import CognateConfig, extract_cognates, top_types, write_cognates
from .combine import bundle, interpolate, merge
from .corpus import Bitext, concat, load_bitext, read_sentences, select_k, write_sentences
from .decoder import DecoderConfig, Weights, decode
from .evaluation import bleu, oov_stats, sign_test, table_usage
from .lm import NGramLM, train_ngram
from .phrases import build_table, read_table, write_table
from .translit import TransliterationModel, apply_to_corpus, train_transliterator
from .tune import DEFAULT_ALPHAS, FEATURE_COUNTS, grid_alpha, mert, select_num_features

log = logging.getLogger(__name__)

STRATEGIES = ("baseline", "cat1", "catk", "catk_align", "two_tables", "interpolation", "merge", "proposed")


class PipelineError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    orig_src: str = ""
    orig_tgt: str = ""
    extra_src: str = ""  # comma-separated for several auxiliary bi-texts
    extra_tgt: str = ""
    dev_src: str = ""
    dev_tgt: str = ""
    test_src: str = ""
    test_tgt: str = ""
    mono: str = ""
    strategy: str = "baseline"
    k: int | None = None
    transliterate: bool = False
    translit_model: str = ""
    num_extra_features: int | None = None  # None: choose 1, 2 or 3 on dev
    seeds: tuple = (0,)
    out_dir: str = "run"
    raw: bool = False
    max_tokens: int = 100
    lm_order: int = 3
    max_phrase_len: int = 7
    prune_k: int | None = 20
    align_iterations: int = 5
    diagonal_tension: float = 0.0
    beam_size: int | None = 100
    distortion_limit: int | None = 6
    ttable_limit: int | None = 20
    nbest_size: int = 100
    mert_iterations: int = 8
    mert_restarts: int = 3
    alphas: tuple = DEFAULT_ALPHAS
    feature_counts: tuple = FEATURE_COUNTS

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise PipelineError(f"unknown strategy {self.strategy!r}; expected one of {', '.join(STRATEGIES)}")
        if self.k is not None and self.k < 1:
            raise PipelineError("k must be >= 1")
        if self.num_extra_features is not None and self.num_extra_features not in (1, 2, 3):
            raise PipelineError("num_extra_features must be 1, 2 or 3")

    @property
    def seed(self) -> int:
        return int(self.seeds[0])

    def decoder_config(self) -> DecoderConfig:
        return DecoderConfig(
            beam_size=self.beam_size,
            distortion_limit=self.distortion_limit,
            nbest_size=self.nbest_size,
            ttable_limit=self.ttable_limit,
        )

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # -- "key = value" files ------------------------------------------------

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for f in dataclasses.fields(self):
                fh.write(f"{f.name} = {_format_value(getattr(self, f.name))}\n")

    @classmethod
    def load(cls, path, **overrides) -> "ExperimentConfig":
        values = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise PipelineError(f"{path}:{lineno}: expected 'key = value'")
                key, value = (x.strip() for x in line.split("=", 1))
                values[key] = value
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_strings(values)

    @classmethod
    def from_strings(cls, values: dict) -> "ExperimentConfig":
        types = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in values.items():
            if key not in types:
                raise PipelineError(f"unknown config key {key!r}")
            kwargs[key] = _parse_value(types[key], value) if isinstance(value, str) else value
        return cls(**kwargs)


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return str(v).lower() if isinstance(v, bool) else str(v)


def _parse_value(f: dataclasses.Field, text: str):
    t = str(f.type)
    if text.lower() == "none" and "None" in t:
        return None
    if t.startswith("bool"):
        if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise PipelineError(f"{f.name}: expected a boolean, got {text!r}")
        return text.lower() in ("true", "1", "yes")
    if t.startswith("int"):
        return int(text)
    if t.startswith("float"):
        return float(text)
    if t.startswith("tuple"):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        conv = int if f.name in ("seeds", "feature_counts") else float
        return tuple(conv(p) for p in parts)
    return text


# -- data -------------------------------------------------------------------

@dataclass
class Data:
    orig: Bitext
    extras: list
    dev: Bitext
    test: Bitext
    mono: list

    @property
    def extra(self) -> Bitext:
        out = Bitext()
        for e in self.extras:
            out = out + e
        return out


def _split_paths(s: str) -> list:
    return [p.strip() for p in s.split(",") if p.strip()]


def load_data(cfg: ExperimentConfig) -> Data:
    for name in ("orig_src", "orig_tgt", "dev_src", "dev_tgt", "test_src", "test_tgt"):
        path = getattr(cfg, name)
        if not path or not os.path.exists(path):
            raise PipelineError(f"missing input {name}: {path!r}")
    orig = load_bitext(cfg.orig_src, cfg.orig_tgt, cfg.raw, cfg.max_tokens)
    srcs, tgts = _split_paths(cfg.extra_src), _split_paths(cfg.extra_tgt)
    if len(srcs) != len(tgts):
        raise PipelineError("extra_src and extra_tgt list different numbers of files")
    extras = [load_bitext(s, t, cfg.raw, cfg.max_tokens) for s, t in zip(srcs, tgts)]
    # dev and test keep every line so that outputs stay line-aligned
    dev = load_bitext(cfg.dev_src, cfg.dev_tgt, cfg.raw, max_tokens=10 ** 9)
    test = load_bitext(cfg.test_src, cfg.test_tgt, cfg.raw, max_tokens=10 ** 9)
    if cfg.mono:
        if not os.path.exists(cfg.mono):
            raise PipelineError(f"missing input mono: {cfg.mono!r}")
        mono = read_sentences(cfg.mono, cfg.raw)
    else:
        log.warning("no monolingual corpus given; training the LM on the target side of the training data")
        mono = orig.targets + [t for e in extras for t in e.targets]
    return Data(orig, extras, dev, test, mono)


# -- reports ----------------------------------------------------------------

@dataclass
class ExperimentReport:
    strategy: str
    seed: int
    test_bleu: float
    dev_bleu: float
    bleu_detail: dict
    oov_types: int
    oov_tokens: int
    tables: list  # [{"id", "file", "max_len", "entries", "used", "used_pct"}]
    sign_test: dict | None = None
    choices: dict = field(default_factory=dict)
    timing: float = 0.0
    test_id: str = ""  # fingerprint of the test sources and references

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        return cls(**json.loads(text))

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def read(cls, path) -> "ExperimentReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


# -- the runner ---------------------------------------------------------------

class Runner:
    """Runs strategies over one data set, sharing LM, alignments and tables.

    Artifacts go to ``run_dir``: the LM, copies of dev/test, and one
    sub-directory per strategy with its tables, weights, outputs and report.
    """

    def __init__(self, cfg: ExperimentConfig, data: Data | None = None, run_dir: str | None = None):
        self.cfg = cfg
        self.data = data if data is not None else load_data(cfg)
        if len(self.data.dev) == 0 or len(self.data.test) == 0:
            raise PipelineError("dev and test sets must be non-empty")
        self.run_dir = run_dir or cfg.out_dir
        os.makedirs(os.path.join(self.run_dir, "data"), exist_ok=True)
        self._cache: dict = {}
        self._lm = None
        self._translit = None
        self._choices: dict = {}

    # artifacts shared by strategies

    @property
    def lm(self) -> NGramLM:
        if self._lm is None:
            path = os.path.join(self.run_dir, "lm.txt")
            train_ngram(self.data.mono, self.cfg.lm_order).dump(path)
            self._lm = NGramLM.load(path)
            d = os.path.join(self.run_dir, "data")
            write_sentences(os.path.join(d, "dev.src"), self.data.dev.sources)
            write_sentences(os.path.join(d, "dev.ref"), self.data.dev.targets)
            write_sentences(os.path.join(d, "test.src"), self.data.test.sources)
            write_sentences(os.path.join(d, "test.ref"), self.data.test.targets)
        return self._lm

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def extra(self) -> Bitext:
        """The auxiliary bi-text, transliterated first when configured."""
        def build():
            extra = self.data.extra
            if len(extra) == 0:
                raise PipelineError(f"strategy {self.cfg.strategy!r} needs an extra bi-text")
            if not self.cfg.transliterate:
                return extra
            model = self.transliterator()
            new, stats = apply_to_corpus(model, extra, "source")
            self._cache["translit_stats"] = dataclasses.asdict(stats)
            log.info("transliteration changed %d/%d types, %d/%d tokens",
                     stats.types_changed, stats.types, stats.tokens_changed, stats.tokens)
            return new
        return self._memo("extra", build)

    def transliterator(self) -> TransliterationModel:
        if self._translit is None:
            if self.cfg.translit_model:
                self._translit = TransliterationModel.load(self.cfg.translit_model)
            else:
                self._translit = self._train_translit()
        return self._translit

    def _train_translit(self) -> TransliterationModel:
        d = os.path.join(self.run_dir, "translit")
        os.makedirs(d, exist_ok=True)
        cognates = extract_cognates(self.data.orig, self.data.extra, CognateConfig(iterations=self.cfg.align_iterations))
        write_cognates(os.path.join(d, "cognates.tsv"), cognates)
        if not cognates:
            raise PipelineError("no cognates found; cannot train a transliterator")
        stop = top_types(self.data.orig.sources, 100)
        words = sorted(
            w for w in self.data.orig.source_vocab()
            if len(w) >= 3 and w not in stop and not any(c.isdigit() for c in w)
        )
        model = train_transliterator(cognates, words, seed=self.cfg.seed)
        model.save(d)
        return TransliterationModel.load(d)

    def k(self) -> int:
        if self.cfg.k is not None:
            return self.cfg.k
        return sum(select_k(len(self.data.orig), len(e)) for e in self.data.extras) or 1

    def aligned(self, name: str):
        cfg = self.cfg

        def build():
            if name == "orig":
                bt = self.data.orig
            elif name == "extra":
                bt = self.extra()
            elif name == "cat":
                bt = concat(self.data.orig, self.extra(), 1, "cat")
            elif name == "rep":
                bt = concat(self.data.orig, self.extra(), self.k(), "rep")
            else:
                raise PipelineError(f"unknown bi-text {name!r}")
            return align_bitext(bt, cfg.align_iterations, diagonal_tension=cfg.diagonal_tension)
        return self._memo(("aligned", name), build)

    def table(self, name: str):
        """Phrase tables by name, rounded exactly as they are stored on disk."""
        def build():
            if name == "rep_trunc":
                aligned = truncate_alignments(self.aligned("rep"))
            else:
                aligned = self.aligned(name)
            return build_table(aligned, self.cfg.max_phrase_len, self.cfg.prune_k).rounded()
        return self._memo(("table", name), build)

    # tuning and evaluation

    def tune(self, tables):
        cfg = self.cfg
        return mert(
            self.data.dev, bundle(tables), self.lm, config=cfg.decoder_config(),
            iterations=cfg.mert_iterations, restarts=cfg.mert_restarts, seed=cfg.seed,
        )

    def _systems(self):
        """``(tables, choices)`` for the configured strategy, after tuning."""
        cfg = self.cfg
        s = cfg.strategy
        if s == "baseline":
            tables = [self.table("orig")]
            return tables, self.tune(tables), {}
        if s == "cat1":
            tables = [self.table("cat")]
            return tables, self.tune(tables), {}
        if s == "catk":
            tables = [self.table("rep")]
            return tables, self.tune(tables), {"k": self.k()}
        if s == "catk_align":
            tables = [self.table("rep_trunc")]
            return tables, self.tune(tables), {"k": self.k()}
        if s == "two_tables":
            tables = [self.table("orig"), self.table("extra")]
            return tables, self.tune(tables), {}
        if s == "interpolation":
            t_orig, t_extra = self.table("orig"), self.table("extra")
            built = {}

            def build(alpha):
                built[alpha] = [interpolate(t_orig, t_extra, alpha).rounded()]
                return built[alpha]
            alpha, _, res = grid_alpha(cfg.alphas, build, self.tune)
            return built[alpha], res, {"alpha": alpha}
        if s in ("merge", "proposed"):
            if s == "merge":
                t1, t2 = self.table("orig"), self.table("extra")
            else:
                t1, t2 = self.table("rep_trunc"), self.table("cat")
            counts = (cfg.num_extra_features,) if cfg.num_extra_features else cfg.feature_counts
            built = {}

            def build(n):
                built[n] = [merge(t1, t2, n)]
                return built[n]
            n, _, res = select_num_features(build, self.tune, counts)
            choices = {"num_extra_features": n}
            if s == "proposed":
                choices["k"] = self.k()
            return built[n], res, choices
        raise PipelineError(f"unknown strategy {s!r}")

    def run(self, strategy: str | None = None) -> ExperimentReport:
        if strategy is not None and strategy != self.cfg.strategy:
            return Runner._with_strategy(self, strategy).run()
        cfg = self.cfg
        t0 = time.perf_counter()
        lm = self.lm
        tables, res, choices = self._systems()
        out = os.path.join(self.run_dir, cfg.strategy)
        os.makedirs(out, exist_ok=True)
        names = _table_names(cfg.strategy, len(tables))
        for name, t in zip(names, tables):
            write_table(os.path.join(out, name), t)
        if cfg.strategy == "proposed":
            # the two ingredients of the merge, for inspection
            write_table(os.path.join(out, "rep_trunc.table"), self.table("rep_trunc"))
            write_table(os.path.join(out, "cat.table"), self.table("cat"))
        res.weights.write(os.path.join(out, "weights.txt"))
        if cfg.transliterate and "translit_stats" in self._cache:
            choices["translit"] = self._cache["translit_stats"]
        dconf = cfg.decoder_config()
        dev_hyps = [decode(s, tables, lm, res.weights, dconf) for s in self.data.dev.sources]
        test_hyps = [decode(s, tables, lm, res.weights, dconf) for s in self.data.test.sources]
        write_sentences(os.path.join(out, "dev.hyp"), dev_hyps)
        write_sentences(os.path.join(out, "test.hyp"), test_hyps)
        vocab = sorted({w for t in tables for f, _ in t.entries for w in f})
        with open(os.path.join(out, "train.vocab"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(vocab) + "\n")
        report = _evaluate(
            cfg.strategy, cfg.seed, self.run_dir, out, names, tables, cfg.max_phrase_len,
            dev_hyps, test_hyps, self.data.dev.targets, self.data.test, vocab,
        )
        report.choices = choices
        report.timing = time.perf_counter() - t0
        report.write(os.path.join(out, "report.json"))
        cfg.dump(os.path.join(out, "config.txt"))
        return report

    @staticmethod
    def _with_strategy(runner: "Runner", strategy: str) -> "Runner":
        other = Runner.__new__(Runner)
        other.__dict__.update(runner.__dict__)
        other.cfg = runner.cfg.replace(strategy=strategy)
        return other


def _table_names(strategy: str, n: int) -> list:
    if n == 1:
        return ["table.txt"]
    return [f"table{i}.txt" for i in range(n)]


def _evaluate(strategy, seed, run_dir, out, names, tables, max_len, dev_hyps, test_hyps, dev_refs, test, vocab):
    score = bleu(test_hyps, test.targets)
    dev_score = bleu(dev_hyps, dev_refs)
    oov_t, oov_k = oov_stats(vocab, test.sources)
    tstats = []
    for i, (name, t) in enumerate(zip(names, tables)):
        total, used, pct = table_usage(t, test.sources)
        tstats.append({"id": f"t{i}", "file": name, "max_len": max_len, "entries": total, "used": used, "used_pct": pct})
    st = None
    base = os.path.join(run_dir, "baseline", "test.hyp")
    if strategy != "baseline" and os.path.exists(base):
        st = dataclasses.asdict(sign_test(test_hyps, read_sentences(base), test.targets))
    detail = {
        "precisions": list(score.precisions),
        "brevity_penalty": score.brevity_penalty,
        "hyp_len": score.hyp_len,
        "ref_len": score.ref_len,
    }
    rep = ExperimentReport(strategy, seed, score.score, dev_score.score, detail, oov_t, oov_k, tstats, st)
    rep.test_id = test_fingerprint(test)
    return rep


def test_fingerprint(test: Bitext) -> str:
    h = hashlib.sha1()
    for s, t in test:
        h.update((" ".join(s) + "\t" + " ".join(t) + "\n").encode("utf-8"))
    return h.hexdigest()


def run_experiment(cfg: ExperimentConfig, data: Data | None = None, run_dir: str | None = None) -> ExperimentReport:
    return Runner(cfg, data, run_dir).run()


def run_baseline(cfg: ExperimentConfig, data: Data | None = None, run_dir: str | None = None) -> ExperimentReport:
    return run_experiment(cfg.replace(strategy="baseline"), data, run_dir)


def run_strategy(cfg: ExperimentConfig, data: Data | None = None, run_dir: str | None = None) -> ExperimentReport:
    return run_experiment(cfg, data, run_dir)


def run_proposed(cfg: ExperimentConfig, data: Data | None = None, run_dir: str | None = None) -> ExperimentReport:
    return run_experiment(cfg.replace(strategy="proposed"), data, run_dir)


# -- verification ------------------------------------------------------------

def verify(run_dir: str, strategy: str) -> list:
    """Recompute a stored report from the persisted artifacts.

    Returns a list of human-readable mismatches; empty means every field
    except the wall-clock timing and the tuning choices was reproduced
    exactly. A sign test is only compared when the stored report has one.
    """
    out = os.path.join(run_dir, strategy)
    report = ExperimentReport.read(os.path.join(out, "report.json"))
    cfg = ExperimentConfig.load(os.path.join(out, "config.txt"))
    lm = NGramLM.load(os.path.join(run_dir, "lm.txt"))
    tables = [read_table(os.path.join(out, t["file"]), t["max_len"]) for t in report.tables]
    weights = Weights.read(os.path.join(out, "weights.txt"))
    d = os.path.join(run_dir, "data")
    dev_src = read_sentences(os.path.join(d, "dev.src"))
    dev_ref = read_sentences(os.path.join(d, "dev.ref"))
    test = Bitext(tuple(zip(read_sentences(os.path.join(d, "test.src")), read_sentences(os.path.join(d, "test.ref")))))
    dconf = cfg.decoder_config()
    dev_hyps = [decode(s, tables, lm, weights, dconf) for s in dev_src]
    test_hyps = [decode(s, tables, lm, weights, dconf) for s in test.sources]
    problems = []
    if test_hyps != read_sentences(os.path.join(out, "test.hyp")):
        problems.append("test.hyp differs from a fresh decode")
    if dev_hyps != read_sentences(os.path.join(out, "dev.hyp")):
        problems.append("dev.hyp differs from a fresh decode")
    vocab = sorted({w for t in tables for f, _ in t.entries for w in f})
    again = _evaluate(
        strategy, report.seed, run_dir, out, [t["file"] for t in report.tables], tables,
        report.tables[0]["max_len"], dev_hyps, test_hyps, dev_ref, test, vocab,
    )
    a, b = dataclasses.asdict(report), dataclasses.asdict(again)
    for key in a:
        if key in ("timing", "choices"):
            continue
        if key == "sign_test" and a[key] is None:
            # the baseline may have been produced after this run
            continue
        if a[key] != b[key]:
            problems.append(f"{key}: stored {a[key]!r}, recomputed {b[key]!r}")
    return problems
