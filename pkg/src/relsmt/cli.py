"""Command-line interface: ``relsmt <subcommand> ...``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

from . import align as align_mod
from . import cognates as cog
from . import corpus, evaluation, phrases, pipeline, report, synthetic, translit
from .combine import bundle, interpolate, merge
from .decoder import DecoderConfig, Weights, decode, decode_nbest, format_nbest
from .lm import NGramLM, train_ngram
from .tune import mert

log = logging.getLogger("relsmt")


def _decoder_args(p):
    p.add_argument("--beam-size", type=int, default=100)
    p.add_argument("--distortion-limit", type=int, default=6)
    p.add_argument("--ttable-limit", type=int, default=20)
    p.add_argument("--nbest-size", type=int, default=100)
    p.add_argument("--monotone", action="store_true")


def _decoder_config(args) -> DecoderConfig:
    return DecoderConfig(
        beam_size=args.beam_size, distortion_limit=args.distortion_limit, monotone=args.monotone,
        nbest_size=args.nbest_size, ttable_limit=args.ttable_limit,
    )


def _tables(paths, max_len):
    return bundle([phrases.read_table(p, max_len) for p in paths])


def cmd_tokenize(args):
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    with open(args.input, encoding="utf-8") as fh:
        for line in fh:
            out.write(" ".join(corpus.tokenize(line)) + "\n")
    if out is not sys.stdout:
        out.close()


def cmd_align(args):
    bt = corpus.load_bitext(args.src, args.tgt, args.raw, args.max_tokens)
    aligned = align_mod.align_bitext(bt, args.iterations, diagonal_tension=args.diagonal_tension)
    align_mod.write_alignments(args.output, aligned.alignments)
    if args.lex_prefix:
        align_mod.write_lex_table(args.lex_prefix + ".s2t", align_mod.lexical_table(aligned))
        align_mod.write_lex_table(args.lex_prefix + ".t2s", align_mod.lexical_table(aligned, reverse=True))
    log.info("aligned %d pairs (%d dropped)", len(bt), bt.dropped)


def cmd_lm_train(args):
    lm = train_ngram(corpus.read_sentences(args.corpus, args.raw), args.order)
    lm.dump(args.output)


def cmd_extract(args):
    bt = corpus.load_bitext(args.src, args.tgt, args.raw, args.max_tokens)
    if args.alignment:
        aligned = align_mod.AlignedBitext(bt, align_mod.read_alignments(args.alignment))
    else:
        aligned = align_mod.align_bitext(bt, args.iterations)
    prune_k = None if args.prune_k <= 0 else args.prune_k
    table = phrases.build_table(aligned, args.max_len, prune_k)
    phrases.write_table(args.output, table)
    log.info("%d phrase pairs", len(table))


def cmd_merge(args):
    t1 = phrases.read_table(args.orig, args.max_len)
    t2 = phrases.read_table(args.extra, args.max_len)
    phrases.write_table(args.output, merge(t1, t2, args.num_extra_features))


def cmd_interpolate(args):
    t1 = phrases.read_table(args.orig, args.max_len)
    t2 = phrases.read_table(args.extra, args.max_len)
    phrases.write_table(args.output, interpolate(t1, t2, args.alpha))


def cmd_cognates(args):
    b1 = corpus.load_bitext(args.x1, args.x1_pivot, args.raw)
    b2 = corpus.load_bitext(args.x2, args.x2_pivot, args.raw)
    cfg = cog.CognateConfig(
        iterations=args.iterations, prod_threshold=args.prod_threshold, lcsr_threshold=args.lcsr_threshold,
        n_stopwords=args.n_stopwords, lex_source=args.lex_source,
    )
    if args.stopwords_x1:
        cfg.stopwords_x1 = frozenset(_words(args.stopwords_x1))
    if args.stopwords_x2:
        cfg.stopwords_x2 = frozenset(_words(args.stopwords_x2))
    pairs = cog.extract_cognates(b1, b2, cfg)
    cog.write_cognates(args.output, pairs)
    log.info("%d cognate pairs", len(pairs))


def _words(path):
    with open(path, encoding="utf-8") as fh:
        return [w for line in fh for w in line.split()]


def cmd_translit_train(args):
    pairs = cog.read_cognates(args.cognates)
    words = _words(args.target_words) if args.target_words else ()
    model = translit.train_transliterator(pairs, words, args.dev_fraction, seed=args.seed)
    model.save(args.output)


def cmd_translit_apply(args):
    model = translit.TransliterationModel.load(args.model)
    bt = corpus.load_bitext(args.src, args.tgt, args.raw, args.max_tokens)
    new, stats = translit.apply_to_corpus(model, bt, args.side)
    corpus.write_bitext(new, args.out_src, args.out_tgt)
    print(f"types changed {stats.types_changed}/{stats.types}, tokens changed {stats.tokens_changed}/{stats.tokens}")


def cmd_decode(args):
    tables = _tables(args.table, args.max_len)
    lm = NGramLM.load(args.lm)
    weights = Weights.read(args.weights) if args.weights else Weights.for_bundle(tables)
    config = _decoder_config(args)
    sents = corpus.read_sentences(args.input, args.raw)
    with open(args.output, "w", encoding="utf-8") as out:
        nb = open(args.nbest, "w", encoding="utf-8") if args.nbest else None
        for i, s in enumerate(sents):
            if nb is None:
                out.write(" ".join(decode(s, tables, lm, weights, config)) + "\n")
                continue
            entries = decode_nbest(s, tables, lm, weights, config)
            out.write(" ".join(entries[0][0]) + "\n")
            for line in format_nbest(i, entries):
                nb.write(line + "\n")
        if nb is not None:
            nb.close()


def cmd_bleu(args):
    hyps = corpus.read_sentences(args.hyp)
    refs = corpus.read_sentences(args.ref)
    print(evaluation.bleu(hyps, refs).render())


def cmd_signtest(args):
    a = corpus.read_sentences(args.hyp_a)
    b = corpus.read_sentences(args.hyp_b)
    refs = corpus.read_sentences(args.ref)
    print(evaluation.sign_test(a, b, refs).render())


def cmd_tune(args):
    tables = _tables(args.table, args.max_len)
    lm = NGramLM.load(args.lm)
    dev = corpus.load_bitext(args.dev_src, args.dev_ref, args.raw, max_tokens=10 ** 9)
    init = Weights.read(args.init) if args.init else None
    res = mert(
        dev, tables, lm, init, _decoder_config(args),
        iterations=args.iterations, restarts=args.restarts, seed=args.seed,
    )
    res.weights.write(args.output)
    print(f"dev BLEU {100 * res.dev_bleu:.2f} after {res.iterations_run} iterations")


def _config_from_args(args) -> pipeline.ExperimentConfig:
    overrides = {}
    for f in dataclasses.fields(pipeline.ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            overrides[f.name] = v
    if args.config:
        return pipeline.ExperimentConfig.load(args.config, **overrides)
    return pipeline.ExperimentConfig.from_strings(overrides)


def cmd_run(args):
    run_all = args.strategy == "all"
    if run_all:
        args.strategy = "baseline"
    cfg = _config_from_args(args)
    strategies = pipeline.STRATEGIES if run_all else (cfg.strategy,)
    data = pipeline.load_data(cfg)
    for seed in cfg.seeds:
        run_dir = cfg.out_dir if len(cfg.seeds) == 1 else os.path.join(cfg.out_dir, f"seed{seed}")
        runner = pipeline.Runner(cfg.replace(seeds=(seed,)), data, run_dir)
        order = sorted(strategies, key=lambda s: s != "baseline")
        for s in order:
            rep = runner.run(s)
            line = f"seed {seed} {s:14s} test BLEU {100 * rep.test_bleu:6.2f}  dev BLEU {100 * rep.dev_bleu:6.2f}"
            if rep.sign_test:
                line += f"  p={rep.sign_test['p_value']:.3g}"
            print(line)


def cmd_gen_synthetic(args):
    rules = [r for r in args.rules.split(",") if r.strip()] if args.rules is not None else synthetic.DEFAULT_RULES
    data = synthetic.gen_synthetic(
        seed=args.seed, n_orig=args.n_orig, n_extra=args.n_extra, n_test=args.n_test, n_dev=args.n_dev,
        rules=rules, substitution_rate=args.substitution_rate, n_false_friends=args.false_friends,
        vocab_size=args.vocab_size,
    )
    data.write(args.output)


def cmd_verify(args):
    problems = pipeline.verify(args.run_dir, args.strategy)
    if problems:
        for p in problems:
            print("MISMATCH", p)
        sys.exit(1)
    print("ok")


def cmd_report(args):
    reps = {}
    for path in args.reports:
        rep = pipeline.ExperimentReport.read(path)
        reps[path] = rep
    base = [r for r in reps.values() if r.strategy == "baseline"]
    if not base:
        sys.exit("no baseline report among the inputs")
    rows = {r.strategy: {"test": r} for r in reps.values()}
    print(report.render_grid(rows, {"test": base[0]}, csv=args.csv))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relsmt", description="Phrase-based SMT with related-language bi-texts.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", help="lowercase and split off punctuation")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_tokenize)

    def bitext_args(p):
        p.add_argument("--src", required=True)
        p.add_argument("--tgt", required=True)
        p.add_argument("--raw", action="store_true", help="tokenize input lines")
        p.add_argument("--max-tokens", type=int, default=corpus.MAX_TOKENS)

    p = sub.add_parser("align", help="word-align a bi-text")
    bitext_args(p)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--iterations", type=int, default=align_mod.DEFAULT_ITERATIONS)
    p.add_argument("--diagonal-tension", type=float, default=0.0)
    p.add_argument("--lex-prefix", help="also write lexical tables to PREFIX.s2t / PREFIX.t2s")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("lm-train", help="train a Witten-Bell n-gram LM")
    p.add_argument("--corpus", required=True)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--raw", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_lm_train)

    p = sub.add_parser("extract", help="build a phrase table")
    bitext_args(p)
    p.add_argument("--alignment", help="alignment file; aligned from scratch when absent")
    p.add_argument("--iterations", type=int, default=align_mod.DEFAULT_ITERATIONS)
    p.add_argument("--max-len", type=int, default=phrases.MAX_LEN)
    p.add_argument("--prune-k", type=int, default=phrases.PRUNE_K, help="0 disables pruning")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_extract)

    for name, fn in (("merge", cmd_merge), ("interpolate", cmd_interpolate)):
        p = sub.add_parser(name, help=f"{name} two phrase tables")
        p.add_argument("orig")
        p.add_argument("extra")
        p.add_argument("-o", "--output", required=True)
        p.add_argument("--max-len", type=int, default=phrases.MAX_LEN)
        if name == "merge":
            p.add_argument("--num-extra-features", type=int, default=3, choices=(1, 2, 3))
        else:
            p.add_argument("--alpha", type=float, required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("cognates", help="extract cognates through a shared pivot language")
    p.add_argument("--x1", required=True, help="source side of the X1-pivot bi-text")
    p.add_argument("--x1-pivot", required=True)
    p.add_argument("--x2", required=True, help="source side of the X2-pivot bi-text")
    p.add_argument("--x2-pivot", required=True)
    p.add_argument("--raw", action="store_true")
    p.add_argument("--iterations", type=int, default=align_mod.DEFAULT_ITERATIONS)
    p.add_argument("--prod-threshold", type=float, default=cog.PROD_THRESHOLD)
    p.add_argument("--lcsr-threshold", type=float, default=cog.LCSR_THRESHOLD)
    p.add_argument("--n-stopwords", type=int, default=cog.N_STOPWORDS)
    p.add_argument("--stopwords-x1")
    p.add_argument("--stopwords-x2")
    p.add_argument("--lex-source", choices=("alignment", "model1"), default="alignment")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_cognates)

    p = sub.add_parser("translit-train", help="train an X2->X1 character transliterator")
    p.add_argument("--cognates", required=True)
    p.add_argument("--target-words", help="whitespace-separated X1 words for the character LM")
    p.add_argument("--dev-fraction", type=float, default=translit.DEV_FRACTION)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="model directory")
    p.set_defaults(func=cmd_translit_train)

    p = sub.add_parser("translit-apply", help="transliterate one side of a bi-text")
    bitext_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--side", choices=("source", "target"), default="source")
    p.add_argument("--out-src", required=True)
    p.add_argument("--out-tgt", required=True)
    p.set_defaults(func=cmd_translit_apply)

    def table_args(p):
        p.add_argument("--table", action="append", required=True, help="repeat for several tables")
        p.add_argument("--max-len", type=int, default=phrases.MAX_LEN)
        p.add_argument("--lm", required=True)

    p = sub.add_parser("decode", help="translate sentences")
    table_args(p)
    p.add_argument("--weights")
    p.add_argument("--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--nbest", help="also write n-best lists here")
    p.add_argument("--raw", action="store_true")
    _decoder_args(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("bleu", help="corpus BLEU")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.set_defaults(func=cmd_bleu)

    p = sub.add_parser("signtest", help="paired sign test of system A against B")
    p.add_argument("--hyp-a", required=True)
    p.add_argument("--hyp-b", required=True)
    p.add_argument("--ref", required=True)
    p.set_defaults(func=cmd_signtest)

    p = sub.add_parser("tune", help="MERT on a development set")
    table_args(p)
    p.add_argument("--dev-src", required=True)
    p.add_argument("--dev-ref", required=True)
    p.add_argument("--raw", action="store_true")
    p.add_argument("--init")
    p.add_argument("--iterations", type=int, default=8)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    _decoder_args(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("run", help="run an experiment from a config file and/or flags")
    p.add_argument("--config")
    for f in dataclasses.fields(pipeline.ExperimentConfig):
        if f.name == "strategy":
            p.add_argument("--strategy", choices=pipeline.STRATEGIES + ("all",))
        else:
            flag = "--" + f.name.replace("_", "-")
            p.add_argument(flag, dest=f.name, help="overrides the config file")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gen-synthetic", help="write a synthetic related-language benchmark")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-orig", type=int, default=1000)
    p.add_argument("--n-extra", type=int, default=10000)
    p.add_argument("--n-dev", type=int, default=200)
    p.add_argument("--n-test", type=int, default=200)
    p.add_argument("--vocab-size", type=int, default=2000)
    p.add_argument("--rules", help="comma-separated, e.g. suffix:cao>cion,char:v>b; empty for none")
    p.add_argument("--substitution-rate", type=float, default=0.2)
    p.add_argument("--false-friends", type=int, default=5)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("verify", help="recompute a stored report from its artifacts")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--strategy", required=True, choices=pipeline.STRATEGIES)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="render a comparison grid from report.json files")
    p.add_argument("reports", nargs="+")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
