import os

import pytest

from relsmt.combine import merge
from relsmt.corpus import Bitext, read_sentences
from relsmt.evaluation import bleu
from relsmt.phrases import read_table
from relsmt.pipeline import (
    STRATEGIES,
    Data,
    ExperimentConfig,
    ExperimentReport,
    PipelineError,
    Runner,
    load_data,
    run_baseline,
    run_proposed,
    run_strategy,
    verify,
)
from relsmt.synthetic import gen_synthetic

FAST = dict(
    beam_size=5, distortion_limit=2, ttable_limit=4, nbest_size=5, mert_iterations=1,
    mert_restarts=0, max_phrase_len=3, alphas=(0.5, 0.9), feature_counts=(1, 3),
)


@pytest.fixture(scope="module")
def corpora():
    return gen_synthetic(seed=0, n_orig=60, n_extra=200, n_test=15, n_dev=10, vocab_size=120)


def data_of(d):
    return Data(d.orig, [d.extra], d.dev, d.test, d.mono)


@pytest.fixture(scope="module")
def all_runs(corpora, tmp_path_factory):
    run_dir = str(tmp_path_factory.mktemp("runs"))
    runner = Runner(ExperimentConfig(**FAST), data_of(corpora), run_dir)
    reports = {s: runner.run(s) for s in STRATEGIES}
    return run_dir, reports


def test_every_strategy_runs(all_runs):
    run_dir, reports = all_runs
    for s, rep in reports.items():
        assert 0.0 <= rep.test_bleu <= 1.0
        for name in ("weights.txt", "test.hyp", "dev.hyp", "report.json", "config.txt"):
            assert os.path.exists(os.path.join(run_dir, s, name))
        assert (rep.sign_test is None) == (s == "baseline")
    assert reports["catk"].choices["k"] == 3
    assert reports["interpolation"].choices["alpha"] in (0.5, 0.9)
    assert reports["proposed"].choices["num_extra_features"] in (1, 3)
    assert len(reports["two_tables"].tables) == 2


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_verify_reproduces(all_runs, strategy):
    run_dir, _ = all_runs
    assert verify(run_dir, strategy) == []


def test_verify_detects_tampering(all_runs, tmp_path):
    import shutil

    run_dir, _ = all_runs
    copy = tmp_path / "copy"
    shutil.copytree(run_dir, copy)
    hyp = copy / "baseline" / "test.hyp"
    lines = hyp.read_text().splitlines()
    lines[0] = "tampered"
    hyp.write_text("\n".join(lines) + "\n")
    assert verify(str(copy), "baseline")


def test_proposed_table_is_merge_of_ingredients(all_runs):
    run_dir, reports = all_runs
    out = os.path.join(run_dir, "proposed")
    n = reports["proposed"].choices["num_extra_features"]
    rep_trunc = read_table(os.path.join(out, "rep_trunc.table"), 3)
    cat = read_table(os.path.join(out, "cat.table"), 3)
    assert read_table(os.path.join(out, "table.txt"), 3) == merge(rep_trunc, cat, n)


def test_same_seed_same_result(corpora, all_runs, tmp_path):
    _, reports = all_runs
    again = run_baseline(ExperimentConfig(**FAST), data_of(corpora), str(tmp_path))
    assert again.test_bleu == reports["baseline"].test_bleu
    assert again.dev_bleu == reports["baseline"].dev_bleu


def test_cat1_equals_baseline_on_concatenation(corpora, all_runs, tmp_path):
    _, reports = all_runs
    joined = Data(corpora.orig + corpora.extra, [], corpora.dev, corpora.test, corpora.mono)
    rep = run_baseline(ExperimentConfig(**FAST), joined, str(tmp_path))
    assert rep.test_bleu == reports["cat1"].test_bleu


def test_self_test_mode_scores_one(tmp_path):
    # identical source and target languages
    d = gen_synthetic(seed=1, n_orig=80, n_extra=10, n_test=10, n_dev=5, vocab_size=40)
    same = lambda bt: Bitext([(t, t) for _, t in bt])  # noqa: E731
    data = Data(same(d.orig), [same(d.extra)], same(d.dev), same(d.test), d.mono)
    rep = run_baseline(ExperimentConfig(), data, str(tmp_path))
    assert rep.test_bleu == 1.0
    refs = read_sentences(tmp_path / "data" / "test.ref")
    assert refs == data.test.targets and bleu(refs, refs).score == 1.0


def test_transliteration_path(corpora, tmp_path):
    cfg = ExperimentConfig(**FAST, transliterate=True, num_extra_features=1)
    d = gen_synthetic(seed=2, n_orig=300, n_extra=300, n_test=10, n_dev=5, vocab_size=200)
    rep = run_proposed(cfg, data_of(d), str(tmp_path))
    assert "translit" in rep.choices
    assert os.path.exists(tmp_path / "translit" / "cognates.tsv")


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(**FAST, k=4, seeds=(1, 2), transliterate=True, prune_k=None)
    cfg.dump(tmp_path / "c")
    assert ExperimentConfig.load(tmp_path / "c") == cfg
    assert ExperimentConfig.load(tmp_path / "c", k=2).k == 2
    assert cfg.seed == 1


@pytest.mark.parametrize("bad", [{"strategy": "magic"}, {"k": 0}, {"num_extra_features": 4}])
def test_config_errors(bad):
    with pytest.raises(PipelineError):
        ExperimentConfig(**bad)


def test_load_data_from_files(corpora, tmp_path):
    corpora.write(tmp_path)
    j = lambda n: str(tmp_path / n)  # noqa: E731
    cfg = ExperimentConfig(
        orig_src=j("orig.x1"), orig_tgt=j("orig.y"), extra_src=j("extra.x2"), extra_tgt=j("extra.y"),
        dev_src=j("dev.x1"), dev_tgt=j("dev.y"), test_src=j("test.x1"), test_tgt=j("test.y"), mono=j("mono.y"),
    )
    data = load_data(cfg)
    assert data.orig == corpora.orig and data.extra == corpora.extra and data.test == corpora.test
    with pytest.raises(PipelineError):
        load_data(cfg.replace(dev_src=j("missing")))


def test_strategy_needs_extra(corpora, tmp_path):
    data = Data(corpora.orig, [], corpora.dev, corpora.test, corpora.mono)
    with pytest.raises(PipelineError):
        run_strategy(ExperimentConfig(**FAST, strategy="cat1"), data, str(tmp_path))


def test_report_json_round_trip(all_runs):
    _, reports = all_runs
    rep = reports["proposed"]
    assert ExperimentReport.from_json(rep.to_json()) == rep
    assert bleu([("a",)], [("a",)]).score == 1.0
