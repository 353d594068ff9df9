import math

import pytest

import bts


def flat(minutes, per_minute):
    return [(m, per_minute) for m in range(minutes)]


def test_bandit_primitives():
    state = bts.init_arms(3)
    assert [a.alpha for a in state.arms] == [1.0, 1.0, 1.0]
    counters = bts.BatchCounters([50, 100, 200], [950, 3945, 4700])
    norm = bts.normalization_update(state, counters, 9945)
    assert norm.arms[0].alpha == 166.75
    assert norm.arms[0].beta == 3150.25
    summed = bts.summation_update(state, bts.record_response(bts.BatchCounters(3), 1, True))
    assert summed.arms[1].alpha == 2.0
    with pytest.raises(bts.ConfigError):
        bts.init_arms(1)
    with pytest.raises(bts.InputError):
        bts.normalization_update(state, counters, 5)


def test_sample_arms_matches_win_probability():
    state = bts.BanditState([bts.ArmPosterior(2, 1), bts.ArmPosterior(1, 1)])
    draws = bts.sample_arms(state, 100_000, 7)
    share = draws.count(0) / len(draws)
    assert abs(share - 2 / 3) < 4 * math.sqrt((2 / 9) / len(draws))


def test_batches_and_lifespan():
    trace = [(0, 615), (1, 4568), (2, 4762), (3, 5282), (4, 5412), (5, 5334)]
    sizes = [b.size for b in bts.build_batches(trace, bts.SimConfig(update_interval=3, horizon=6))]
    assert sizes == [9945, 16028]
    assert bts.active_lifespan(flat(100, 1)) == 94


def test_run_article_and_baseline():
    spec = bts.ArticleSpec("py", [0.06, 0.04, 0.03], flat(600, 50))
    config = bts.SimConfig(update_interval=5, seed=3)
    result = bts.run_article(spec, config)
    assert sum(result.impressions) == 30_000
    assert bts.invariant_violations(result, spec, config) == []
    again = bts.run_article(spec, config)
    assert again.clicks == result.clicks
    base = bts.run_test_rollout(spec, config)
    assert base.test_impressions == 3000
    assert base.total_clicks == sum(base.testing_clicks) + base.post_clicks
    gain = bts.click_gain([result], [base])
    assert gain.first_hour > 0
    assert -1.0 < bts.suboptimal_decrease([result], [base], [spec]) < 1.0
    assert bts.time_to_optimize(result, spec) is not None
    assert bts.false_convergence_rate([result], [spec]) == 0.0


def test_self_correction_and_sign_test():
    spec = bts.ArticleSpec("sc", [0.10, 0.08, 0.05], flat(2880, 30))
    minutes = bts.self_correction(spec, bts.SimConfig(), seed=1)
    assert minutes is None or minutes % 5 == 0
    assert bts.sign_test_p_value(20, 0) == pytest.approx(2.0 ** -20)


def test_corpus_round_trip(tmp_path):
    corpus = bts.generate_synthetic_corpus(articles=4, min_arms=2, max_arms=3, seed=5)
    path = tmp_path / "corpus.jsonl"
    bts.write_corpus(str(path), corpus)
    back = bts.parse_corpus(str(path))
    assert [a.article_id for a in back] == [a.article_id for a in corpus]
    assert [a.theta_hat for a in back] == [a.theta_hat for a in corpus]
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"article_id": "x", "theta_hat": [1.2, 0.5], "trace": [[0, 1]]}\n')
    with pytest.raises(bts.DataError, match=r"theta_hat\[0\]"):
        bts.parse_corpus(str(bad))


def test_invalid_config_rejected():
    with pytest.raises(bts.ConfigError):
        bts.SimConfig(update_interval=0)
    with pytest.raises(bts.ConfigError):
        bts.SimConfig(method="average")
    with pytest.raises(bts.DataError):
        bts.ArticleSpec("x", [0.5], flat(3, 1))
