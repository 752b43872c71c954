"""Faulty-oracle semantics (persistence, symmetry, accounting) and the
sublinear-query clustering loop."""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbmpeel.graph import GroundTruth
from sbmpeel.oracle import FaultyOracle, NoisyConfig, noisy_clustering, query
from sbmpeel.recovery import empirical_config, make_config


def _truth(sizes):
    sizes = np.asarray(sizes, dtype=np.int64)
    return GroundTruth(labels=np.repeat(np.arange(len(sizes)), sizes), sizes=sizes)


# ---------------------------------------------------------------- query


def test_noiseless_oracle_answers_truth():
    oracle = FaultyOracle(_truth([3, 3]), 1.0, seed=0)
    assert oracle.query(0, 1) == "+"
    assert oracle.query(0, 3) == "-"
    assert query(oracle, 1, 2) == "+"


def test_repeat_query_counts_once_distinct():
    oracle = FaultyOracle(_truth([4, 4]), 0.5, seed=1)
    first = oracle.query(2, 5)
    for _ in range(99):
        assert oracle.query(2, 5) == first
    assert oracle.counter == 100
    assert oracle.distinct_counter == 1


def test_query_validation():
    oracle = FaultyOracle(_truth([4]), 0.5, seed=0)
    with pytest.raises(ValueError):
        oracle.query(1, 1)
    with pytest.raises(IndexError):
        oracle.query(0, 4)
    with pytest.raises(ValueError):
        oracle.query_pairs([0, 1], [1])
    with pytest.raises(ValueError):
        FaultyOracle(_truth([4]), 0.0)
    with pytest.raises(ValueError):
        FaultyOracle(_truth([4]), 1.5)


@given(st.integers(0, 2**32), st.integers(0, 11), st.integers(0, 11))
@settings(max_examples=40)
def test_query_symmetric(seed, u, v):
    if u == v:
        return
    oracle = FaultyOracle(_truth([6, 6]), 0.4, seed=seed)
    assert oracle.query(u, v) == oracle.query(v, u)


def test_persistence_under_adaptive_requeries():
    """2000-step adaptive mix of fresh and repeated pairs: re-asking never
    changes an answer (the full-scale soak lives in the acceptance suite)."""
    oracle = FaultyOracle(_truth([10, 7, 3]), 0.3, seed=5)
    rng = np.random.default_rng(5)
    book = {}
    last_plus = False
    for _ in range(2000):
        if book and (last_plus or rng.random() < 0.5):
            u, v = list(book)[int(rng.integers(len(book)))]
        else:
            u, v = rng.choice(20, size=2, replace=False)
            u, v = int(min(u, v)), int(max(u, v))
        ans = oracle.query(u, v)
        assert book.setdefault((u, v), ans) == ans
        last_plus = ans == "+"
    assert oracle.distinct_counter == len(book)


def test_plus_rate_tracks_bias():
    """Empirical '+' rate on 10^5 same-cluster pairs within 0.02 of
    (1 + delta)/2 at delta = 0.4."""
    truth = _truth([500])
    iu, ju = np.triu_indices(500, 1)
    oracle = FaultyOracle(truth, 0.4, seed=7)
    answers = oracle.query_pairs(iu[:100_000], ju[:100_000])
    assert abs(answers.mean() - 0.7) <= 0.02


def test_distinct_counter_matches_reference_set():
    oracle = FaultyOracle(_truth([8, 8]), 0.6, seed=2)
    rng = np.random.default_rng(2)
    seen = set()
    total = 0
    for _ in range(50):
        m = int(rng.integers(1, 30))
        us = rng.integers(0, 16, size=m)
        vs = (us + rng.integers(1, 16, size=m)) % 16
        oracle.query_pairs(us, vs)
        total += m
        seen.update((min(a, b), max(a, b)) for a, b in zip(us.tolist(), vs.tolist()))
    assert oracle.counter == total
    assert oracle.distinct_counter == len(seen)
    assert oracle.distinct_counter <= oracle.counter


def test_transcript_records_pairs():
    buf = io.StringIO()
    oracle = FaultyOracle(_truth([5]), 1.0, seed=0, transcript=buf)
    oracle.query_pairs([0, 3], [1, 2])
    lines = buf.getvalue().splitlines()
    assert lines == ["0 1 +", "2 3 +"]


def test_answers_depend_on_seed():
    truth = _truth([40])
    iu, ju = np.triu_indices(40, 1)
    a = FaultyOracle(truth, 0.2, seed=0).query_pairs(iu, ju)
    b = FaultyOracle(truth, 0.2, seed=1).query_pairs(iu, ju)
    assert not np.array_equal(a, b)
    c = FaultyOracle(truth, 0.2, seed=0).query_pairs(iu, ju)
    assert np.array_equal(a, c)


# ---------------------------------------------------------------- clustering


def test_noisy_clustering_noiseless_two_clusters():
    """delta = 1 makes the induced instance noiseless; both clusters come
    back exact and the query bound holds."""
    truth = _truth([120, 80])
    for seed in range(3):
        oracle = FaultyOracle(truth, 1.0, seed=seed)
        cfg = NoisyConfig(s=80, recovery_cfg=empirical_config(seed=seed))
        clusters, stats = noisy_clustering(oracle, 200, 1.0, cfg)
        got = {frozenset(c.tolist()) for c in clusters}
        want = {frozenset(truth.members(i).tolist()) for i in range(2)}
        assert got == want
        assert stats["distinct_queries"] <= stats["total_queries"]
        assert stats["distinct_queries"] <= stats["budget_bound"]
        assert stats["budget_bound"] == stats["t_size"] * (stats["t_size"] - 1) // 2 + (
            stats["rounds_successful"] * stats["vote_size"] * 200
        )


def test_noisy_clustering_t_sizing():
    truth = _truth([120, 80])
    oracle = FaultyOracle(truth, 1.0, seed=0)
    cfg = NoisyConfig(s=80, recovery_cfg=empirical_config(seed=0))
    _, stats = noisy_clustering(oracle, 200, 1.0, cfg)
    logn = math.log(200)
    assert stats["t_size_raw"] == math.ceil(200 * 200 * logn * logn / (80 * 80))
    assert stats["t_size"] == min(200, stats["t_size_raw"])
    assert not stats["trivial"]
    assert stats["vote_size"] == math.ceil(4 * logn)
    assert stats["rounds_attempted"] <= 200 // 80


def test_noisy_clustering_trivial_flag():
    """The sample-exceeds-n degeneration is reachable exactly where the
    target size meets the recoverable bound; push c_oracle onto that edge
    and the run clusters the full graph with the trivial flag raised."""
    truth = _truth([32, 32])
    oracle = FaultyOracle(truth, 1.0, seed=0)
    c = 31.9999999 / (8 * math.log(64))
    cfg = NoisyConfig(s=32, c_oracle=c, recovery_cfg=empirical_config(seed=0))
    clusters, stats = noisy_clustering(oracle, 64, 1.0, cfg)
    assert stats["trivial"] and stats["t_size"] == 64
    got = {frozenset(c.tolist()) for c in clusters}
    assert got == {frozenset(truth.members(i).tolist()) for i in range(2)}


def test_noisy_clustering_size_bounds():
    truth = _truth([120, 80])
    with pytest.raises(ValueError):
        noisy_clustering(
            FaultyOracle(truth, 1.0), 200, 1.0, NoisyConfig(s=300, recovery_cfg=empirical_config())
        )
    # below the recoverable lower bound for the profile
    with pytest.raises(ValueError):
        noisy_clustering(
            FaultyOracle(truth, 1.0), 200, 1.0, NoisyConfig(s=20, recovery_cfg=empirical_config())
        )


def test_noisy_profile_changes_lower_bound():
    """The literal profile demands s above sqrt(n) log^2(n) / delta, which
    rejects an s the calibrated profile accepts."""
    truth = _truth([120, 80])
    with pytest.raises(ValueError):
        noisy_clustering(
            FaultyOracle(truth, 1.0),
            200,
            1.0,
            NoisyConfig(s=80, recovery_cfg=make_config("theory", seed=0)),
        )
