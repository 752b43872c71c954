"""Faulty pairwise-membership oracle and sublinear-query clustering.

The oracle answers "same cluster?" correctly with probability (1+delta)/2.
Answers are persistent: each unordered pair's answer is a pure function of
(seed, pair), computed by hashing, so repeat queries are consistent without
any memo table and concurrent callers never conflict. Two monotone counters
track total and distinct queries (distinct via a triangular-index bitset).

The clustering routine queries all pairs inside a small random sample T,
recovers clusters of the positive-answer graph on T with the spectral
pipeline, then votes every outside vertex against a logarithmic-size
fingerprint of each recovered cluster.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, pack_bool_rows
from .recovery import RecoveryConfig, cluster_once, DegeneratePartitionError

_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_INV53 = 1.0 / float(1 << 53)


def _uniforms(seed, lo, hi):
    """One uniform in [0, 1) per unordered pair (lo[i], hi[i]), lo < hi."""
    seed_mix = np.uint64((int(seed) * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF)
    x = (lo.astype(np.uint64) << _S32) ^ hi.astype(np.uint64)
    x = (x + seed_mix) ^ _GOLD
    x = (x ^ (x >> _S30)) * _MIX1
    x = (x ^ (x >> _S27)) * _MIX2
    x ^= x >> _S31
    x = (x + _GOLD) ^ (x >> _S30)
    x = (x ^ (x >> _S27)) * _MIX1
    x ^= x >> _S31
    return (x >> _S11).astype(np.float64) * _INV53


@dataclass
class NoisyConfig:
    """Parameters of a sublinear-query run.

    s: smallest cluster size the run should recover; c_oracle scales the
    sample T; recovery_cfg drives the inner spectral recovery (its profile
    also selects which lower bound on s is enforced).
    """

    s: int
    c_oracle: float = 1.0
    recovery_cfg: RecoveryConfig = field(default_factory=RecoveryConfig)


class FaultyOracle:
    """Same-cluster oracle with persistent noise and query accounting."""

    def __init__(self, truth, delta, seed=0, transcript=None):
        if not (0.0 < delta <= 1.0):
            raise ValueError("delta must be in (0, 1]")
        self._labels = np.asarray(truth.labels, dtype=np.int64)
        self.n = len(self._labels)
        self.delta = float(delta)
        self.seed = int(seed)
        self.counter = 0
        self.distinct_counter = 0
        npairs = self.n * (self.n - 1) // 2
        self._seen = np.zeros((npairs + 7) // 8, dtype=np.uint8)
        self._transcript = transcript

    def _pair_index(self, lo, hi):
        return lo * (2 * self.n - lo - 1) // 2 + (hi - lo - 1)

    def _record(self, lo, hi, answers):
        self.counter += len(lo)
        idx = self._pair_index(lo.astype(np.int64), hi.astype(np.int64))
        uq = np.unique(idx)
        byte, bit = uq >> 3, (uq & 7).astype(np.uint8)
        fresh = ((self._seen[byte] >> bit) & 1) == 0
        self.distinct_counter += int(fresh.sum())
        np.bitwise_or.at(self._seen, byte[fresh], np.uint8(1) << bit[fresh])
        if self._transcript is not None:
            for a, b, ans in zip(lo.tolist(), hi.tolist(), answers.tolist()):
                self._transcript.write(f"{a} {b} {'+' if ans else '-'}\n")

    def query_pairs(self, us, vs):
        """Bulk query; returns a bool array (True = '+'). Counts every call."""
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        if us.shape != vs.shape:
            raise ValueError("endpoint arrays must have the same shape")
        if (us == vs).any():
            raise ValueError("cannot query a vertex against itself")
        if us.size and (
            min(us.min(), vs.min()) < 0 or max(us.max(), vs.max()) >= self.n
        ):
            raise IndexError("vertex index out of range")
        lo = np.minimum(us, vs)
        hi = np.maximum(us, vs)
        same = self._labels[lo] == self._labels[hi]
        thresh = np.where(same, (1.0 + self.delta) / 2.0, (1.0 - self.delta) / 2.0)
        answers = _uniforms(self.seed, lo, hi) < thresh
        self._record(lo, hi, answers)
        return answers

    def query(self, u, v):
        """Single query; returns '+' or '-'."""
        return "+" if bool(self.query_pairs([u], [v])[0]) else "-"


def query(oracle, u, v):
    """Free-function form of oracle.query(u, v)."""
    return oracle.query(u, v)


def _min_cluster_bound(n, delta, cfg):
    logn = math.log(n)
    if cfg.recovery_cfg.profile == "theory":
        return cfg.c_oracle * math.sqrt(n) * logn * logn / delta
    return cfg.c_oracle * math.sqrt(n) * logn / delta


def noisy_clustering(oracle, n, delta, cfg):
    """Recover all clusters of size > cfg.s with a sublinear query budget.

    Returns (clusters, stats). stats records total/distinct query counts,
    the sample size, per-round progress, and the budget bound
    C(|T|, 2) + successful_rounds * vote_size * n.
    """
    if cfg.s > n:
        raise ValueError("target cluster size exceeds n")
    bound = _min_cluster_bound(n, delta, cfg)
    if cfg.s < bound:
        raise ValueError(
            f"target size {cfg.s} is below the recoverable bound {bound:.1f} "
            f"for the {cfg.recovery_cfg.profile} profile"
        )
    rng = np.random.default_rng(cfg.recovery_cfg.seed)
    logn = math.log(n)
    t_raw = math.ceil(
        (cfg.c_oracle**2) * n * n * logn * logn / (cfg.s**2 * delta**2)
    )
    t_size = min(n, t_raw)
    trivial = t_raw >= n
    sample = np.sort(rng.choice(n, size=t_size, replace=False))

    # all pairs inside the sample, row by row
    adj = np.zeros((t_size, t_size), dtype=bool)
    for i in range(t_size - 1):
        ans = oracle.query_pairs(
            np.full(t_size - 1 - i, sample[i]), sample[i + 1 :]
        )
        adj[i, i + 1 :] = ans
    adj |= adj.T

    p_in = (1.0 + delta) / 2.0
    q_out = (1.0 - delta) / 2.0
    vote_size = math.ceil(4.0 * logn / delta**2)
    t_active = np.ones(t_size, dtype=bool)
    v_active = np.ones(n, dtype=bool)
    clusters = []
    rounds_attempted = 0
    rounds_successful = 0
    max_rounds = n // cfg.s
    for _ in range(max_rounds):
        rounds_attempted += 1
        live = np.flatnonzero(t_active)
        if len(live) < 8:
            continue
        sub = Graph._from_packed(
            len(live), pack_bool_rows(adj[np.ix_(live, live)])
        )
        try:
            got = cluster_once(sub, p_in, q_out, cfg.recovery_cfg, rng=rng)
        except DegeneratePartitionError:
            got = None
        if got is None or len(got) == 0:
            continue
        rounds_successful += 1
        t_ell = sample[live[got]]
        fingerprint = t_ell[: min(len(t_ell), vote_size)]
        outside_mask = v_active.copy()
        outside_mask[sample[t_active]] = False
        outside_mask[t_ell] = False
        outside = np.flatnonzero(outside_mask)
        voted = np.empty(0, dtype=np.int64)
        if outside.size:
            plus = np.zeros(len(outside), dtype=np.int64)
            for f in fingerprint:
                plus += oracle.query_pairs(outside, np.full(len(outside), f))
            voted = outside[plus >= len(fingerprint) / 2.0]
        cluster = np.sort(np.concatenate([t_ell, voted]))
        clusters.append(cluster)
        t_active[np.isin(sample, t_ell)] = False
        v_active[cluster] = False
    stats = {
        "n": n,
        "delta": delta,
        "s": cfg.s,
        "t_size": t_size,
        "t_size_raw": t_raw,
        "trivial": trivial,
        "vote_size": vote_size,
        "rounds_attempted": rounds_attempted,
        "rounds_successful": rounds_successful,
        "total_queries": oracle.counter,
        "distinct_queries": oracle.distinct_counter,
        "budget_bound": t_size * (t_size - 1) // 2
        + rounds_successful * vote_size * n,
    }
    return clusters, stats
