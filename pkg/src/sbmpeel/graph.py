"""Graph representation, planted-partition sampling, and peeling primitives.

Graphs are undirected, simple, and stored as bit-packed adjacency rows
(uint64 words) so neighbor counting is a popcount over `row & mask`.
Sampling draws one uniform per unordered pair in fixed lexicographic order
from a PCG64 stream, which makes instances bit-reproducible from the seed.
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import popcount_rows_and_mask


def _as_index_array(x, n):
    idx = np.asarray(x, dtype=np.int64)
    if idx.ndim != 1:
        idx = idx.reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError("vertex index out of range")
    return idx


def pack_mask(n, idx):
    """Bit mask of the vertex set `idx` as (w,) uint64 words."""
    bits = np.zeros(n, dtype=bool)
    bits[_as_index_array(idx, n)] = True
    return pack_bool_rows(bits.reshape(1, -1))[0]


def pack_bool_rows(rows_bool):
    """(m, n) bool -> (m, w) uint64, padding bits zero."""
    m, n = rows_bool.shape
    nbytes = (n + 7) // 8
    w = (nbytes + 7) // 8
    packed = np.packbits(rows_bool, axis=1)
    if packed.shape[1] != w * 8:
        padded = np.zeros((m, w * 8), dtype=np.uint8)
        padded[:, :nbytes] = packed
        packed = padded
    return np.ascontiguousarray(packed).view(np.uint64)


@dataclass(frozen=True)
class SbmSpec:
    """Planted-partition instance parameters.

    cluster_sizes must be positive and sorted non-increasing; p is the
    intra-cluster edge probability, q the inter-cluster one, q < p.
    """

    cluster_sizes: tuple
    p: float
    q: float
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.cluster_sizes)
        object.__setattr__(self, "cluster_sizes", sizes)
        if len(sizes) == 0 or sum(sizes) == 0:
            raise ValueError("cluster_sizes must be nonempty with positive sum")
        if any(s < 1 for s in sizes):
            raise ValueError("cluster sizes must be positive")
        if any(sizes[i] < sizes[i + 1] for i in range(len(sizes) - 1)):
            raise ValueError("cluster_sizes must be sorted non-increasing")
        if not (0.0 <= self.q < self.p <= 1.0):
            raise ValueError("need 0 <= q < p <= 1")

    @property
    def n(self):
        return sum(self.cluster_sizes)

    @property
    def k(self):
        return len(self.cluster_sizes)


class Graph:
    """Immutable undirected graph over n indexed vertices, bit-packed rows."""

    __slots__ = ("n", "words", "n_words")

    def __init__(self, adjacency):
        """Build from a symmetric (n, n) 0/1 or bool matrix with zero diagonal."""
        a = np.asarray(adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        a = a.astype(bool)
        if a.diagonal().any():
            raise ValueError("adjacency diagonal must be zero")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        self._init_from_words(a.shape[0], pack_bool_rows(a))

    def _init_from_words(self, n, words):
        self.n = n
        self.words = words
        self.n_words = words.shape[1]
        self.words.setflags(write=False)
        return self

    @classmethod
    def _from_packed(cls, n, words):
        """Trusted fast path: words already packed/symmetric/zero-diagonal."""
        g = cls.__new__(cls)
        g._init_from_words(n, words)
        return g

    def to_dense(self):
        """(n, n) bool adjacency."""
        return self.rows_dense(np.arange(self.n))

    def rows_dense(self, idx):
        """Selected adjacency rows as (len(idx), n) bool."""
        idx = _as_index_array(idx, self.n)
        raw = self.words[idx].view(np.uint8)
        return np.unpackbits(raw, axis=1, count=self.n).astype(bool)

    def edge_count(self):
        ones = np.zeros(self.n_words, dtype=np.uint64)
        ones[:] = np.uint64(0xFFFFFFFFFFFFFFFF)
        return int(popcount_rows_and_mask(self.words, ones).sum()) // 2

    def has_edge(self, u, v):
        u = int(u)
        v = int(v)
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise IndexError("vertex index out of range")
        return bool(self.rows_dense([u])[0, v])


@dataclass
class GroundTruth:
    """Hidden partition: labels[v] = cluster index; sizes = per-cluster counts."""

    labels: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.sizes = np.asarray(self.sizes, dtype=np.int64)
        counts = np.bincount(self.labels, minlength=len(self.sizes))
        if len(counts) != len(self.sizes) or not np.array_equal(counts, self.sizes):
            raise ValueError("sizes must equal per-label counts")
        if (self.sizes < 1).any():
            raise ValueError("all cluster sizes must be >= 1")

    @property
    def n(self):
        return len(self.labels)

    @property
    def k(self):
        return len(self.sizes)

    def members(self, i):
        return np.flatnonzero(self.labels == i)


@dataclass
class DerivedParams:
    """Quantities derived from (n, p, q) that steer the recovery pipeline.

    sigma: per-entry noise scale max(sqrt(p(1-p)), sqrt(q(1-q))).
    s_bar: minimum-size threshold c_size * sqrt(p(1-q)n) * ln(n) / (p-q).
    k_prime: projection dimension round((p-q) sqrt(n) / sqrt(p(1-q))),
             clamped to [1, clamp_hi].
    L: separation scale sqrt(0.004) (p-q) sqrt(s'), available once the size
       estimate s' exists (None before).
    """

    sigma: float
    s_bar: float
    k_prime: int
    L: float | None = None


def sigma_of(p, q):
    return max(np.sqrt(p * (1.0 - p)), np.sqrt(q * (1.0 - q)))


def s_bar_of(n, p, q, c_size):
    return c_size * np.sqrt(p * (1.0 - q) * n) * np.log(n) / (p - q)


def k_prime_of(n, p, q, clamp_hi=None):
    raw = int(round((p - q) * np.sqrt(n) / np.sqrt(p * (1.0 - q))))
    if clamp_hi is not None:
        raw = min(raw, int(clamp_hi))
    return max(1, raw)


def derive_params(n, p, q, c_size, clamp_hi=None, s_prime=None):
    L = None if s_prime is None else np.sqrt(0.004) * (p - q) * np.sqrt(s_prime)
    return DerivedParams(
        sigma=sigma_of(p, q),
        s_bar=s_bar_of(n, p, q, c_size),
        k_prime=k_prime_of(n, p, q, clamp_hi),
        L=L,
    )


def sample_sbm(spec):
    """Draw (Graph, GroundTruth) from the planted-partition model.

    One uniform per unordered pair (u, v), u < v, in lexicographic order,
    from PCG64(seed); the pair is an edge when the uniform falls below p
    (same cluster) or q (different clusters).
    """
    sizes = np.asarray(spec.cluster_sizes, dtype=np.int64)
    n = int(sizes.sum())
    labels = np.repeat(np.arange(len(sizes)), sizes)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    adj = np.zeros((n, n), dtype=bool)
    p, q = spec.p, spec.q
    for u in range(n - 1):
        r = rng.random(n - 1 - u)
        pv = np.where(labels[u + 1 :] == labels[u], p, q)
        adj[u, u + 1 :] = r < pv
    adj |= adj.T
    graph = Graph._from_packed(n, pack_bool_rows(adj))
    return graph, GroundTruth(labels=labels, sizes=sizes.copy())


def neighbor_count(graph, v, members):
    """Number of neighbors of v inside the vertex set `members`.

    v may itself be in the set; it is never counted (no self-loops).
    """
    v = int(v)
    if not (0 <= v < graph.n):
        raise IndexError("vertex index out of range")
    mask = pack_mask(graph.n, members)
    return int(popcount_rows_and_mask(graph.words[v : v + 1], mask)[0])


def neighbor_counts(graph, vs, members):
    """Vectorized neighbor_count for many vertices against one set."""
    vs = _as_index_array(vs, graph.n)
    mask = pack_mask(graph.n, members)
    return popcount_rows_and_mask(graph.words[vs], mask)


def neighbor_counts_mask(graph, vs, mask):
    """Like neighbor_counts but with a pre-packed (w,) uint64 mask."""
    vs = _as_index_array(vs, graph.n)
    return popcount_rows_and_mask(graph.words[vs], mask)


def remove_vertices(graph, truth, removed):
    """Induced subgraph on V minus `removed`, with compacted labels.

    Returns (graph', truth', index_map) where index_map[new_id] = old_id.
    truth may be None (peeling does not track it); emptied clusters are
    dropped and remaining labels renumbered in original order.
    """
    removed = _as_index_array(removed, graph.n)
    keep_mask = np.ones(graph.n, dtype=bool)
    keep_mask[removed] = False
    keep = np.flatnonzero(keep_mask)
    sub = graph.rows_dense(keep)[:, keep]
    new_graph = Graph._from_packed(len(keep), pack_bool_rows(sub))
    new_truth = None
    if truth is not None:
        lab = truth.labels[keep]
        present = np.unique(lab)
        remap = np.searchsorted(present, lab)
        new_truth = GroundTruth(
            labels=remap, sizes=np.bincount(remap, minlength=len(present))
        )
    return new_graph, new_truth, keep


def save_graph(graph, path):
    """Text form: header 'n m', then one sorted 'u v' line per edge (u < v)."""
    dense = graph.to_dense()
    us, vs = np.nonzero(np.triu(dense, 1))
    with open(path, "w") as fh:
        fh.write(f"{graph.n} {len(us)}\n")
        for u, v in zip(us.tolist(), vs.tolist()):
            fh.write(f"{u} {v}\n")


def load_graph(path):
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("graph file must start with a 'n m' header line")
        n, m = int(header[0]), int(header[1])
        adj = np.zeros((n, n), dtype=bool)
        count = 0
        for line in fh:
            line = line.strip()
            if not line:
                continue
            u, v = (int(tok) for tok in line.split())
            if u == v or not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"bad edge {u} {v}")
            adj[u, v] = adj[v, u] = True
            count += 1
    if count != m:
        raise ValueError(f"header says {m} edges, file has {count}")
    return Graph._from_packed(n, pack_bool_rows(adj))


def save_labels(truth, path):
    with open(path, "w") as fh:
        for lab in truth.labels.tolist():
            fh.write(f"{lab}\n")


def load_labels(path):
    with open(path) as fh:
        labels = np.array([int(line) for line in fh if line.strip()], dtype=np.int64)
    if labels.size == 0:
        raise ValueError("empty label file")
    uniq = np.unique(labels)
    if not np.array_equal(uniq, np.arange(len(uniq))):
        raise ValueError("labels must be 0..k-1")
    return GroundTruth(labels=labels, sizes=np.bincount(labels))
