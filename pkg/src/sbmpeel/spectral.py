"""Bi-adjacency matrices and truncated singular-subspace computation.

The recovery pipeline projects columns of one bi-adjacency matrix onto the
top left singular subspace of another. The subspace comes from randomized
subspace iteration (Gaussian sketch, QR re-orthonormalization, small SVD);
only subspace accuracy matters downstream, so convergence is monitored via
the residual max_i ||M v_i - s_i u_i|| / s_1 of the current directions.
"""

from dataclasses import dataclass

import numpy as np

from .graph import _as_index_array


class ConvergenceError(RuntimeError):
    def __init__(self, residual, iterations):
        super().__init__(
            f"subspace iteration residual {residual:.3e} after {iterations} iterations"
        )
        self.residual = residual
        self.iterations = iterations


@dataclass
class BiAdjacency:
    """0/1 edge-indicator matrix between two disjoint ordered vertex sets."""

    rows: np.ndarray
    cols: np.ndarray
    entries: np.ndarray


@dataclass
class ProjectionBasis:
    """Orthonormal basis of a top left singular subspace (ambient dim |rows|)."""

    basis: np.ndarray
    k_prime: int
    residual_estimate: float
    singular_values: np.ndarray


def build_biadjacency(graph, rows, cols):
    """Edge indicators between `rows` and `cols` (disjoint; sorted ascending)."""
    rows = np.sort(_as_index_array(rows, graph.n))
    cols = np.sort(_as_index_array(cols, graph.n))
    if np.intersect1d(rows, cols).size:
        raise ValueError("row and column vertex sets must be disjoint")
    entries = graph.rows_dense(rows)[:, cols].astype(np.uint8)
    return BiAdjacency(rows=rows, cols=cols, entries=entries)


def _fix_signs(u):
    for j in range(u.shape[1]):
        col = u[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            u[:, j] = -col
    return u


def top_left_singular_basis(
    m,
    k_prime,
    tol=1e-10,
    seed=0,
    max_iters=200,
    oversample=8,
    strict=False,
):
    """Orthonormal basis of the top-k_prime left singular subspace of m.

    m is a BiAdjacency or a 2-d array. Deterministic given `seed` (the sketch
    initializer). Returns a ProjectionBasis whose residual_estimate reports
    max_i ||M v_i - s_i u_i|| / s_1 at exit; with strict=True a result that
    missed `tol` raises ConvergenceError instead.
    """
    a = m.entries if isinstance(m, BiAdjacency) else m
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("matrix must be 2-d")
    nr, nc = a.shape
    k = int(k_prime)
    if k < 1 or k > min(nr, nc):
        raise ValueError(f"k_prime must be in [1, min(rows, cols)], got {k}")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    sketch = min(min(nr, nc), k + oversample)
    rng = np.random.Generator(np.random.PCG64(seed))
    y = a @ rng.standard_normal((nc, sketch))
    q, _ = np.linalg.qr(y)
    u = s = v = None
    resid = np.inf
    iterations = 0
    for iterations in range(1, max_iters + 1):
        q, _ = np.linalg.qr(a @ (a.T @ q))
        small = q.T @ a
        ub, svals, vt = np.linalg.svd(small, full_matrices=False)
        u = q @ ub[:, :k]
        s = svals[:k]
        v = vt[:k].T
        if s[0] <= 0.0:
            resid = 0.0
            break
        resid = float(np.max(np.linalg.norm(a @ v - u * s, axis=0)) / s[0])
        if resid <= tol:
            break
    if resid > tol and strict:
        raise ConvergenceError(resid, iterations)
    u = _fix_signs(np.ascontiguousarray(u))
    return ProjectionBasis(
        basis=u, k_prime=k, residual_estimate=resid, singular_values=s.copy()
    )


def project_column(basis, col):
    """Orthogonal projection of `col` onto the basis span, ambient coordinates."""
    b = basis.basis if isinstance(basis, ProjectionBasis) else np.asarray(basis)
    col = np.asarray(col, dtype=np.float64).reshape(-1)
    if col.shape[0] != b.shape[0]:
        raise ValueError("column dimension does not match basis")
    return b @ (b.T @ col)


def project_columns(basis, cols):
    """Coordinates of many columns in the basis frame, shape (k, n_cols).

    The frame is orthonormal, so Euclidean distances between coordinate
    vectors equal distances between ambient projections.
    """
    b = basis.basis if isinstance(basis, ProjectionBasis) else np.asarray(basis)
    cols = np.asarray(cols, dtype=np.float64)
    if cols.shape[0] != b.shape[0]:
        raise ValueError("column dimension does not match basis")
    return b.T @ cols


def singular_values_of_expectation(spec, rows_per_cluster, cols_per_cluster):
    """Exact singular values of the expected bi-adjacency matrix.

    With a_i rows and b_i columns drawn from cluster i, the expectation is
    (p-q) on each diagonal cluster block plus q everywhere, whose nonzero
    singular values equal those of the k-by-k matrix
    (p-q) diag(sqrt(a_i b_i)) + q sqrt(a) sqrt(b)^T. The returned list is
    padded with zeros to min(sum a, sum b) and sorted descending.
    """
    a = np.asarray(rows_per_cluster, dtype=np.float64)
    b = np.asarray(cols_per_cluster, dtype=np.float64)
    if len(a) != spec.k or len(b) != spec.k:
        raise ValueError("per-cluster counts must have one entry per cluster")
    if (a < 0).any() or (b < 0).any():
        raise ValueError("per-cluster counts must be non-negative")
    total = int(min(a.sum(), b.sum()))
    if total == 0:
        return np.zeros(0)
    p, q = spec.p, spec.q
    sa, sb = np.sqrt(a), np.sqrt(b)
    core = (p - q) * np.diag(sa * sb) + q * np.outer(sa, sb)
    svals = np.linalg.svd(core, compute_uv=False)
    out = np.zeros(total)
    top = min(total, len(svals))
    out[:top] = np.sort(svals)[::-1][:top]
    return out
