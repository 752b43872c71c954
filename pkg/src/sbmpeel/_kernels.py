"""Bit-level counting kernels.

Everything hot in the pipeline reduces to one primitive: popcount(row & mask)
over many bit-packed adjacency rows. Two interchangeable backends provide it:

* "numba": an @njit SWAR popcount loop over uint64 words,
* "numpy": vectorized np.bitwise_count (uint8 LUT on older numpy).

Selection: environment variable SBMPEEL_BACKEND ("numba" or "numpy"). Default
is numba when importable, else numpy. Both return identical integers, so the
choice never affects results, only speed.
"""

import os

import numpy as np

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_S1 = np.uint64(1)
_S2 = np.uint64(2)
_S4 = np.uint64(4)
_S56 = np.uint64(56)

_HAS_BITWISE_COUNT = hasattr(np, "bitwise_count")
if not _HAS_BITWISE_COUNT:
    _POP8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)


def _counts_numpy(rows, mask):
    """rows: (m, w) uint64, mask: (w,) uint64 -> (m,) int64 popcounts."""
    anded = rows & mask
    if _HAS_BITWISE_COUNT:
        return np.bitwise_count(anded).sum(axis=1, dtype=np.int64)
    return _POP8[anded.view(np.uint8)].sum(axis=1, dtype=np.int64)


def _build_numba():
    from numba import njit

    @njit(cache=True)
    def counts(rows, mask, out):
        m, w = rows.shape
        for i in range(m):
            acc = np.uint64(0)
            for j in range(w):
                x = rows[i, j] & mask[j]
                x = x - ((x >> _S1) & _M1)
                x = (x & _M2) + ((x >> _S2) & _M2)
                x = (x + (x >> _S4)) & _M4
                acc += (x * _H01) >> _S56
            out[i] = acc
        return out

    def wrapper(rows, mask):
        out = np.empty(rows.shape[0], dtype=np.int64)
        counts(rows, mask, out)
        return out

    return wrapper


def _resolve_backend():
    requested = os.environ.get("SBMPEEL_BACKEND", "").strip().lower()
    if requested not in ("", "numba", "numpy"):
        raise ValueError(
            f"SBMPEEL_BACKEND must be 'numba' or 'numpy', got {requested!r}"
        )
    if requested == "numpy":
        return "numpy", _counts_numpy
    try:
        fn = _build_numba()
        return "numba", fn
    except ImportError:
        if requested == "numba":
            raise
        return "numpy", _counts_numpy


_BACKEND_NAME, _counts_impl = _resolve_backend()


def active_backend():
    """Name of the counting backend in use ('numba' or 'numpy')."""
    return _BACKEND_NAME


def popcount_rows_and_mask(rows, mask):
    """popcount(rows[i] & mask) for every row i.

    rows: (m, w) uint64 C-contiguous, mask: (w,) uint64. Returns (m,) int64.
    """
    if rows.ndim != 2 or rows.shape[1] != mask.shape[0]:
        raise ValueError("rows/mask word widths disagree")
    if rows.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    return _counts_impl(np.ascontiguousarray(rows), np.ascontiguousarray(mask))


def popcount_row_and_mask(row, mask):
    """popcount(row & mask) for a single packed row."""
    return int(popcount_rows_and_mask(row.reshape(1, -1), mask)[0])
