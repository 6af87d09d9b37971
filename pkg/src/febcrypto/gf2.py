"""Gauss-Jordan elimination over GF(2) on bit-packed rows."""

from __future__ import annotations

import numpy as np


def rref(A: np.ndarray, pivot_cols: int | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of a 0/1 matrix and its pivot columns.

    Only the first ``pivot_cols`` columns may hold pivots (the rest ride
    along, e.g. an augmented right-hand side).
    """
    A = np.asarray(A, dtype=np.uint8)
    rows, cols = A.shape
    limit = cols if pivot_cols is None else pivot_cols
    width = -(-cols // 64) * 8
    packed = np.zeros((rows, width), dtype=np.uint8)
    packed[:, : -(-cols // 8)] = np.packbits(A, axis=1)
    words = packed.view(np.uint64)  # row XORs on 64-bit words, bit tests on bytes
    pivots: list[int] = []
    r = 0
    for c in range(limit):
        if r == rows:
            break
        col = (packed[:, c >> 3] >> (7 - (c & 7))) & 1
        below = col[r:]
        if not below.any():
            continue
        p = r + int(below.argmax())
        if p != r:
            words[[r, p]] = words[[p, r]]
            col[[r, p]] = col[[p, r]]
        col[r] = 0
        others = np.flatnonzero(col)
        if others.size:
            words[others] ^= words[r]
        pivots.append(c)
        r += 1
    return np.unpackbits(packed, axis=1, count=cols), pivots


def solve(A: np.ndarray, b: np.ndarray, rng=None, with_basis: bool = False):
    """One solution of ``A x = b`` over GF(2), or ``None`` if inconsistent.

    Free variables are set to zero, or drawn uniformly from ``rng`` when one
    is given (a uniform draw from the affine solution space).
    Returns ``(x, rank)``, plus the reduced matrix and pivot columns of ``A``
    when ``with_basis`` is set.
    """
    A = np.asarray(A, dtype=np.uint8)
    cols = A.shape[1]
    R, pivots = rref(np.concatenate([A, np.asarray(b, dtype=np.uint8).reshape(-1, 1)], axis=1), cols)
    r = len(pivots)
    rhs = R[:, cols]
    if rhs[r:].any():
        return None
    if rng is None:
        x = np.zeros(cols, dtype=np.uint8)
    else:
        x = rng.integers(0, 2, size=cols, dtype=np.uint8)
        x[pivots] = 0
    if pivots:
        # pivot rows are fully reduced: x_pivot = rhs + sum of free-variable terms
        x[pivots] = (rhs[:r] ^ (R[:r, :cols].astype(np.int64) @ x.astype(np.int64) & 1)).astype(np.uint8)
    if with_basis:
        return x, r, R[:, :cols], pivots
    return x, r


def rank(A: np.ndarray) -> int:
    return len(rref(A)[1])


def reduce_rows(B: np.ndarray, R: np.ndarray, pivots: list[int]) -> np.ndarray:
    """Clear the pivot columns of ``B`` using the reduced rows of ``R``.

    The result spans the same space as ``B`` modulo the row space of ``R``;
    its rank is ``rank([R; B]) - rank(R)``.
    """
    B = np.asarray(B, dtype=np.uint8)
    if not pivots:
        return B.copy()
    R = R[: len(pivots), : B.shape[1]].astype(np.int64)
    return (B ^ (B[:, pivots].astype(np.int64) @ R & 1)).astype(np.uint8)
