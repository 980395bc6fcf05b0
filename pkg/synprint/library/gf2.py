"""
==============
GF(2) Algebra
==============

Row reduction over the binary field, used to check stabilizer
generator independence and to find encoder pivots.
"""

from typing import List, Tuple

import numpy as np


def gf2_rref(matrix: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form of a binary matrix.

    >>> rref, pivots = gf2_rref(np.array([[1, 1, 0], [1, 0, 1]]))
    >>> rref.tolist(), pivots
    ([[1, 0, 1], [0, 1, 1]], [0, 1])

    Args:
        matrix: 2-D array of 0/1 entries. Not modified.

    Returns:
        The reduced matrix (``uint8``) and its pivot column indices in
        row order. Zero rows are kept at the bottom.
    """
    reduced = (np.array(matrix, dtype=np.uint8) & 1).copy()
    if reduced.ndim != 2:
        raise ValueError(f'expected a 2-D matrix, got shape {reduced.shape}')
    rows, cols = reduced.shape
    pivots: List[int] = []
    row = 0
    for col in range(cols):
        if row >= rows:
            break
        candidates = np.nonzero(reduced[row:, col])[0]
        if candidates.size == 0:
            continue
        pivot_row = row + int(candidates[0])
        if pivot_row != row:
            reduced[[row, pivot_row]] = reduced[[pivot_row, row]]
        others = np.nonzero(reduced[:, col])[0]
        others = others[others != row]
        reduced[others] ^= reduced[row]
        pivots.append(col)
        row += 1
    return reduced, pivots


def gf2_rank(matrix: np.ndarray) -> int:
    """Rank of a binary matrix over GF(2).

    >>> gf2_rank(np.array([[1, 1], [1, 1], [0, 1]]))
    2
    """
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return 0
    _, pivots = gf2_rref(matrix)
    return len(pivots)


def test_rank_of_identity() -> None:
    assert gf2_rank(np.eye(6, dtype=np.uint8)) == 6


def test_rref_pivots_are_unit_columns() -> None:
    rng = np.random.default_rng(3)
    matrix = rng.integers(0, 2, size=(5, 9))
    rref, pivots = gf2_rref(matrix)
    for row, col in enumerate(pivots):
        column = rref[:, col]
        assert column[row] == 1
        assert column.sum() == 1
    assert gf2_rank(rref) == gf2_rank(matrix)
