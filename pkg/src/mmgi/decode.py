"""Max-score binary tree extraction from cached span decomposition scores."""

from __future__ import annotations

import numpy as np

from .trees import Tree

__all__ = ["local_score", "cky_decode"]


def local_score(split_scores: dict, span_scores: dict, i: int, k: int, j: int) -> float:
    """Per-node compatibility of splitting (i, j) at k.

    The cached decomposition score already folds in both children's span
    scores; subtracting them leaves the score contributed by this node alone,
    so tree totals decompose as a sum of local terms.
    """
    return float(split_scores[(i, j)][k - i]) - float(span_scores[(i, k)]) \
        - float(span_scores[(k + 1, j)])


def cky_decode(split_scores: dict, span_scores: dict, n: int) -> tuple[Tree, float]:
    """Best binary tree under the summed local scores, with its total.

    `split_scores[(i, j)]` holds the decomposition scores for k = i..j-1 and
    `span_scores[(i, j)]` the per-span scores (0 at terminals). Ties prefer
    the larger split point, so an all-tied table decodes to the fully
    left-branching tree.
    """
    if n < 1:
        raise ValueError("cky_decode needs at least one leaf")
    if n == 1:
        return 1, 0.0

    best: dict[tuple[int, int], float] = {}
    back: dict[tuple[int, int], int] = {}
    for i in range(1, n + 1):
        best[(i, i)] = 0.0
    for length in range(2, n + 1):
        for i in range(1, n - length + 2):
            j = i + length - 1
            best_val = -np.inf
            best_k = i
            for k in range(i, j):
                cand = local_score(split_scores, span_scores, i, k, j) \
                    + best[(i, k)] + best[(k + 1, j)]
                if cand >= best_val:
                    best_val = cand
                    best_k = k
            best[(i, j)] = best_val
            back[(i, j)] = best_k

    def build(i: int, j: int) -> Tree:
        if i == j:
            return i
        k = back[(i, j)]
        return (build(i, k), build(k + 1, j))

    return build(1, n), float(best[(1, n)])
