"""Exact min-cost assignment over the rationals.

Jonker-Volgenant style shortest augmenting paths with dual potentials;
costs may be ints or Fractions and the optimum is returned exactly.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations
from typing import Sequence

__all__ = ["min_cost_assignment", "brute_force_assignment"]


def min_cost_assignment(cost: Sequence[Sequence]) -> tuple[Fraction, list[int]]:
    """Minimum-cost perfect matching of a square rational matrix.

    Returns (total cost, columns) with columns[i] the column matched to
    row i.
    """
    n = len(cost)
    if n == 0 or any(len(row) != n for row in cost):
        raise ValueError("cost matrix must be square and non-empty")
    c = [[Fraction(x) for x in row] for row in cost]
    big = sum(abs(x) for row in c for x in row) + 1

    u = [Fraction(0)] * (n + 1)
    v = [Fraction(0)] * (n + 1)
    p = [0] * (n + 1)  # p[j]: row assigned to column j (1-based)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [big] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = big
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = c[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    cols = [0] * n
    total = Fraction(0)
    for j in range(1, n + 1):
        if p[j]:
            cols[p[j] - 1] = j - 1
            total += c[p[j] - 1][j - 1]
    return total, cols


def brute_force_assignment(cost: Sequence[Sequence]) -> Fraction:
    """Exhaustive minimum over all permutations; reference oracle, N <= 8."""
    n = len(cost)
    if n > 8:
        raise ValueError("brute force limited to N <= 8")
    best = None
    for perm in permutations(range(n)):
        s = sum(Fraction(cost[i][perm[i]]) for i in range(n))
        if best is None or s < best:
            best = s
    return best
