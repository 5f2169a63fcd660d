"""Bi-objective Pareto machinery for (accuracy up, pipeline size down).

Fitness values are (accuracy, size) pairs. Sorting follows the classic
fast non-dominated sort with crowding-distance truncation; every
tie-break is deterministic so selection is reproducible bit for bit.
"""

import numpy as np


def dominates(a, b):
    """True when a is at least as good in both objectives and better in one."""
    return a[0] >= b[0] and a[1] <= b[1] and (a[0] > b[0] or a[1] < b[1])


def fast_non_dominated_sort(fitnesses):
    """Indices grouped into Pareto fronts, best front first."""
    n = len(fitnesses)
    dominated_by = [[] for _ in range(n)]
    n_dominators = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            if dominates(fitnesses[i], fitnesses[j]):
                dominated_by[i].append(j)
                n_dominators[j] += 1
            elif dominates(fitnesses[j], fitnesses[i]):
                dominated_by[j].append(i)
                n_dominators[i] += 1
    fronts = []
    current = [i for i in range(n) if n_dominators[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in dominated_by[i]:
                n_dominators[j] -= 1
                if n_dominators[j] == 0:
                    nxt.append(j)
        current = sorted(nxt)
    return fronts

def crowding_distance(fitnesses, front):
    """Crowding of each front member, in front order.

    Boundary points get infinity; interior points sum the normalized gap
    between their neighbors along each objective. Objectives with zero
    spread contribute nothing.
    """
    m = len(front)
    crowd = np.zeros(m)
    if m <= 2:
        crowd[:] = np.inf
        return crowd
    values = np.array([fitnesses[i] for i in front], dtype=float)
    for obj in range(values.shape[1]):
        order = np.argsort(values[:, obj], kind="stable")
        lo, hi = values[order[0], obj], values[order[-1], obj]
        crowd[order[0]] = crowd[order[-1]] = np.inf
        span = hi - lo
        if span <= 0:
            continue
        for pos in range(1, m - 1):
            gap = values[order[pos + 1], obj] - values[order[pos - 1], obj]
            crowd[order[pos]] += gap / span
    return crowd


def rank_and_crowding(fitnesses):
    """Front rank (0 is best) and crowding distance for every individual."""
    n = len(fitnesses)
    ranks = np.empty(n, dtype=np.int64)
    crowd = np.empty(n)
    for depth, front in enumerate(fast_non_dominated_sort(fitnesses)):
        dist = crowding_distance(fitnesses, front)
        for member, d in zip(front, dist):
            ranks[member] = depth
            crowd[member] = d
    return ranks, crowd


def _truncation_key(fitnesses, crowd):
    def key(i):
        acc, size = fitnesses[i]
        return (-crowd[i], -acc, size, i)

    return key


def nsga2_select(fitnesses, k):
    """Indices of the k survivors, filled front by front.

    The front that straddles the cut is truncated by descending crowding
    distance, breaking ties toward higher accuracy, then smaller size,
    then lower index.
    """
    n = len(fitnesses)
    if k > n:
        raise ValueError(f"cannot select {k} individuals from a population of {n}")
    chosen = []
    for front in fast_non_dominated_sort(fitnesses):
        if len(chosen) + len(front) <= k:
            chosen.extend(front)
            if len(chosen) == k:
                break
            continue
        crowd = crowding_distance(fitnesses, front)
        crowd_of = {i: c for i, c in zip(front, crowd)}
        ordered = sorted(front, key=_truncation_key(fitnesses, crowd_of))
        chosen.extend(ordered[: k - len(chosen)])
        break
    return chosen


def binary_tournament(ranks, crowd, fitnesses, rng):
    """Index of the winner among two uniformly drawn contestants.

    Lower rank wins, then higher crowding, then the deterministic
    accuracy/size/index order.
    """
    n = len(ranks)
    i = int(rng.integers(n))
    j = int(rng.integers(n))

    def key(x):
        acc, size = fitnesses[x]
        return (ranks[x], -crowd[x], -acc, size, x)

    return min(i, j, key=key)
