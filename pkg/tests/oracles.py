"""Independent reference implementations used by the tests.

Everything here is written with plain Python loops or generic scipy routines and
shares no code with the package beyond the group model's coordinate list.
"""

import itertools
from fractions import Fraction

import numpy as np


def heisenberg_mul(a, b, n):
    x, y, z = a
    u, v, w = b
    return ((x + u) % n, (y + v) % n, (z + w + x * v) % n)


def torus_distance(i, j, n):
    d = abs(i - j) % n
    return min(d, n - d)


def sublaplacian_by_loops(g, s0):
    """``s0^2 sum_b (2 f(x) - f(x b) - f(x b^-1)) / 2`` over generators and their inverses, entrywise."""
    n = g.size
    L = np.zeros((n, n))
    pts = [tuple(int(v) for v in c) for c in g.coords]
    where = {p: i for i, p in enumerate(pts)}
    gens = list(g.generators) + [tuple(int(v) for v in g.inverse_coords(np.array(a))) for a in g.generators]
    for i, p in enumerate(pts):
        for a in gens:
            q = tuple(int(v) for v in g.multiply_coords(np.array(p), np.array(a)))
            L[i, i] += s0**2
            L[i, where[q]] -= s0**2
    return L


def ball_family(D):
    """All closed balls ``{x : D[z, x] <= r}`` as boolean masks (duplicates included)."""
    for z in range(D.shape[0]):
        for r in np.unique(D[z]):
            yield D[z] <= r


def ap_brute(D, w, p):
    best = 0.0
    for B in ball_family(D):
        a = w[B].mean()
        b = (w[B] ** (-1 / (p - 1))).mean()
        best = max(best, a * b ** (p - 1))
    return best


def rh_brute(D, w, q):
    best = 0.0
    for B in ball_family(D):
        best = max(best, (w[B] ** q).mean() ** (1 / q) / w[B].mean())
    return best


def admissible_direct(Q, beta, r1, r2):
    """Both branches of the admissible region evaluated as written (inputs are Fractions)."""
    out = []
    if 1 <= r1 <= r2 <= 2 and 1 / r1 - Fraction(1, 2) < beta / (2 * Q):
        out.append("sparse1")
    within_conjugate = r1 == 1 or r2 <= r1 / (r1 - 1)
    if 1 <= r1 <= 2 <= r2 and within_conjugate and 1 / r1 - 1 / r2 < beta / (2 * Q):
        out.append("sparse2")
    return out


def axioms_brute(grid):
    """Count violations of the four grid axioms with nested Python loops."""
    D = grid.group.distance
    n = grid.group.size
    levels = grid.levels
    bad = 0
    cells = {k: [set(np.flatnonzero(grid.labels[k] == a).tolist()) for a in range(len(grid.centers[k]))]
             for k in levels}
    for k in levels:
        if set().union(*cells[k]) != set(range(n)):
            bad += 1
    for k, l in itertools.combinations(levels, 2):
        for Rl in cells[l]:
            if not any(Rl <= Rk for Rk in cells[k]):
                bad += 1
    for k in levels:
        s = grid.mu**k
        for a, R in enumerate(cells[k]):
            z = int(grid.centers[k][a])
            inner = {x for x in range(n) if D[z, x] < grid.c1 * s}
            outer = {x for x in range(n) if D[z, x] < grid.C1 * s}
            if not inner <= R or not R <= outer:
                bad += 1
    for k, l in itertools.combinations(levels, 2):
        for b, Rl in enumerate(cells[l]):
            zl = int(grid.centers[l][b])
            for a, Rk in enumerate(cells[k]):
                if Rl <= Rk:
                    zk = int(grid.centers[k][a])
                    for x in range(n):
                        if D[zl, x] < grid.C1 * grid.mu**l and not D[zk, x] < grid.C1 * grid.mu**k:
                            bad += 1
                            break
    return bad


def reachable_count(g):
    """Points reachable from the identity by right multiplication with generators (breadth-first)."""
    gens = [g.index(a) for a in g.generators]
    gens += [int(g.inverse_table[a]) for a in gens]
    seen = {g.identity}
    frontier = [g.identity]
    while frontier:
        nxt = []
        for x in frontier:
            for a in gens:
                y = int(g.mul_table[x, a])
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return len(seen)
