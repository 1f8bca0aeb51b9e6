"""Dyadic grids on the finite quasi-metric space and ball-covering grid families.

A grid stores, for each level ``k``, a label array assigning every point to a
cell, and the center point of every cell.  Cells at level ``k`` have size
about ``mu^k`` in the quasi-norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .groups import GroupModel

NOMINAL_C1 = 0.25
NOMINAL_BIG_C1 = 2.0
_OPEN = 1e-9  # relative margin turning "max distance" into a strict bound


class GridAxiomError(RuntimeError):
    pass


@dataclass
class DyadicGrid:
    group: GroupModel
    mu: float
    labels: dict[int, np.ndarray]
    centers: dict[int, np.ndarray]
    c1: float = NOMINAL_C1
    C1: float = NOMINAL_BIG_C1
    widened: dict[str, float] = field(default_factory=dict)
    seed: int | None = None

    @property
    def levels(self) -> list[int]:
        return sorted(self.labels)

    @property
    def k_min(self) -> int:
        return min(self.labels)

    @property
    def k_max(self) -> int:
        return max(self.labels)

    def scale(self, k: int) -> float:
        return self.mu**k

    def cell_count(self, k: int) -> int:
        return len(self.centers[self._clamp(k)])

    def _clamp(self, k: int) -> int:
        return min(max(k, self.k_min), self.k_max)

    def cells(self, k: int) -> list[np.ndarray]:
        k = self._clamp(k)
        lab = self.labels[k]
        order = np.argsort(lab, kind="stable")
        bounds = np.searchsorted(lab[order], np.arange(len(self.centers[k]) + 1))
        return [order[bounds[i]:bounds[i + 1]] for i in range(len(self.centers[k]))]

    def translate(self, a: int) -> "DyadicGrid":
        """Left translate ``a D``: cells ``a R`` with centers ``a z``."""
        g = self.group
        pre = g.left_quotient_table[a]  # a^{-1} x
        labels = {k: lab[pre] for k, lab in self.labels.items()}
        centers = {k: g.mul_table[a, c] for k, c in self.centers.items()}
        return replace(self, labels=labels, centers=centers)


def level_range(g: GroupModel, mu: float) -> tuple[int, int]:
    """``k_min`` with ``mu^k_min >= diam`` and ``k_max`` with ``mu^k_max < h0``."""
    nu = 1 / mu
    k_min = math.floor(-math.log(g.diameter, nu) + 1e-12)
    k_max = math.floor(-math.log(g.min_positive_norm, nu) + 1e-12) + 1
    return k_min, k_max


def _nested_nets(g: GroupModel, mu: float, rng: np.random.Generator) -> dict[int, np.ndarray]:
    k_min, k_max = level_range(g, mu)
    D = g.distance
    order = rng.permutation(g.size)
    nets = {}
    centers = [int(order[0])]
    mind = D[order[0]].copy()
    for k in range(k_min, k_max + 1):
        r = mu**k
        for x in order:
            if mind[x] > r:
                centers.append(int(x))
                mind = np.minimum(mind, D[x])
        nets[k] = np.array(sorted(centers))
    return nets


def _grid_from_nets(g: GroupModel, mu: float, nets: dict[int, np.ndarray], seed=None) -> DyadicGrid:
    D = g.distance
    levels = sorted(nets)
    finest = nets[levels[-1]]
    if finest.size != g.size:
        raise GridAxiomError("finest net does not contain every point")
    # parent[k][c] for a level-(k+1) center c: itself if a level-k center, else
    # the nearest level-k center (argmin picks the lowest index on ties)
    up = np.arange(g.size)  # current ancestor of every point
    labels, centers = {}, {}
    for k in reversed(levels):
        cs = nets[k]
        if k != levels[-1]:
            is_center = np.zeros(g.size, dtype=bool)
            is_center[cs] = True
            prev = nets[k + 1]
            parent = np.empty(g.size, dtype=np.int64)
            parent[prev] = np.where(is_center[prev], prev, cs[np.argmin(D[np.ix_(prev, cs)], axis=1)])
            up = parent[up]
        index = np.full(g.size, -1, dtype=np.int64)
        index[cs] = np.arange(cs.size)
        labels[k] = index[up]
        centers[k] = cs
    return DyadicGrid(g, mu, labels, centers, seed=seed)


# ----------------------------------------------------------------------
# verification

@dataclass
class AxiomReport:
    cover: list = field(default_factory=list)
    nesting: list = field(default_factory=list)
    sandwich: list = field(default_factory=list)
    dilation: list = field(default_factory=list)
    c1: float = float("nan")
    C1: float = float("nan")

    @property
    def passed(self) -> bool:
        return not (self.cover or self.nesting or self.sandwich or self.dilation)

    def summary(self) -> dict[str, int]:
        return {"cover": len(self.cover), "nesting": len(self.nesting),
                "sandwich": len(self.sandwich), "dilation": len(self.dilation)}


def sandwich_constants(grid: DyadicGrid) -> tuple[float, float]:
    """Tightest ``(c1, C1)`` with ``B(z, c1 mu^k) <= R <= B(z, C1 mu^k)`` (open balls)."""
    D = grid.group.distance
    inner, outer = math.inf, 0.0
    for k in grid.levels:
        lab, cs = grid.labels[k], grid.centers[k]
        Dz = D[cs]  # (cells, N)
        own = lab[None, :] == np.arange(cs.size)[:, None]
        inside = np.where(own, Dz, -np.inf).max(axis=1)
        outside = np.where(own, np.inf, Dz).min(axis=1)
        s = grid.scale(k)
        inner = min(inner, float(outside.min()) / s)
        outer = max(outer, float(inside.max()) / s)
    if math.isinf(inner):
        inner = NOMINAL_C1
    return inner, outer * (1 + _OPEN) if outer > 0 else _OPEN


def _dilation_failures(grid: DyadicGrid, C1: float, limit: int) -> list:
    D = grid.group.distance
    out = []
    levels = grid.levels
    for i, k in enumerate(levels):
        rk = C1 * grid.scale(k)
        for l in levels[i + 1:]:
            rl = C1 * grid.scale(l)
            cl = grid.centers[l]
            anc = grid.labels[k][cl]  # ancestor cell of each level-l cell
            ck = grid.centers[k][anc]
            inner = D[cl] < rl
            escaped = inner & ~(D[ck] < rk)
            bad = np.flatnonzero(escaped.any(axis=1))
            for b in bad[: max(0, limit - len(out))]:
                out.append({"k": k, "l": l, "cell": int(b), "point": int(np.flatnonzero(escaped[b])[0])})
            if len(out) >= limit:
                return out
    return out


def verify_grid_axioms(grid: DyadicGrid, limit: int = 20) -> AxiomReport:
    """Exhaustive check of cover, nesting, sandwich and dilated-ball containment."""
    g = grid.group
    rep = AxiomReport(c1=grid.c1, C1=grid.C1)
    D = g.distance
    for k in grid.levels:
        lab, cs = grid.labels[k], grid.centers[k]
        if lab.shape != (g.size,) or lab.min() < 0 or lab.max() >= cs.size:
            rep.cover.append({"k": k, "reason": "unlabelled point"})
        elif np.unique(lab).size != cs.size:
            rep.cover.append({"k": k, "reason": "empty cell"})
    if rep.cover:
        return rep
    levels = grid.levels
    for i, k in enumerate(levels):
        for l in levels[i + 1:]:
            # every level-l cell must carry a single level-k label
            lk, ll = grid.labels[k], grid.labels[l]
            first = np.full(grid.centers[l].size, -1, dtype=np.int64)
            first[ll] = lk  # any representative
            bad = np.flatnonzero(first[ll] != lk)
            for x in bad[: max(0, limit - len(rep.nesting))]:
                rep.nesting.append({"k": k, "l": l, "cell": int(ll[x]), "point": int(x)})
    for k in levels:
        lab, cs = grid.labels[k], grid.centers[k]
        s = grid.scale(k)
        own = lab[None, :] == np.arange(cs.size)[:, None]
        Dz = D[cs]
        lower = (Dz < grid.c1 * s) & ~own
        upper = own & ~(Dz < grid.C1 * s)
        for kind, mask in (("inner ball leaves the cell", lower), ("cell leaves the outer ball", upper)):
            for c in np.flatnonzero(mask.any(axis=1))[: max(0, limit - len(rep.sandwich))]:
                rep.sandwich.append({"k": k, "cell": int(c), "reason": kind,
                                     "point": int(np.flatnonzero(mask[c])[0])})
        if not lab[cs].tolist() == list(range(cs.size)):
            rep.sandwich.append({"k": k, "reason": "center outside its cell"})
    if grid.c1 > grid.C1:
        rep.sandwich.append({"reason": f"c1={grid.c1} exceeds C1={grid.C1}"})
    rep.dilation = _dilation_failures(grid, grid.C1, limit)
    return rep


def _fit_constants(grid: DyadicGrid, max_steps: int = 200) -> DyadicGrid:
    """Shrink ``c1`` / grow ``C1`` until the sandwich and dilation axioms hold."""
    inner, outer = sandwich_constants(grid)
    c1 = min(NOMINAL_C1, inner)
    C1 = max(NOMINAL_BIG_C1, outer, c1)
    widened = {}
    if c1 < NOMINAL_C1:
        widened["c1"] = c1
    steps = 0
    while _dilation_failures(grid, C1, 1):
        C1 *= 1.25
        steps += 1
        if steps > max_steps:
            break
    if C1 > NOMINAL_BIG_C1:
        widened["C1"] = C1
    grid = replace(grid, c1=c1, C1=C1, widened=widened)
    rep = verify_grid_axioms(grid)
    if not rep.passed:
        raise GridAxiomError(f"grid axioms fail after widening: {rep.summary()}; "
                             f"first counterexample {(rep.cover + rep.nesting + rep.sandwich + rep.dilation)[0]}")
    return grid


def build_dyadic_grid(g: GroupModel, mu: float = 0.5, seed: int = 0) -> DyadicGrid:
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    nets = _nested_nets(g, mu, np.random.default_rng(seed))
    return _fit_constants(_grid_from_nets(g, mu, nets, seed))


def dyadic_arcs(g: GroupModel) -> DyadicGrid:
    """Standard dyadic arcs on ``Z/2^m`` with ``mu = 1/2``: level ``k`` arcs have
    ``2^{1-k}`` points."""
    n = g.n
    if g.kind != "torus" or g.dim != 1 or n & (n - 1):
        raise ValueError("dyadic arcs need a one-dimensional torus of size 2^m")
    m = n.bit_length() - 1
    x = g.coords[:, 0]
    labels, centers = {}, {}
    for k in range(1 - m, 2):
        length = 2 ** (1 - k)
        lab = x // length
        labels[k] = lab.astype(np.int64)
        centers[k] = g.index(np.stack([np.arange(n // length) * length + length // 2], axis=1))
    grid = DyadicGrid(g, 0.5, labels, {k: np.asarray(c).reshape(-1) for k, c in centers.items()})
    return _fit_constants(grid)


# ----------------------------------------------------------------------
# ball covering families

def ball_level(r: float, mu: float) -> int:
    """``k`` with ``mu^{k+2} <= r < mu^{k+1}``."""
    nu = 1 / mu
    k = math.ceil(-math.log(r, nu) - 2 - 1e-12)
    while mu ** (k + 2) > r:
        k += 1
    while not r < mu ** (k + 1):
        k -= 1
    return k


def containment_radius(grid: DyadicGrid, k: int) -> np.ndarray:
    """``rho[z]``: the largest ``r`` with ``B(z, r)`` inside the level-``k`` cell of ``z``."""
    k = grid._clamp(k)
    lab = grid.labels[k]
    D = grid.group.distance
    out = np.empty(lab.size)
    for start in range(0, lab.size, 512):
        stop = min(start + 512, lab.size)
        other = lab[None, :] != lab[start:stop, None]
        out[start:stop] = np.where(other, D[start:stop], np.inf).min(axis=1)
    return out


def cell_diameters(grid: DyadicGrid, k: int) -> np.ndarray:
    """Diameter of the level-``k`` cell containing each point."""
    k = grid._clamp(k)
    D = grid.group.distance
    diam = np.array([D[np.ix_(c, c)].max() for c in grid.cells(k)])
    return diam[grid.labels[k]]


@dataclass
class GridFamily:
    grids: list[DyadicGrid]
    C: float
    uncovered: list = field(default_factory=list)
    radii: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def mu(self) -> float:
        return self.grids[0].mu

    @property
    def covered(self) -> bool:
        return not self.uncovered

    def __len__(self) -> int:
        return len(self.grids)


def covering_radii(g: GroupModel) -> np.ndarray:
    v = g.norm_values
    return v[(v > 0) & (v <= g.diameter / 4)]


def _ball_levels(radii: np.ndarray, mu: float) -> dict[int, np.ndarray]:
    by_level: dict[int, list[float]] = {}
    for r in radii:
        by_level.setdefault(ball_level(float(r), mu), []).append(float(r))
    return {k: np.array(v) for k, v in by_level.items()}


def covering_report(grids: list[DyadicGrid], radii: np.ndarray | None = None, limit: int = 20):
    """``(C, uncovered, count)`` for the balls ``B(z, r)``, ``r`` in ``radii``, over every center."""
    g = grids[0].group
    mu = grids[0].mu
    if radii is None:
        radii = covering_radii(g)
    best = np.full((g.size, len(radii)), np.inf)
    index = {float(r): i for i, r in enumerate(radii)}
    for k, rs in _ball_levels(radii, mu).items():
        cols = [index[float(r)] for r in rs]
        for grid in grids:
            rho = containment_radius(grid, k)
            diam = cell_diameters(grid, k)
            inside = rs[None, :] <= rho[:, None]
            ratio = np.where(inside, diam[:, None] / rs[None, :], np.inf)
            best[:, cols] = np.minimum(best[:, cols], ratio)
    bad = np.argwhere(np.isinf(best))
    uncovered = [{"center": int(z), "radius": float(radii[i])} for z, i in bad[:limit]]
    finite = best[np.isfinite(best)]
    # no balls at all (tiny model): the covering constant is vacuous
    C = float(finite.max()) if finite.size else (math.inf if bad.size else 0.0)
    return C, uncovered, int(bad.shape[0])


def build_dyadic_grids(g: GroupModel, mu: float = 0.5, seed: int = 0, max_grids: int = 256,
                       extra_seeds: int = 3) -> GridFamily:
    """Seeded grids plus left translates, added greedily until every ball of radius
    at most ``diam / 4`` lies in a cube of the prescribed level.

    Left invariance of the distance gives ``rho_{aD}(z) = rho_D(a^{-1} z)`` for the
    containment radius, so every translate of a seeded grid is scored at once.
    """
    base = [build_dyadic_grid(g, mu, seed + i) for i in range(extra_seeds + 1)]
    radii = covering_radii(g)
    levels = _ball_levels(radii, mu)
    # number of ball radii of each level that fit around every point
    fits = [{k: np.searchsorted(rs, containment_radius(b, k), side="right") for k, rs in levels.items()}
            for b in base]
    need = {k: len(rs) for k, rs in levels.items()}
    state = {k: fits[0][k].copy() for k in levels}
    chosen = [base[0]]
    LQ = g.left_quotient_table
    while len(chosen) < max_grids:
        open_z = {k: np.flatnonzero(state[k] < need[k]) for k in levels}
        if not any(z.size for z in open_z.values()):
            break
        best_gain, best_pick = 0, None
        for b, fb in enumerate(fits):
            gain = np.zeros(g.size, dtype=np.int64)
            for k, z in open_z.items():
                if z.size:
                    gain += np.maximum(fb[k][LQ[:, z]] - state[k][z], 0).sum(axis=1)
            a = int(np.argmax(gain))
            if gain[a] > best_gain:
                best_gain, best_pick = int(gain[a]), (b, a)
        if best_pick is None:
            break
        b, a = best_pick
        chosen.append(base[b].translate(a))
        for k in levels:
            state[k] = np.maximum(state[k], fits[b][k][LQ[a]])
    C, uncovered, _ = covering_report(chosen, radii)
    return GridFamily(chosen, C, uncovered, radii)
