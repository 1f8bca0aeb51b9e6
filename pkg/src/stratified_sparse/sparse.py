"""Sparse families, sparse forms, the cube collections of the domination argument
and the randomized domination experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .dyadic import GridFamily
from .multipliers import MultiplierSpec
from .norms import INF
from .pieces import spatial_decomposition
from .spectral import SpectralDecomposition


def average(f: np.ndarray, R: np.ndarray, p: float) -> float:
    """``(|R|^{-1} sum_R |f|^p)^{1/p}``; ``p = inf`` gives the max."""
    R = np.asarray(R)
    if R.size == 0:
        raise ValueError("empty set")
    if p < 1:
        raise ValueError("p must be at least 1")
    a = np.abs(np.asarray(f)[R])
    if p == INF:
        return float(a.max())
    return float(np.mean(a**p) ** (1 / p))


def conjugate(r: float) -> float:
    if r == 1:
        return INF
    if r == INF:
        return 1.0
    return r / (r - 1)


@dataclass
class SparseFamily:
    """Sets ``R`` (point index arrays) with designated disjoint subsets ``E_R``."""

    sets: list[np.ndarray]
    owned: list[np.ndarray]
    size: int

    def __len__(self) -> int:
        return len(self.sets)

    @property
    def eta(self) -> float:
        if not self.sets:
            return 1.0
        return min(len(E) / len(R) for R, E in zip(self.sets, self.owned))

    def verify(self, eta: float = 0.5) -> list[str]:
        """Exact check of ``E_R <= R``, ``|E_R| >= eta |R|`` and disjointness."""
        problems = []
        seen = np.zeros(self.size, dtype=bool)
        for i, (R, E) in enumerate(zip(self.sets, self.owned)):
            if not np.isin(E, R).all():
                problems.append(f"E_R not inside R for member {i}")
            if Fraction(len(E)) < Fraction(eta).limit_denominator(10**6) * len(R):
                problems.append(f"member {i}: |E_R|={len(E)} < eta |R| with |R|={len(R)}")
            if seen[E].any():
                problems.append(f"member {i}: E_R overlaps an earlier E_R")
            seen[E] = True
        return problems

    def incidence(self) -> sp.csr_matrix:
        rows = np.concatenate([np.full(len(R), i) for i, R in enumerate(self.sets)]) if self.sets else np.empty(0, int)
        cols = np.concatenate(self.sets) if self.sets else np.empty(0, int)
        return sp.csr_matrix((np.ones(len(cols)), (rows, cols)), shape=(len(self.sets), self.size))


def _averages(M: sp.csr_matrix, sizes: np.ndarray, F: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(F)
    if p == INF:
        return np.array([[a[M.indices[M.indptr[i]:M.indptr[i + 1]], t].max() for t in range(a.shape[1])]
                         for i in range(M.shape[0])]).reshape(M.shape[0], a.shape[1])
    return (M @ a**p / sizes[:, None]) ** (1 / p)


def sparse_form_batch(sets: Sequence[np.ndarray], size: int, F: np.ndarray, Gm: np.ndarray,
                      r1: float, r2p: float) -> np.ndarray:
    """``sum_R |R| <f>_{r1,R} <g>_{r2p,R}`` for every column pair of ``F``, ``Gm``."""
    if not sets:
        return np.zeros(F.shape[1])
    fam = SparseFamily(list(sets), list(sets), size)
    M = fam.incidence()
    sizes = np.array([len(R) for R in sets], dtype=float)
    return sizes @ (_averages(M, sizes, F, r1) * _averages(M, sizes, Gm, r2p))


def sparse_form(S: SparseFamily | Sequence[np.ndarray], f: np.ndarray, g: np.ndarray,
                r1: float, r2p: float) -> float:
    if r1 < 1 or r2p < 1:
        raise ValueError("exponents must be at least 1")
    sets = S.sets if isinstance(S, SparseFamily) else list(S)
    size = len(f)
    F = np.asarray(f).reshape(size, 1)
    Gm = np.asarray(g).reshape(size, 1)
    return float(sparse_form_batch(sets, size, F, Gm, r1, r2p)[0])


# ----------------------------------------------------------------------
# admissibility

def _q(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def admissible_region(Q, beta, r1, r2) -> str:
    """``"sparse1"``, ``"sparse2"`` or ``"inadmissible"`` (strict inequalities, exact arithmetic)."""
    if r2 == INF:
        # only the second branch with r1 = 1 reaches r2 = inf
        Q, beta = _q(Q), _q(beta)
        return "sparse2" if r1 == 1 and 1 < beta / (2 * Q) else "inadmissible"
    Q, beta, r1, r2 = (_q(v) for v in (Q, beta, r1, r2))
    bound = beta / (2 * Q)
    if 1 <= r1 <= r2 <= 2 and 1 / r1 - Fraction(1, 2) < bound:
        return "sparse1"
    r1p = None if r1 == 1 else r1 / (r1 - 1)
    if 1 <= r1 <= 2 <= r2 and (r1p is None or r2 <= r1p) and 1 / r1 - 1 / r2 < bound:
        return "sparse2"
    return "inadmissible"


# ----------------------------------------------------------------------
# cube collections

@dataclass(frozen=True)
class CollectionCube:
    grid: int
    level: int
    points: np.ndarray = field(compare=False)
    tag: float
    j: int
    l: int | None  # None for the l <= j eps block


@dataclass
class CubeCollection:
    cubes: list[CollectionCube]
    size: int
    requested_levels: int
    clamped_levels: int
    packing: float
    packing_by_grid: list[float]

    @property
    def clamped_fraction(self) -> float:
        return self.clamped_levels / max(self.requested_levels, 1)

    @property
    def unreliable(self) -> bool:
        return self.clamped_fraction > 0.3

    @property
    def max_tag(self) -> float:
        return max((c.tag for c in self.cubes), default=0.0)

    def weighted_form(self, f, g, r1, r2p) -> float:
        F = np.asarray(f).reshape(-1, 1)
        Gm = np.asarray(g).reshape(-1, 1)
        sets = [c.points for c in self.cubes]
        sizes = np.array([len(R) for R in sets], dtype=float)
        fam = SparseFamily(sets, sets, self.size)
        M = fam.incidence()
        terms = sizes * (_averages(M, sizes, F, r1) * _averages(M, sizes, Gm, r2p))[:, 0]
        return float(np.dot([c.tag for c in self.cubes], terms))


def decay_exponents(spec: MultiplierSpec, Q: float, r1: float, r2: float, c_theta: float = 1.0):
    """Per-``j`` (and per-``l``) exponents of the geometric factors tagging each block."""
    th, be, eps, slack = spec.theta, spec.beta, spec.epsilon, spec.slack
    d = 1 / r1 - 1 / r2
    if r2 <= 2:
        small = th * Q * d - th * be / 2 + th * Q / 2 * (2 / r2 - 1) + slack * (2 / r2 - 1) + eps * Q * d
    else:
        small = -Q * (1 - th) * d - th * be / 2 + Q * d + slack * Q
    large_j = Q * (th * d - c_theta * (Q + th * be / 2))
    large_l = Q * (d - (Q + th * be / 2))
    return small, large_j, large_l


def packing_constant(cubes: Sequence[np.ndarray], size: int) -> float:
    """``max_R sum_{R' in C, R' <= R} |R'| / |R|`` over the members ``R`` of the collection."""
    if not cubes:
        return 0.0
    fam = SparseFamily(list(cubes), list(cubes), size)
    M = fam.incidence()
    sizes = np.asarray(M.sum(axis=1)).ravel()
    overlap = (M @ M.T).toarray()
    contained = overlap == sizes[None, :]  # R' (column) inside R (row)
    return float(np.max((contained * sizes[None, :]).sum(axis=1) / sizes))


def proof_scale_collection(dec: SpectralDecomposition, spec: MultiplierSpec, family: GridFamily,
                           j_range, r1: float = 1.0, r2: float = 2.0, c_theta: float = 1.0,
                           grids: Sequence[int] | None = None) -> CubeCollection:
    """Cubes at the levels the domination argument assigns to each ``(j, l)`` block.

    The ``l <= j eps`` block of ``T_j`` uses level ``floor(j(1-theta) - j eps)``
    and each ``l > j eps`` piece level ``floor(j(1-theta) - l)``, shifted by
    ``-log_nu s0`` to convert from the continuum length unit.  Levels outside
    the grid range are clamped and counted.  Identical point sets within one
    grid are merged, keeping the largest tag.
    """
    g = dec.group
    nu = spec.nu
    shift = math.log(dec.s0, nu)
    small_e, large_j, large_l = decay_exponents(spec, g.Q, r1, r2, c_theta)
    grid_ids = list(range(len(family.grids))) if grids is None else list(grids)
    requested = clamped = 0
    merged: dict[tuple[int, bytes], CollectionCube] = {}
    for j in j_range:
        if j * spec.theta < 0:
            continue
        sd = spatial_decomposition(dec, spec, j)
        if not np.any(sd.kernel):
            continue
        aj = abs(j)
        blocks = [(None, math.floor(j * (1 - spec.theta) - j * spec.epsilon - shift), nu ** (small_e * aj))]
        for l in sd.levels:
            if l > j * spec.epsilon:
                blocks.append((l, math.floor(j * (1 - spec.theta) - l - shift), nu ** (large_j * aj + large_l * l)))
        for l, level, tag in blocks:
            for gi in grid_ids:
                grid = family.grids[gi]
                requested += 1
                if not grid.k_min <= level <= grid.k_max:
                    clamped += 1
                for cell in grid.cells(level):
                    key = (gi, np.sort(cell).tobytes())
                    old = merged.get(key)
                    if old is None or old.tag < tag:
                        merged[key] = CollectionCube(gi, grid._clamp(level), np.sort(cell), tag, j, l)
    cubes = list(merged.values())
    if not cubes:
        # every piece vanishes on the spectrum: T = 0 needs no cubes
        return CubeCollection([], g.size, requested, clamped, 0.0, [0.0 for _ in grid_ids])
    by_grid = [packing_constant([c.points for c in cubes if c.grid == gi], g.size) for gi in grid_ids]
    return CubeCollection(cubes, g.size, requested, clamped, max(by_grid), by_grid)


# ----------------------------------------------------------------------
# sparsification

@dataclass
class Sparsification:
    """Layers of sparse families partitioning the input collection.

    Every cube lands in exactly one layer, so the sum of the layers' sparse
    forms equals the unweighted form of the collection.
    """

    families: list[SparseFamily]
    eta_target: float
    diagnostic: str = ""

    @property
    def eta(self) -> float:
        return min((f.eta for f in self.families), default=1.0)

    def verify(self) -> list[str]:
        return [f"layer {i}: {p}" for i, fam in enumerate(self.families) for p in fam.verify(self.eta_target)]

    @property
    def sets(self) -> list[np.ndarray]:
        return [R for fam in self.families for R in fam.sets]

    def form(self, f, g, r1, r2p) -> float:
        return sum(sparse_form(fam, f, g, r1, r2p) for fam in self.families)


def sparsify(cubes: Sequence[np.ndarray], size: int, eta: float = 0.5, max_layers: int | None = None) -> Sparsification:
    """Assign ``E_R`` from the largest cubes downward.

    A cube first tries ``R`` minus already claimed points minus the smaller
    cubes still to come; if that is below ``eta |R|`` it takes the
    ``ceil(eta |R|)`` free points covered by the fewest pending cubes.  A cube
    with too few free points opens (or joins) a further layer.
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    cubes = [np.unique(np.asarray(R)) for R in cubes if len(R)]
    order = sorted(range(len(cubes)), key=lambda i: (-len(cubes[i]), i))
    pending = np.zeros(size, dtype=np.int64)
    for R in cubes:
        pending[R] += 1
    layers: list[tuple[list, list, np.ndarray]] = []
    diagnostic = ""
    for i in order:
        R = cubes[i]
        pending[R] -= 1
        need = math.ceil(eta * len(R) - 1e-12)
        placed = False
        for sets, owned, claimed in layers:
            free = R[~claimed[R]]
            if free.size < need:
                continue
            quiet = free[pending[free] == 0]
            E = quiet if quiet.size >= need else free[np.lexsort((free, pending[free]))][:need]
            sets.append(R)
            owned.append(E)
            claimed[E] = True
            placed = True
            break
        if not placed:
            if max_layers is not None and len(layers) >= max_layers:
                diagnostic = f"layer limit {max_layers} reached; cube of size {len(R)} dropped"
                continue
            claimed = np.zeros(size, dtype=bool)
            quiet = R[pending[R] == 0]
            E = quiet if quiet.size >= need else R[np.lexsort((R, pending[R]))][:need]
            claimed[E] = True
            layers.append(([R], [E], claimed))
    fams = [SparseFamily(s, o, size) for s, o, _ in layers]
    return Sparsification(fams, eta, diagnostic)


# ----------------------------------------------------------------------
# domination experiment

@dataclass
class DominationResult:
    theta: float
    beta: float
    r1: float
    r2: float
    mode: str
    ratios: np.ndarray
    dual_ratios: np.ndarray
    dual_gap: float
    single_grid_ratios: np.ndarray
    inner: np.ndarray
    forms: np.ndarray
    layers: int
    eta: float
    collection: CubeCollection

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios))

    @property
    def median_ratio(self) -> float:
        return float(np.median(self.ratios))


class DominationError(RuntimeError):
    pass


def random_test_pairs(g, trials: int, rng: np.random.Generator, complex_valued: bool = False):
    """Columns of random bounded functions supported on random balls of radius at most ``diam / 4``."""
    radii = g.norm_values[(g.norm_values > 0) & (g.norm_values <= g.diameter / 4)]
    if radii.size == 0:
        radii = g.norm_values[1:2]
    out = []
    for _ in range(2):
        F = np.zeros((g.size, trials), dtype=complex if complex_valued else float)
        for t in range(trials):
            z = int(rng.integers(g.size))
            r = float(rng.choice(radii))
            B = np.flatnonzero(g.distance[z] <= r)
            if complex_valued:
                rad = np.sqrt(rng.uniform(0, 1, B.size))
                F[B, t] = rad * np.exp(2j * np.pi * rng.uniform(0, 1, B.size))
            else:
                F[B, t] = rng.uniform(-1, 1, B.size)
        out.append(F)
    return out[0], out[1]


def domination_experiment(dec: SpectralDecomposition, spec: MultiplierSpec, family: GridFamily,
                          r1: float, r2: float, trials: int = 100, seed: int = 0,
                          j_range=None) -> DominationResult:
    """``|<Tf, g>| / Lambda_{S, r1, r2'}(f, g)`` for random pairs with ``T = m(sqrt(L))``.

    The pairing is ``<u, v> = sum u conj(v)``.  The dual form uses
    ``|<f, T* g>| / Lambda_{S, r2', r1}(f, g)`` with ``T*`` built from ``conj(m)``.
    """
    g = dec.group
    mode = admissible_region(g.Q, spec.beta, r1, r2)
    mode = mode if mode != "inadmissible" else "diagnostic"
    if j_range is None:
        mu = dec.frequencies[dec.frequencies > 0]
        j_range = spec.support_indices(float(mu.min()), float(mu.max())) if mu.size else []
    coll = proof_scale_collection(dec, spec, family, j_range, r1, r2)
    sparse = sparsify([c.points for c in coll.cubes], g.size)
    rng = np.random.default_rng(seed)
    F, Gm = random_test_pairs(g, trials, rng)
    vals = dec.multiplier_values(spec.m)
    U = dec.eigenvectors
    TF = U @ (vals[:, None] * (U.T @ F))
    TsG = U @ (np.conj(vals)[:, None] * (U.T @ Gm))
    inner = np.abs(np.einsum("it,it->t", TF, np.conj(Gm)))
    inner_dual = np.abs(np.einsum("it,it->t", F, np.conj(TsG)))
    r2p = conjugate(r2)
    forms = sum(sparse_form_batch(fam.sets, g.size, F, Gm, r1, r2p) for fam in sparse.families)
    dual_forms = sum(sparse_form_batch(fam.sets, g.size, F, Gm, r2p, r1) for fam in sparse.families)
    if np.any((forms == 0) & (inner > 0)):
        raise DominationError("sparse form vanishes while the pairing does not")
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(forms > 0, inner / forms, 0.0)
        dual = np.where(dual_forms > 0, inner_dual / dual_forms, 0.0)
        # the same quantity computed through T instead of T*
        dual_via_T = np.where(dual_forms > 0, inner / dual_forms, 0.0)
    gap = float(np.max(np.abs(dual - dual_via_T) / np.maximum(np.abs(dual_via_T), 1e-300))) if trials else 0.0
    one = [c.points for c in coll.cubes if c.grid == 0]
    one_sparse = sparsify(one, g.size)
    one_forms = sum(sparse_form_batch(fam.sets, g.size, F, Gm, r1, r2p) for fam in one_sparse.families)
    with np.errstate(invalid="ignore", divide="ignore"):
        single = np.where(one_forms > 0, inner / one_forms, np.where(inner > 0, np.inf, 0.0))
    return DominationResult(spec.theta, spec.beta, r1, r2, mode, ratios, dual, gap, single,
                            inner, forms, len(sparse.families), sparse.eta, coll)
