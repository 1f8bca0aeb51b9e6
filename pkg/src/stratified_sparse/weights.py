"""Muckenhoupt and reverse-Hoelder characteristics, weighted norms and the
quantitative weighted-bound sweep."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .groups import GroupModel
from .multipliers import Multiplier
from .norms import INF, interpolated_bound, lp_norm, spectral_norm
from .sparse import SparseFamily, conjugate, sparse_form
from .spectral import SpectralDecomposition


@dataclass
class Weight:
    group: GroupModel
    values: np.ndarray
    label: str = "custom"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.group.size,):
            raise ValueError("weight must have one value per group element")
        if not np.all(self.values > 0):
            raise ValueError("weights must be positive")

    def ap(self, p: float) -> float:
        key = ("A", float(p))
        if key not in self._cache:
            self._cache[key] = ap_characteristic(self.group, self.values, p)
        return self._cache[key]

    def rh(self, q: float) -> float:
        key = ("RH", float(q))
        if key not in self._cache:
            self._cache[key] = rh_characteristic(self.group, self.values, q)
        return self._cache[key]


def _values(w) -> np.ndarray:
    return w.values if isinstance(w, Weight) else np.asarray(w, dtype=float)


def ball_averages(g: GroupModel, v: np.ndarray, chunk: int = 512) -> np.ndarray:
    """``out[z, i]``: mean of ``v`` over the closed ball ``{|z^{-1} x| <= r_i}``,
    ``r_i`` running over the distinct norm values (so the last ball is ``G``).

    By left invariance ``B(z, r) = z B(e, r)``; points of ``B(e, r)`` are taken in
    order of increasing norm and the ball sums are prefix sums.
    """
    order = np.argsort(g.norms, kind="stable")
    counts = np.searchsorted(g.norms[order], g.norm_values, side="right")
    out = np.empty((g.size, counts.size))
    for start in range(0, g.size, chunk):
        stop = min(start + chunk, g.size)
        vals = v[g.mul_table[start:stop][:, order]]
        csum = np.cumsum(vals, axis=1)
        out[start:stop] = csum[:, counts - 1] / counts
    return out


def ap_characteristic(g: GroupModel, w, p: float) -> float:
    """``sup_B <w>_B <w^{1-p'}>_B^{p-1}`` over every ball of the model."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    w = _values(w)
    scale = w.max()
    w = w / scale  # the characteristic is scale invariant
    a = ball_averages(g, w)
    b = ball_averages(g, w ** (-1 / (p - 1)))
    return float(max(1.0, np.max(a * b ** (p - 1))))


def rh_characteristic(g: GroupModel, w, q: float) -> float:
    """``sup_B <w>_{q,B} / <w>_{1,B}``."""
    if not q > 1:
        raise ValueError("q must exceed 1")
    w = _values(w)
    w = w / w.max()
    a = ball_averages(g, w)
    b = ball_averages(g, w**q) ** (1 / q)
    return float(max(1.0, np.max(b / a)))


def power_weight(g: GroupModel, a: float) -> Weight:
    """``max(|x|, h0)^a`` with ``h0`` the smallest nonzero quasi-norm."""
    return Weight(g, np.maximum(g.norms, g.min_positive_norm) ** a, label=f"power(a={a:g})")


def weighted_norm(f, p: float, w=None) -> float:
    """``||f||_{L^p(w)}``; ``p = inf`` ignores the weight."""
    return lp_norm(np.asarray(f), p, None if w is None else _values(w))


def dual_weight(w, p: float) -> np.ndarray:
    """``w^{1 - p'}``, the weight of the dual space of ``L^p(w)``."""
    return _values(w) ** (1 - conjugate(p))


# ----------------------------------------------------------------------
# weighted operator norms

@dataclass(frozen=True)
class NormBounds:
    lower: float
    upper: float
    exact: bool


def _weighted_l1(A: np.ndarray, w: np.ndarray) -> float:
    return float(np.max((w[:, None] * np.abs(A)).sum(axis=0) / w))


def _test_functions(g: GroupModel, w: np.ndarray, p: float, rng, trials: int):
    n = g.size
    tests = [rng.uniform(-1, 1, n) for _ in range(trials)]
    radii = g.norm_values[1:]
    for z in rng.choice(n, size=min(n, 8), replace=False):
        for r in radii[:: max(1, radii.size // 4)]:
            tests.append((g.distance[z] <= r).astype(float))
    # bumps adapted to the weight: extremizers of Hoelder against w
    tests.append(w ** (-1 / p) if p != INF else np.ones(n))
    tests.append(w ** (1 / (p - 1)) if p not in (1, INF) else w)
    for i in rng.choice(n, size=min(n, 8), replace=False):
        tests.append(np.eye(n)[i])
    return tests


def weighted_opnorm(dec: SpectralDecomposition, m: Multiplier, p: float, w=None,
                    trials: int = 200, seed: int = 0) -> NormBounds:
    """Bounds on ``||m(sqrt(L))||_{L^p(w) -> L^p(w)}``.

    ``p = 2`` is exact (spectral norm of ``W^{1/2} T W^{-1/2}``).  Otherwise the
    lower bound is a maximum over test functions and the upper bound is Riesz-Thorin
    interpolation on the measure ``w`` between the exact ``L^1(w)``, ``L^2(w)`` and
    ``L^inf`` norms.
    """
    g = dec.group
    wv = np.ones(g.size) if w is None else _values(w)
    T = dec.operator(m)
    if p == 2:
        s = np.sqrt(wv)
        v = spectral_norm(s[:, None] * T / s[None, :])
        return NormBounds(v, v, True)
    rng = np.random.default_rng(seed)
    best = 0.0
    for f in _test_functions(g, wv, p, rng, trials):
        nf = lp_norm(f, p, wv)
        if nf > 0:
            best = max(best, lp_norm(T @ f, p, wv) / nf)
    s = np.sqrt(wv)
    n2 = spectral_norm(s[:, None] * T / s[None, :])
    if p == 1:
        upper = _weighted_l1(T, wv)
    elif p == INF:
        upper = float(np.abs(T).sum(axis=1).max())
    elif p < 2:
        t = 2 - 2 / p
        upper = _weighted_l1(T, wv) ** (1 - t) * n2**t
    else:
        t = 2 / p
        upper = n2**t * float(np.abs(T).sum(axis=1).max()) ** (1 - t)
    return NormBounds(best, max(upper, best), False)


# ----------------------------------------------------------------------
# sparse form bound

def sparse_bound_exponent(r1: float, r2: float, p: float) -> float:
    if r2 == INF:
        return max(1 / (p - r1), 1.0)
    return max(1 / (p - r1), (r2 - 1) / (r2 - p))


def sparse_bound_check(S: SparseFamily, f, g, r1: float, r2: float, p: float, w: Weight,
                    C: float = 1.0) -> float:
    """``Lambda_{S, r1, r2'}(f, g)`` divided by
    ``C ([w]_{A_{p/r1}} [w]_{RH_{(r2/p)'}})^gamma ||f||_{L^p(w)} ||g||_{L^{p'}(w^{1-p'})}``."""
    if not r1 < p < r2:
        raise ValueError("need r1 < p < r2")
    lam = sparse_form(S, f, g, r1, conjugate(r2))
    rh = 1.0 if r2 == INF else w.rh(conjugate(r2 / p))
    chars = w.ap(p / r1) * rh
    rhs = C * chars ** sparse_bound_exponent(r1, r2, p) * weighted_norm(f, p, w) * \
        weighted_norm(g, conjugate(p), dual_weight(w, p))
    if rhs == 0:
        if lam != 0:
            raise ZeroDivisionError("right-hand side vanishes while the sparse form does not")
        return 0.0
    return lam / rhs


# ----------------------------------------------------------------------
# thresholds

def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Thresholds:
    Q: Fraction
    beta: Fraction
    p_beta: Fraction | None  # lower endpoint of the range Q <= beta <= 2Q
    s_beta: Fraction | None  # upper endpoint of the range 0 < beta < Q

    @property
    def mode(self) -> str:
        return threshold_mode(self.Q, self.beta)


def threshold_mode(Q, beta) -> str:
    Q, beta = _frac(Q), _frac(beta)
    if beta == 2 * Q:
        return "i"
    if Q <= beta < 2 * Q:
        return "ii"
    if 0 < beta < Q:
        return "iii"
    raise ValueError(f"beta={beta} outside (0, 2Q]")


def thresholds(Q, beta) -> Thresholds:
    """``p_beta = 2Q / beta`` and ``1/s_beta = 1/2 - beta / 2Q`` (where meaningful)."""
    Q, beta = _frac(Q), _frac(beta)
    mode = threshold_mode(Q, beta)
    p = 2 * Q / beta if mode in ("i", "ii") else None
    s = 1 / (Fraction(1, 2) - beta / (2 * Q)) if mode == "iii" else None
    return Thresholds(Q, beta, p, s)


def riesz_thresholds(Q, k) -> Thresholds:
    """Riesz means of order ``k`` behave like ``beta = 2k``: ``p_k = Q/k``, ``1/s_k = 1/2 - k/Q``."""
    return thresholds(Q, 2 * _frac(k))


def dispersive_thresholds(Q, alpha, beta) -> Thresholds:
    """Dispersive flow with ``beta`` smoothing: ``beta_eff = 2 beta / alpha``, so
    ``p = Q alpha / beta`` and ``1/s = 1/2 - beta / (alpha Q)``."""
    return thresholds(Q, 2 * _frac(beta) / _frac(alpha))


# ----------------------------------------------------------------------
# quantitative sweep

def power_weight_in_class(Q: float, a: float, ap: float | None, rh: float | None = None) -> bool:
    """Continuum membership of ``|x|^a`` in ``A_ap`` (and ``RH_rh``)."""
    ok = True
    if ap is not None:
        ok &= -Q < a < Q * (ap - 1) if ap > 1 else a == 0
    if rh is not None and rh != 1:
        ok &= a > -Q / rh
    return bool(ok)


@dataclass(frozen=True)
class QuantCell:
    p: float
    a: float
    lower: float
    upper: float
    ceiling: float
    characteristic: float
    exponent: float

    @property
    def passed(self) -> bool:
        return self.lower <= self.ceiling * (1 + 1e-9)


@dataclass
class QuantReport:
    mode: str
    thresholds: Thresholds
    cells: list[QuantCell]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cells)


def quantitative_suite(dec: SpectralDecomposition, m: Multiplier, beta, mode: str,
                       ps=None, avals=(-0.5, 0.0, 0.5), trials: int = 50, seed: int = 0) -> QuantReport:
    """Weighted norms of ``m(sqrt(L))`` over ``(p, a)`` cells inside the weight class.

    The ceiling of each cell is ``U_p (chars)^gamma`` where ``U_p`` is the unweighted
    interpolation bound for ``||T||_{p -> p}``, ``chars`` the product of the
    characteristics of the weight class used by the argument and ``gamma`` the
    sparse-form exponent for the exponents ``(r1, r2)`` the argument picks.
    """
    g = dec.group
    th = thresholds(g.Q, beta)
    if th.mode != mode:
        raise ValueError(f"beta={beta} belongs to mode {th.mode}, not {mode}")
    T = dec.operator(m)
    cells = []
    if mode in ("i", "ii"):
        pb = float(th.p_beta)
        if ps is None:
            ps = [pb + (3 - pb) * 0.5, 3.0, 4.0] if pb < 3 else [pb + 0.5, pb + 1.5]
        for p in ps:
            if not p > pb:
                continue
            r = (pb + p) / 2 if pb > 1 else max(1.0, (1 + p) / 2)
            gamma = sparse_bound_exponent(r, INF, p)
            for a in avals:
                if not power_weight_in_class(g.Q, a, p / pb):
                    continue
                w = power_weight(g, a)
                chars = w.ap(p / r)
                nb = weighted_opnorm(dec, m, p, w, trials, seed)
                ceiling = interpolated_bound(T, p) * chars**gamma
                cells.append(QuantCell(p, a, nb.lower, nb.upper, ceiling, chars, gamma))
    else:
        sb = float(th.s_beta)
        if ps is None:
            ps = [2 + (sb - 2) * t for t in (0.25, 0.5, 0.75)]
        for p in ps:
            if not 2 < p < sb:
                continue
            s = (p + sb) / 2
            gamma = sparse_bound_exponent(2.0, s, p)
            rh_index = conjugate(s / p)
            for a in avals:
                if not power_weight_in_class(g.Q, a, p / 2, conjugate(sb / p)):
                    continue
                w = power_weight(g, a)
                chars = w.ap(p / 2) * w.rh(rh_index)
                nb = weighted_opnorm(dec, m, p, w, trials, seed)
                ceiling = interpolated_bound(T, p) * chars**gamma
                cells.append(QuantCell(p, a, nb.lower, nb.upper, ceiling, chars, gamma))
    return QuantReport(mode, th, cells)


SPARSE_BOUND_CASES = ((1.0, 4.0, 2.0), (2.0, 4.0, 3.0), (1.0, 2.0, 1.5))


def sparse_bound_sweep(S: SparseFamily, g: GroupModel, cases=SPARSE_BOUND_CASES, avals=(-0.5, 0.0, 0.5),
              trials: int = 50, seed: int = 0) -> dict[tuple, float]:
    """Max of ``sparse_bound_check`` over random nonnegative pairs, per ``(r1, r2, p, a)``."""
    rng = np.random.default_rng(seed)
    out = {}
    weights = {a: power_weight(g, a) for a in avals}
    pairs = [(rng.uniform(0, 1, g.size), rng.uniform(0, 1, g.size)) for _ in range(trials)]
    for r1, r2, p in cases:
        for a, w in weights.items():
            out[(r1, r2, p, a)] = max(sparse_bound_check(S, f, h, r1, r2, p, w) for f, h in pairs)
    return out
