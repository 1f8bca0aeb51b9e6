"""Dyadic bump partitions, the oscillating multiplier class and Sobolev norms.

Multipliers are plain callables of the spectral variable ``lambda >= 0``
(the argument of ``m(sqrt(L))``); they accept and return numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Multiplier = Callable[[np.ndarray], np.ndarray]


def smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for ``u <= 0``, 1 for ``u >= 1``."""
    u = np.asarray(u, dtype=float)
    a = np.clip(u, 0.0, 1.0)
    b = 1.0 - a
    with np.errstate(divide="ignore", over="ignore"):
        fa = np.where(a > 0, np.exp(-1.0 / np.where(a > 0, a, 1.0)), 0.0)
        fb = np.where(b > 0, np.exp(-1.0 / np.where(b > 0, b, 1.0)), 0.0)
    return fa / (fa + fb)


@dataclass(frozen=True)
class BumpProfile:
    """``phi(lam) = chi(lam) - chi(nu * lam)`` where ``chi`` is a smooth cutoff
    equal to 1 on ``(0, 1]`` and 0 on ``[nu, inf)`` (a smooth step in ``log_nu``)."""

    nu: float = 2.0

    def chi(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        out = np.ones_like(lam)
        pos = lam > 0
        out[pos] = 1.0 - smooth_step(np.log(lam[pos]) / math.log(self.nu))
        return out

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        out = np.zeros_like(lam)
        pos = lam > 0
        u = np.log(lam[pos]) / math.log(self.nu)
        out[pos] = smooth_step(u + 1.0) - smooth_step(u)
        return out

    def partition_sum(self, lam) -> np.ndarray:
        """``sum_j phi(nu^{-j} lam)`` over the (at most two) active indices."""
        lam = np.asarray(lam, dtype=float)
        u = np.log(lam) / math.log(self.nu)
        j0 = np.floor(u)
        total = np.zeros_like(lam)
        for shift in (-1, 0, 1, 2):
            total += self(lam * self.nu ** -(j0 + shift))
        return total


def make_bump_partition(nu: float = 2.0) -> BumpProfile:
    if not nu > 1:
        raise ValueError(f"nu must exceed 1, got {nu}")
    return BumpProfile(float(nu))


@dataclass(frozen=True)
class MultiplierSpec:
    theta: float
    beta: float
    m: Multiplier
    bump: BumpProfile = field(default_factory=BumpProfile)
    epsilon: float = 0.1
    slack: float = 0.01
    name: str = "custom"

    @property
    def nu(self) -> float:
        return self.bump.nu

    def __call__(self, lam) -> np.ndarray:
        return self.m(lam)

    def piece(self, j: int) -> Multiplier:
        """``m_j(lam) = m(lam) phi(nu^{-j} lam)``."""
        scale = self.nu ** (-j)
        return lambda lam: self.m(lam) * self.bump(np.asarray(lam, dtype=float) * scale)

    def rescaled_piece(self, j: int) -> Multiplier:
        """``m^j(lam) = m(nu^j lam) phi(lam)``."""
        scale = self.nu**j
        return lambda lam: self.m(np.asarray(lam, dtype=float) * scale) * self.bump(lam)

    def support_indices(self, lam_min: float, lam_max: float) -> list[int]:
        """Indices ``j`` (with ``j * theta >= 0``) whose piece can be nonzero on
        ``[lam_min, lam_max]``, ``lam_min > 0``."""
        lo = math.floor(math.log(lam_min) / math.log(self.nu)) - 1
        hi = math.ceil(math.log(lam_max) / math.log(self.nu)) + 1
        return [j for j in range(lo, hi + 1) if j * self.theta >= 0]


def oscillating_multiplier(theta: float, beta: float, nu: float = 2.0, epsilon: float = 0.1,
                           slack: float = 0.01) -> MultiplierSpec:
    """``m(lam) = exp(i lam^theta) lam^{-theta beta / 2}`` on ``{lam^theta >= 1}``."""
    if theta == 0:
        raise ValueError("theta must be nonzero")
    if beta < 0:
        raise ValueError("beta must be nonnegative")

    def m(lam):
        lam = np.asarray(lam, dtype=float)
        out = np.zeros(lam.shape, dtype=complex)
        on = (lam >= 1) if theta > 0 else ((lam > 0) & (lam <= 1))
        x = lam[on]
        out[on] = np.exp(1j * x**theta) * x ** (-theta * beta / 2)
        return out

    return MultiplierSpec(theta, beta, m, make_bump_partition(nu), epsilon, slack,
                          name=f"oscillating(theta={theta:g},beta={beta:g})")


def frequency_pieces(spec: MultiplierSpec, j: int) -> tuple[Multiplier, Multiplier]:
    """``(m^j, m_j)``."""
    if j * spec.theta < 0:
        raise ValueError(f"piece index j={j} has the wrong sign for theta={spec.theta}")
    return spec.rescaled_piece(j), spec.piece(j)


# ----------------------------------------------------------------------
# Sobolev norms

class SupportError(ValueError):
    pass


def _derivative(values: np.ndarray, dx: float) -> np.ndarray:
    return np.gradient(values, dx, edge_order=2)


def sobolev_norm(values, dx: float, s: int, edge_tol: float = 1e-9) -> float:
    """``(sum_{k<=s} ||h^{(k)}||_2^2)^{1/2}`` for ``h`` sampled on a uniform grid.

    Derivatives are central differences, integrals the trapezoid rule.  The
    samples must vanish near both ends of the window.
    """
    h = np.asarray(values)
    if s < 0 or int(s) != s:
        raise ValueError("s must be a nonnegative integer")
    peak = float(np.max(np.abs(h))) if h.size else 0.0
    if peak == 0.0:
        return 0.0
    edge = max(2, h.size // 200)
    if np.max(np.abs(h[:edge])) > edge_tol * peak or np.max(np.abs(h[-edge:])) > edge_tol * peak:
        raise SupportError("support touches the window boundary")
    total = 0.0
    d = h.astype(complex) if np.iscomplexobj(h) else h.astype(float)
    for k in range(int(s) + 1):
        if k:
            d = _derivative(d, dx)
        total += float(np.trapezoid(np.abs(d) ** 2, dx=dx))
    return math.sqrt(total)


def sample(h: Multiplier, a: float, b: float, points: int = 2**12) -> tuple[np.ndarray, float]:
    x = np.linspace(a, b, points)
    return np.asarray(h(x)), float(x[1] - x[0])


def sobolev_norm_of(h: Multiplier, a: float, b: float, s: int, points: int = 2**12) -> float:
    vals, dx = sample(h, a, b, points)
    return sobolev_norm(vals, dx, s)


def fractional_sobolev_norm(h: Multiplier, a: float, b: float, s: float, points: int = 2**12) -> float:
    """``||h||_{s + kappa} ~ ||h||_s^{1-kappa} ||h||_{s+1}^{kappa}`` for fractional order."""
    lo = math.floor(s)
    kappa = s - lo
    vals, dx = sample(h, a, b, points)
    n0 = sobolev_norm(vals, dx, lo)
    if kappa == 0:
        return n0
    n1 = sobolev_norm(vals, dx, lo + 1)
    return n0 ** (1 - kappa) * n1**kappa


def refinement_gap(h: Multiplier, a: float, b: float, s: int, points: int = 2**12) -> float:
    """Relative change of the Sobolev norm when the grid spacing is halved."""
    coarse = sobolev_norm_of(h, a, b, s, points)
    fine = sobolev_norm_of(h, a, b, s, 2 * points - 1)
    return abs(fine - coarse) / max(fine, 1e-300)


# ----------------------------------------------------------------------
# class membership

@dataclass(frozen=True)
class MembershipRow:
    j: int
    s: int
    cond1: float
    cond2: float


@dataclass
class MembershipReport:
    rows: list[MembershipRow]
    verdict: str
    spread: dict[str, float]

    def table(self) -> list[tuple]:
        return [(r.j, r.s, r.cond1, r.cond2) for r in self.rows]


def _grid_points(spec: MultiplierSpec, j: int, width: float) -> int:
    # resolve the phase of m(nu^j lam) at ~24 samples per radian
    rate = abs(spec.theta) * spec.nu ** (j * spec.theta) * spec.nu ** (abs(spec.theta - 1) + 1)
    return int(max(2**12, min(2**22, 24 * rate * width)))


def class_membership_report(spec: MultiplierSpec, j_range, s_max: int = 3,
                            ratio_limit: float = 10.0) -> MembershipReport:
    """Normalized sup and Sobolev quantities of ``m^j`` over ``j_range``.

    ``cond1 = nu^{j theta beta / 2} ||m^j||_inf`` and
    ``cond2 = nu^{-j theta (2s - beta) / 2} ||m^j||_{L^2_s}``.  The verdict is
    ``"bounded"`` when every column's max/min over the top half of the
    ``j`` range (largest ``|j|``) is at most ``ratio_limit``.
    """
    if s_max > 6:
        raise ValueError("s_max above 6 exceeds the finite-difference accuracy budget")
    nu, th, be = spec.nu, spec.theta, spec.beta
    lo, hi = 1 / nu, nu
    pad = 0.25 * (hi - lo)
    a, b = lo - pad, hi + pad
    rows = []
    for j in j_range:
        mj = spec.rescaled_piece(j)
        vals, dx = sample(mj, a, b, _grid_points(spec, j, b - a))
        sup = float(np.max(np.abs(vals)))
        c1 = nu ** (j * th * be / 2) * sup
        for s in range(s_max + 1):
            c2 = nu ** (-j * th * (2 * s - be) / 2) * sobolev_norm(vals, dx, s)
            rows.append(MembershipRow(int(j), s, c1, c2))

    js = sorted({r.j for r in rows}, key=abs)
    top = set(js[len(js) // 2:])
    spread = {}
    cols = {"cond1": [r.cond1 for r in rows if r.j in top and r.s == 0]}
    for s in range(s_max + 1):
        cols[f"cond2_s{s}"] = [r.cond2 for r in rows if r.j in top and r.s == s]
    for name, col in cols.items():
        col = np.asarray(col)
        if col.size == 0 or np.min(col) == 0:
            spread[name] = float("inf") if np.any(col > 0) else 1.0
        else:
            spread[name] = float(np.max(col) / np.min(col))
    verdict = "bounded" if all(v <= ratio_limit for v in spread.values()) else "unbounded"
    return MembershipReport(rows, verdict, spread)
