"""Numerical checks of the weighted L^2 and pointwise kernel estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .multipliers import Multiplier, fractional_sobolev_norm
from .spectral import SpectralDecomposition, heat_kernel, kernel_of

KAPPA = 0.1


def _support_window(dec: SpectralDecomposition, m: Multiplier, points: int = 2**14) -> tuple[float, float]:
    top = float(dec.frequencies.max()) * 1.5 + 1.0
    x = np.linspace(0.0, top, points)
    nz = np.flatnonzero(np.abs(m(x)) > 0)
    if nz.size == 0:
        return 0.0, 0.0
    a, b = x[nz[0]], x[nz[-1]]
    pad = 0.1 * (b - a) + 1e-3
    return a - pad, b + pad


def weighted_kernel_norm_check(dec: SpectralDecomposition, m: Multiplier, s: float,
                               points: int = 2**13) -> float:
    """``sum_x |K_m(x)|^2 (1 + |x|^s)^2 / ||m||_{L^2_s}^2``.

    Distances are measured in the continuum unit (quasi-norm divided by ``s0``).
    """
    if not s > 0:
        raise ValueError("s must be positive")
    K = kernel_of(dec, m)
    r = dec.group.norms / dec.s0
    num = float(np.sum(np.abs(K) ** 2 * (1 + r**s) ** 2))
    a, b = _support_window(dec, m)
    if a == b:
        den = 0.0
    else:
        den = fractional_sobolev_norm(m, a, b, s, points) ** 2
    if den == 0.0:
        if num == 0.0:
            return 0.0
        raise ZeroDivisionError("Sobolev norm vanishes while the kernel does not")
    return num / den


class EmptySupportError(ValueError):
    pass


@dataclass(frozen=True)
class PointwiseCheck:
    R: float
    s: float
    ratio: float
    sup_kernel: float
    sobolev: float


def pointwise_kernel_bound_check(dec: SpectralDecomposition, h: Multiplier, R: float, s: float,
                                 kappa: float = KAPPA, points: int = 2**13) -> PointwiseCheck:
    """``max_x |K_h(x)| (1 + R|x|)^s / (R^Q ||h_R||_{L^2_{s+kappa}})`` for ``h`` supported in ``[R/4, R]``."""
    mu = dec.frequencies
    vals = np.asarray(h(mu))
    outside = (mu < R / 4) | (mu > R)
    if np.any(np.abs(vals[outside]) > 0):
        raise ValueError("h is not supported in [R/4, R] on the spectrum")
    inside = ~outside
    if not np.any(inside):
        raise EmptySupportError(f"no eigenvalue with sqrt(lambda) in [{R / 4}, {R}]")
    K = kernel_of(dec, h)
    sup = float(np.max(np.abs(K)))
    if sup == 0.0:
        return PointwiseCheck(R, s, 0.0, 0.0, 0.0)
    r = dec.group.norms / dec.s0
    hR = lambda t: h(np.asarray(t) * R)
    sob = fractional_sobolev_norm(hR, 0.2, 1.05, s + kappa, points)
    ratio = float(np.max(np.abs(K) * (1 + R * r) ** s)) / (R**dec.group.Q * sob)
    return PointwiseCheck(R, s, ratio, sup, sob)


def heat_factorization_bound(dec: SpectralDecomposition, h: Multiplier, R: float) -> tuple[float, float]:
    """``(sup |K_h|, ||p_{1/R^2}||_2 ||K_H||_2)`` with ``H = exp(lam^2 / R^2) h``.

    Since ``K_h = K_H * p_{1/R^2}`` exactly, Cauchy-Schwarz gives the first
    value at most the second.
    """
    K = kernel_of(dec, h)
    H = lambda lam: np.exp(np.asarray(lam) ** 2 / R**2) * h(lam)
    p = heat_kernel(dec, 1.0 / R**2)
    KH = kernel_of(dec, H)
    return float(np.max(np.abs(K))), float(np.linalg.norm(p) * np.linalg.norm(KH))
