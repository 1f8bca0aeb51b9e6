"""Spatial pieces ``T_j^l`` of the frequency pieces and their measured decay."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .multipliers import MultiplierSpec
from .norms import INF, operator_norm
from .spectral import SpectralDecomposition, kernel_of
from .util import worker_count


def annulus_scale(spec: MultiplierSpec, j: int, l: int) -> float:
    """``nu^{-l + j (1 - theta)}``, the factor applied to continuum distance."""
    return spec.nu ** (-l + j * (1 - spec.theta))


def continuum_norms(dec: SpectralDecomposition) -> np.ndarray:
    """Quasi-norms in the length unit matched to the spectral scale ``s0``."""
    return dec.group.norms / dec.s0


@dataclass
class SpatialDecomposition:
    """All spatial pieces of one frequency piece ``T_j``.

    ``kernels[l]`` is the convolution kernel of ``T_j^l``; the identity entry
    of ``K_{m_j}`` sits in the smallest-``l`` piece so the pieces sum to
    ``K_{m_j}`` exactly.
    """

    j: int
    kernel: np.ndarray
    kernels: dict[int, np.ndarray]
    empty: set[int] = field(default_factory=set)

    @property
    def levels(self) -> list[int]:
        return sorted(self.kernels)

    def grouped(self, spec: MultiplierSpec) -> tuple[np.ndarray, dict[int, np.ndarray]]:
        """``(sum_{l <= j eps} K^l, {l: K^l for l > j eps})``."""
        cut = self.j * spec.epsilon
        small = np.zeros_like(self.kernel)
        large = {}
        for l, k in self.kernels.items():
            if l <= cut:
                small += k
            else:
                large[l] = k
        return small, large


def spatial_decomposition(dec: SpectralDecomposition, spec: MultiplierSpec, j: int) -> SpatialDecomposition:
    K = kernel_of(dec, spec.piece(j))
    r = continuum_norms(dec)
    positive = r[r > 0]
    nu = spec.nu
    shift = j * (1 - spec.theta)
    # phi(nu^{-l + shift} r) != 0 requires |log_nu r + shift - l| < 1
    lo = math.floor(math.log(positive.min(), nu) + shift) - 1
    hi = math.ceil(math.log(positive.max(), nu) + shift) + 1
    kernels: dict[int, np.ndarray] = {}
    empty = set()
    for l in range(lo, hi + 1):
        w = spec.bump(annulus_scale(spec, j, l) * r)
        if np.any(w > 0):
            kernels[l] = K * w
        else:
            empty.add(l)
    first = min(kernels)
    kernels[first] = kernels[first].copy()
    kernels[first][dec.group.identity] += K[dec.group.identity]
    return SpatialDecomposition(j, K, kernels, empty)


def spatial_piece_operator(dec: SpectralDecomposition, spec: MultiplierSpec, j: int, l: int) -> tuple[np.ndarray, bool]:
    """Matrix of ``T_j^l`` and a flag telling whether its annulus is empty on the model."""
    sd = spatial_decomposition(dec, spec, j)
    if l not in sd.kernels:
        n = dec.size
        return np.zeros((n, n), dtype=complex), True
    return dec.group.convolution_matrix(sd.kernels[l]), False


# ----------------------------------------------------------------------
# decay measurements

PAIRS = ((2, 2), (1, 1), (1, INF), (INF, INF), (1, 2), (2, INF))


def predicted_exponent(spec: MultiplierSpec, Q: int, p: float, q: float) -> float | None:
    """Growth exponent in ``j`` (log base nu) of the ``l <= j eps`` block."""
    th, be = spec.theta, spec.beta
    if (p, q) == (2, 2):
        return -th * be / 2
    if (p, q) in ((1, 1), (INF, INF)):
        return -th * be / 2 + th * Q / 2 + spec.slack
    if (p, q) == (1, INF):
        return Q - th * Q / 2
    return None


@dataclass(frozen=True)
class DecayRow:
    j: int
    p: float
    q: float
    norm_small_l: float
    worst_large_l: float


@dataclass
class DecayReport:
    rows: list[DecayRow]
    slopes: dict[tuple, float]
    predicted: dict[tuple, float | None]
    usable: dict[tuple, list[int]]


def piece_norms(dec: SpectralDecomposition, spec: MultiplierSpec, j: int, pairs=PAIRS) -> list[DecayRow]:
    sd = spatial_decomposition(dec, spec, j)
    small, large = sd.grouped(spec)
    g = dec.group
    rows = []
    A_small = g.convolution_matrix(small)
    A_large = {l: g.convolution_matrix(k) for l, k in large.items()}
    for p, q in pairs:
        ns = operator_norm(A_small, p, q)
        nl = max((operator_norm(A, p, q) for A in A_large.values()), default=0.0)
        rows.append(DecayRow(j, p, q, ns, nl))
    return rows


class DecayError(RuntimeError):
    pass


def fitted_slope(js, values, nu: float) -> float:
    js = np.asarray(js, dtype=float)
    v = np.asarray(values, dtype=float)
    slope, _ = np.polyfit(js, np.log(v) / math.log(nu), 1)
    return float(slope)


def piece_decay_report(dec: SpectralDecomposition, spec: MultiplierSpec, j_range, pairs=PAIRS,
                       floor: float = 1e-12) -> DecayReport:
    """Norms of the grouped pieces for each ``j`` with fitted log-nu slopes."""
    j_range = list(j_range)
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        per_j = list(pool.map(lambda j: piece_norms(dec, spec, j, pairs), j_range))
    rows = [r for block in per_j for r in block]
    slopes, predicted, usable = {}, {}, {}
    for p, q in pairs:
        pts = [(r.j, r.norm_small_l) for r in rows if (r.p, r.q) == (p, q) and r.norm_small_l > floor]
        usable[(p, q)] = [j for j, _ in pts]
        predicted[(p, q)] = predicted_exponent(spec, dec.group.Q, p, q)
        if len(pts) < 3:
            raise DecayError(f"only {len(pts)} usable j values for the ({p}, {q}) norm")
        slopes[(p, q)] = fitted_slope(*zip(*pts), nu=spec.nu)
    return DecayReport(rows, slopes, predicted, usable)


def frequency_piece_norms(dec: SpectralDecomposition, spec: MultiplierSpec, j_range) -> dict[int, float]:
    """``max_i |m_j(sqrt(lambda_i))|`` for each ``j``: the exact ``||T_j||_{2->2}``."""
    mu = dec.frequencies
    return {j: float(np.max(np.abs(spec.piece(j)(mu)))) for j in j_range}


def usable_indices(dec: SpectralDecomposition, spec: MultiplierSpec, j_range) -> list[int]:
    """Interior pieces: ``j theta > 0`` (the bump clears the cutoff of ``m``) and the
    bump peak ``nu^j`` lies inside the spectral range, so the sup is resolved."""
    mu = dec.frequencies[dec.frequencies > 0]
    if mu.size == 0:
        return []
    lo, hi = float(mu.min()), float(mu.max())
    return [j for j in j_range if j * spec.theta > 0 and lo <= spec.nu**j <= hi]


def l2_decay_slope(dec: SpectralDecomposition, spec: MultiplierSpec, j_range) -> tuple[float, list[int]]:
    """Fitted log-nu slope of ``||T_j||_{2->2}`` over the usable ``j``."""
    norms = frequency_piece_norms(dec, spec, j_range)
    js = [j for j in usable_indices(dec, spec, j_range) if norms[j] > 0]
    if len(js) < 2:
        return float("nan"), js
    return fitted_slope(js, [norms[j] for j in js], spec.nu), js
