"""Sublaplacian assembly and functional calculus ``m(sqrt(L))``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .groups import GroupModel

Multiplier = Callable[[np.ndarray], np.ndarray]


class SpectralError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Sublaplacian:
    group: GroupModel
    s0: float
    matrix: np.ndarray


def assemble_sublaplacian(g: GroupModel, s0: float = 32.0) -> Sublaplacian:
    """``s0^2 * sum_k (2I - R_{a_k} - R_{a_k^{-1}}) / 2`` summed over the generators
    *and* their inverses, where ``(R_a f)(x) = f(x a)``.

    Right translations commute with left translations, so the result is a
    left-invariant operator.
    """
    if not s0 > 0:
        raise ValueError("s0 must be positive")
    n = g.size
    L = np.zeros((n, n))
    rows = np.arange(n)
    for gen in g.generators:
        a = g.index(gen)
        for b in (a, int(g.inverse_table[a])):
            right = g.mul_table[:, b]
            L[rows, rows] += 1.0
            np.add.at(L, (rows, right), -0.5)
            ainv = int(g.inverse_table[b])
            np.add.at(L, (rows, g.mul_table[:, ainv]), -0.5)
    L *= s0**2
    return Sublaplacian(g, float(s0), L)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    group: GroupModel
    s0: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        """``sqrt(lambda_i)``: the points where multipliers are evaluated."""
        return np.sqrt(self.eigenvalues)

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    def multiplier_values(self, m: Multiplier) -> np.ndarray:
        vals = np.asarray(m(self.frequencies))
        if vals.shape == ():
            vals = np.full(self.size, vals)
        if not np.all(np.isfinite(vals)):
            bad = self.frequencies[~np.isfinite(vals)]
            raise ValueError(f"multiplier is not finite at sqrt(lambda) = {bad[:5]}")
        return vals

    def apply(self, m: Multiplier, f: np.ndarray) -> np.ndarray:
        return apply_multiplier(self, m, f)

    def kernel(self, m: Multiplier) -> np.ndarray:
        return kernel_of(self, m)

    def operator(self, m: Multiplier) -> np.ndarray:
        """Dense matrix of ``m(sqrt(L))``."""
        V = self.eigenvectors
        vals = self.multiplier_values(m)
        return (V * vals) @ V.T


def spectral_decompose(L: Sublaplacian, zero_tol: float = 1e-10) -> SpectralDecomposition:
    """Dense symmetric eigendecomposition.  Eigenvalues below ``zero_tol * ||L||``
    in absolute value are set to exactly zero."""
    A = L.matrix
    if not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise SpectralError("sublaplacian matrix is not symmetric")
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(A + np.eye(len(A)))
        raise SpectralError(f"eigensolver failed ({exc}); cond(I + L) = {cond:.3e}") from exc
    scale = max(abs(w[-1]), 1.0)
    w = np.where(np.abs(w) <= zero_tol * scale, 0.0, w)
    if w[0] < 0:
        raise SpectralError(f"negative eigenvalue {w[0]:.3e}: matrix is not positive semidefinite")
    return SpectralDecomposition(L.group, L.s0, w, V)


def decompose(g: GroupModel, s0: float = 32.0) -> SpectralDecomposition:
    return spectral_decompose(assemble_sublaplacian(g, s0))


def apply_multiplier(dec: SpectralDecomposition, m: Multiplier, f: np.ndarray) -> np.ndarray:
    """``sum_i m(sqrt(lambda_i)) <f, v_i> v_i`` (``f`` may carry extra trailing columns)."""
    V = dec.eigenvectors
    vals = dec.multiplier_values(m)
    coeff = V.T @ f
    if coeff.ndim == 1:
        return V @ (vals * coeff)
    return V @ (vals[:, None] * coeff)


def kernel_of(dec: SpectralDecomposition, m: Multiplier) -> np.ndarray:
    """Right convolution kernel ``K_m = m(sqrt(L)) delta_e``."""
    V = dec.eigenvectors
    vals = dec.multiplier_values(m)
    return V @ (vals * V[dec.group.identity])


def plancherel_check(dec: SpectralDecomposition, m: Multiplier) -> float:
    """Relative gap between ``||K_m||_2^2`` (kernel path) and
    ``|G|^{-1} sum_i |m(sqrt(lambda_i))|^2`` (eigenvalue path)."""
    K = kernel_of(dec, m)
    lhs = float(np.sum(np.abs(K) ** 2))
    rhs = float(np.sum(np.abs(dec.multiplier_values(m)) ** 2)) / dec.size
    return abs(lhs - rhs) / max(rhs, 1e-30)


def continuum_plancherel_density(dec: SpectralDecomposition, m: Multiplier, grid: int = 4096) -> tuple[float, float]:
    """Compare the empirical spectral measure with the continuum density on a
    one-dimensional torus: returns ``(discrete, continuum)`` for ``int |m|^2 dmu``.

    For the discrete torus of ``n`` points the continuum counterpart of
    ``|G|^{-1} sum_i |m(sqrt(lambda_i))|^2`` is ``(1/pi) int |m(s0 * 2 sin(xi/2))|^2 dxi``
    over ``[0, pi]``.
    """
    discrete = float(np.sum(np.abs(dec.multiplier_values(m)) ** 2)) / dec.size
    xi = np.linspace(0.0, np.pi, grid)
    vals = np.abs(np.asarray(m(dec.s0 * 2 * np.sin(xi / 2)))) ** 2
    continuum = float(np.trapezoid(vals, xi) / np.pi)
    return discrete, continuum


def power_iteration_norm(A: np.ndarray, iters: int = 500, seed: int = 0, tol: float = 1e-12) -> float:
    """Spectral norm estimate of ``A`` via power iteration on ``A^H A``."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(A.shape[1]) + 0j
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = A.conj().T @ (A @ x)
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x = y / ny
        new = float(np.sqrt(ny))
        if abs(new - est) <= tol * new:
            est = new
            break
        est = new
    return est


def reconstruction_error(L: Sublaplacian, dec: SpectralDecomposition) -> float:
    """``||V diag(lambda) V^T - L|| / ||L||`` in the spectral norm."""
    V = dec.eigenvectors
    diff = (V * dec.eigenvalues) @ V.T - L.matrix
    return power_iteration_norm(diff, iters=200) / max(power_iteration_norm(L.matrix, iters=200), 1e-300)


# ----------------------------------------------------------------------
# heat kernel and kernel estimates

def heat_kernel(dec: SpectralDecomposition, t: float) -> np.ndarray:
    """Convolution kernel ``p_t`` of ``exp(-t L)``."""
    if not t > 0:
        raise ValueError("t must be positive")
    return kernel_of(dec, lambda s: np.exp(-t * s**2)).real


@dataclass(frozen=True)
class GaussianFit:
    C: float
    c: float
    slope: float
    r_squared: float


def gaussian_decay_report(g: GroupModel, p_t: np.ndarray, t: float) -> GaussianFit:
    """Fit ``log p_t(x) = log(C t^{-Q/2}) - |x|^2 / (c t)`` over ``|x| <= diam / 4``."""
    norms = g.norms
    mask = (norms <= g.diameter / 4) & (p_t > 0)
    u = -(norms[mask] ** 2) / t
    y = np.log(p_t[mask])
    slope, intercept = np.polyfit(u, y, 1)
    pred = slope * u + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    C = float(np.exp(intercept) * t ** (g.Q / 2))
    c = float(1.0 / slope) if slope != 0 else float("inf")
    return GaussianFit(C=C, c=c, slope=float(slope), r_squared=r2)
