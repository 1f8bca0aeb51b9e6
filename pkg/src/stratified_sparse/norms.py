"""Operator norms between counting-measure Lebesgue spaces on a finite set."""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse.linalg as spla

INF = math.inf


def spectral_norm(A: np.ndarray) -> float:
    """Largest singular value (dense SVD for small matrices, Lanczos otherwise)."""
    if min(A.shape) <= 256:
        return float(np.linalg.norm(A, 2))
    s = spla.svds(A, k=1, return_singular_vectors=False, tol=1e-12, maxiter=5000,
                  random_state=0)
    return float(s[0])


def operator_norm(A: np.ndarray, p: float, q: float) -> float:
    """Exact ``||A||_{p -> q}`` for the pairs that have closed forms:
    ``(1,1)``, ``(2,2)``, ``(inf,inf)``, ``(1,2)``, ``(1,inf)``, ``(2,inf)``."""
    absA = np.abs(A)
    if (p, q) == (1, 1):
        return float(absA.sum(axis=0).max())
    if (p, q) == (INF, INF):
        return float(absA.sum(axis=1).max())
    if (p, q) == (2, 2):
        return spectral_norm(A)
    if (p, q) == (1, INF):
        return float(absA.max())
    if (p, q) == (1, 2):
        return float(np.sqrt((absA**2).sum(axis=0)).max())
    if (p, q) == (2, INF):
        return float(np.sqrt((absA**2).sum(axis=1)).max())
    raise ValueError(f"no exact formula for the ({p}, {q}) norm")


def interpolated_bound(A: np.ndarray, r: float) -> float:
    """Riesz-Thorin upper bound for ``||A||_{r -> r}`` from the exact 1, 2, inf norms."""
    if r == 1 or r == 2 or r == INF:
        return operator_norm(A, r, r)
    if 1 < r < 2:
        t = 2 - 2 / r  # 1/r = (1 - t) + t / 2
        return operator_norm(A, 1, 1) ** (1 - t) * operator_norm(A, 2, 2) ** t
    if r > 2:
        t = 2 / r  # 1/r = t / 2
        return operator_norm(A, 2, 2) ** t * operator_norm(A, INF, INF) ** (1 - t)
    raise ValueError("r must be at least 1")


def lp_norm(f: np.ndarray, p: float, weight: np.ndarray | None = None) -> float:
    a = np.abs(f)
    if p == INF:
        return float(a.max())
    if weight is None:
        return float(np.sum(a**p) ** (1 / p))
    return float(np.sum(a**p * weight) ** (1 / p))


def random_lower_bound(A: np.ndarray, p: float, q: float, trials: int = 200, seed: int = 0) -> float:
    """``max ||A f||_q / ||f||_p`` over random and indicator test functions."""
    rng = np.random.default_rng(seed)
    n = A.shape[1]
    best = 0.0
    tests = [rng.uniform(-1, 1, n) for _ in range(trials)]
    tests += [np.eye(n)[i] for i in rng.choice(n, size=min(n, 16), replace=False)]
    for f in tests:
        nf = lp_norm(f, p)
        if nf > 0:
            best = max(best, lp_norm(A @ f, q) / nf)
    return best
