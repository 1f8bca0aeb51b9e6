"""Riesz means and dispersive propagators of the sublaplacian."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from .multipliers import smooth_step
from .norms import lp_norm
from .spectral import SpectralDecomposition, apply_multiplier


class QuadratureError(RuntimeError):
    pass


def _check(k: float, t: float) -> None:
    if not (k > 0 and t > 0):
        raise ValueError("k and t must be positive")


def riesz_scalar(mu: float, k: float, t: float = 1.0, tol: float = 1e-13) -> complex:
    """``k t^{-k} int_0^t (t - s)^{k-1} e^{i s mu} ds`` by adaptive quadrature.

    With ``u = t - s`` the integral is ``e^{i t mu} int_0^t u^{k-1} e^{-i u mu} du``;
    the oscillatory factor goes to QUADPACK's Fourier weight.
    """
    _check(k, t)
    if mu == 0:
        return 1.0 + 0j
    opts = dict(epsabs=tol, epsrel=tol, limit=400)
    # near u = 0 the factor u^{k-1} may be singular: use the algebraic weight
    # on [0, d] where the phase is slow, the Fourier weight beyond
    d = min(t, 1.0 / abs(mu)) if k < 1 else 0.0
    c = s = ec = es = 0.0
    if d > 0:
        r = integrate.quad(lambda u: math.cos(mu * u), 0.0, d, weight="alg", wvar=(k - 1, 0), **opts)
        i = integrate.quad(lambda u: math.sin(mu * u), 0.0, d, weight="alg", wvar=(k - 1, 0), **opts)
        c, ec, s, es = r[0], r[1], i[0], i[1]
    if d < t:
        f = lambda u: u ** (k - 1)
        if abs(mu) * (t - d) > 1.0:
            r = integrate.quad(f, d, t, weight="cos", wvar=mu, full_output=1, **opts)[:2]
            i = integrate.quad(f, d, t, weight="sin", wvar=mu, full_output=1, **opts)[:2]
        else:
            r = integrate.quad(lambda u: f(u) * math.cos(mu * u), d, t, **opts)
            i = integrate.quad(lambda u: f(u) * math.sin(mu * u), d, t, **opts)
        c, ec, s, es = c + r[0], ec + r[1], s + i[0], es + i[1]
    if max(ec, es) > 1e-8 * max(1.0, abs(c) + abs(s)) * t**k:
        raise QuadratureError(f"quadrature did not converge at mu={mu} (error estimate {max(ec, es):.2e})")
    inner = complex(c, -s)
    return k * t ** (-k) * np.exp(1j * t * mu) * inner


def riesz_closed_form_k1(mu, t: float = 1.0) -> np.ndarray:
    """``(e^{i t mu} - 1) / (i t mu)``, the ``k = 1`` case (value 1 at ``mu = 0``)."""
    mu = np.asarray(mu, dtype=float)
    out = np.ones(mu.shape, dtype=complex)
    nz = mu != 0
    x = t * mu[nz]
    out[nz] = (np.exp(1j * x) - 1) / (1j * x)
    return out


def riesz_multiplier(k: float, alpha: float, t: float = 1.0):
    """Multiplier of ``I_{k, alpha, t}`` as a function of ``sqrt(lambda)``.

    Values are computed once per distinct argument and memoized.
    """
    _check(k, t)
    cache: dict[float, complex] = {}

    def sigma(lam):
        lam = np.asarray(lam, dtype=float)
        flat = lam.ravel()
        out = np.empty(flat.shape, dtype=complex)
        for i, x in enumerate(flat):
            key = float(x)
            if key not in cache:
                cache[key] = riesz_scalar(key**alpha, k, t)
            out[i] = cache[key]
        return out.reshape(lam.shape)

    return sigma


def riesz_mean_apply(dec: SpectralDecomposition, k: float, alpha: float, t: float, f: np.ndarray) -> np.ndarray:
    return apply_multiplier(dec, riesz_multiplier(k, alpha, t), f)


def high_pass(x) -> np.ndarray:
    """Smooth cutoff: 0 on ``[0, 1]``, 1 on ``[2, inf)``."""
    return smooth_step(np.asarray(x, dtype=float) - 1.0)


def riesz_leading_coefficient(k: float) -> complex:
    """``c_k`` in ``sigma(mu) = c_k psi(mu) mu^{-k} e^{i mu} + sigma_1(mu)`` (``t = 1``).

    The endpoint ``s = 1`` of the averaging integral contributes
    ``k Gamma(k) (i mu)^{-k} e^{i mu}``.
    """
    return complex(special.gamma(k + 1) * np.exp(-1j * np.pi * k / 2))


def riesz_remainder(mu, k: float) -> np.ndarray:
    """``sigma_1(mu) = sigma(mu) - c_k psi(mu) mu^{-k} e^{i mu}`` at ``t = 1``."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sig = np.array([riesz_scalar(x, k) for x in mu])
    ck = riesz_leading_coefficient(k)
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = np.where(mu > 0, ck * high_pass(mu) * np.power(np.where(mu > 0, mu, 1.0), -k) * np.exp(1j * mu), 0)
    return sig - lead


def mikhlin_constants(k: float, mu_max: float = 200.0, points: int = 4000, orders: int = 2) -> list[float]:
    """``sup_mu |mu^a d^a sigma_1 / dmu^a|`` for ``a <= orders`` on ``(0, mu_max]``."""
    mu = np.linspace(mu_max / points, mu_max, points)
    rem = riesz_remainder(mu, k)
    out = []
    d = rem
    h = mu[1] - mu[0]
    for a in range(orders + 1):
        if a:
            d = np.gradient(d, h, edge_order=2)
        out.append(float(np.max(np.abs(mu**a * d))))
    return out


# ----------------------------------------------------------------------
# dispersive flow

def dispersive_apply(dec: SpectralDecomposition, alpha: float, t: float, f: np.ndarray) -> np.ndarray:
    """``u(., t) = exp(i t (sqrt(L))^alpha) f``."""
    if t == 0:
        return np.array(f, dtype=complex)
    return apply_multiplier(dec, lambda lam: np.exp(1j * t * np.asarray(lam, dtype=float) ** alpha), f)


def weighted_sobolev_check(dec: SpectralDecomposition, alpha: float, beta: float, p: float,
                           w: np.ndarray, f: np.ndarray, t: float = 1.0) -> float:
    """``||u(., t)||_{L^p(w)} / ||(I + sqrt(L))^beta f||_{L^p(w)}``."""
    u = dispersive_apply(dec, alpha, t, f)
    smooth = apply_multiplier(dec, lambda lam: (1.0 + np.asarray(lam, dtype=float)) ** beta, f)
    return lp_norm(u, p, w) / lp_norm(smooth, p, w)
