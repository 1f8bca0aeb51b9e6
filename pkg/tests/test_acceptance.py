"""Acceptance criteria 1-14.  Each test prints one PASS/FAIL line and asserts the pinned tolerance."""

import time
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg

from stratified_sparse.dyadic import build_dyadic_grids, covering_report, dyadic_arcs, verify_grid_axioms
from stratified_sparse.groups import build_group
from stratified_sparse.multipliers import oscillating_multiplier
from stratified_sparse.pieces import frequency_piece_norms, l2_decay_slope, spatial_decomposition
from stratified_sparse.propagators import dispersive_apply, riesz_closed_form_k1, riesz_multiplier, riesz_scalar
from stratified_sparse.sparse import admissible_region, domination_experiment, sparsify
from stratified_sparse.spectral import decompose, plancherel_check, power_iteration_norm
from stratified_sparse.weights import (ap_characteristic, sparse_bound_sweep, dispersive_thresholds, power_weight,
                                       rh_characteristic, riesz_thresholds, thresholds)

from oracles import admissible_direct

PAIRS = ((1.0, 2.0), (2.0, 3.0), (-1.0, 2.0))

HEAT_TOL = 1e-8
PLANCHEREL_TOL = 1e-10
TELESCOPE_TOL = 1e-10
SLOPE_TOL = 0.15
MIN_USABLE = 5
POWER_ITERATION_TOL = 1e-6
STABILITY = 4.0
DUAL_TOL = 1e-10
A2_GROWTH = 10.0
SPARSE_BOUND_STABILITY = 2.0
RIESZ_TOL = 1e-8
ISOMETRY_TOL = 1e-10
GROUP_TOL = 1e-9
WALL_CLOCK = 15 * 60


@pytest.fixture(scope="module")
def models():
    return {"torus64": build_group("torus:d=1,n=64"), "torus128": build_group("torus:d=1,n=128"),
            "heis4": build_group("heisenberg:n=4"), "heis10": build_group("heisenberg:n=10")}


@pytest.fixture(scope="module")
def domination(models):
    """The sparse domination runs on Torus(1,64) and Torus(1,128), s0 = 8."""
    start = time.perf_counter()
    out = {}
    for name in ("torus64", "torus128"):
        g = models[name]
        dec = decompose(g, 8.0)
        fam = build_dyadic_grids(g, 0.5, seed=0)
        for theta, beta in PAIRS:
            spec = oscillating_multiplier(theta, beta)
            out[(name, theta, beta)] = domination_experiment(dec, spec, fam, 1.0, 2.0, trials=100, seed=0)
    return out, time.perf_counter() - start


def test_criterion_1_heat_vs_expm(models, criterion):
    start = time.perf_counter()
    worst = 0.0
    for name in ("torus64", "heis4", "heis10"):
        g = models[name]
        dec = decompose(g, 1.0)
        L = dec.operator(lambda s: np.asarray(s, dtype=float) ** 2).real
        for t in (0.05, 1.0):
            ours = dec.operator(lambda s: np.exp(-t * np.asarray(s, dtype=float) ** 2))
            ref = scipy.linalg.expm(-t * L)
            worst = max(worst, np.linalg.norm(ours - ref) / np.linalg.norm(ref))
    elapsed = time.perf_counter() - start
    ok = criterion(1, worst <= HEAT_TOL and elapsed <= 30, f"max rel err {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_criterion_2_plancherel(models, criterion):
    worst = 0.0
    for name in ("torus64", "heis4"):
        dec = decompose(models[name], 8.0)
        mults = [lambda s: np.exp(-0.01 * np.asarray(s) ** 2),
                 riesz_multiplier(1.0, 1.0), riesz_multiplier(2.0, 1.0),
                 lambda s: np.exp(0.7j * np.asarray(s, dtype=float)),
                 lambda s: (1.0 + np.asarray(s, dtype=float)) ** 0.5]
        for theta, beta in PAIRS:
            spec = oscillating_multiplier(theta, beta)
            mults.append(spec.m)
            mults += [spec.piece(j) for j in range(-3, 6)]
        worst = max(worst, max(plancherel_check(dec, m) for m in mults))
    ok = criterion(2, worst <= PLANCHEREL_TOL, f"max rel err {worst:.2e}")
    assert ok


def test_criterion_3_grids(models, criterion):
    bad = uncovered = 0
    consts = []
    for name in ("torus64", "heis10"):
        for seed in range(3):
            fam = build_dyadic_grids(models[name], 0.5, seed=seed)
            bad += sum(sum(verify_grid_axioms(grid).summary().values()) for grid in fam.grids)
            C, _, nbad = covering_report(fam.grids)
            uncovered += nbad
            consts.append(f"{name}/{seed}: {len(fam)} grids C={C:.2f}")
    ok = criterion(3, bad == 0 and uncovered == 0,
                   f"axiom violations {bad}, uncovered balls {uncovered}; " + ", ".join(consts))
    assert ok


def test_criterion_4_sparseness(models, domination, criterion):
    results, _ = domination
    problems, count, eta = [], 0, 1.0
    for key, res in results.items():
        g = models[key[0]]
        cubes = [c.points for c in res.collection.cubes]
        for sp in (sparsify(cubes, g.size), sparsify([c.points for c in res.collection.cubes if c.grid == 0], g.size)):
            problems += sp.verify()
            count += len(sp.families)
            eta = min(eta, sp.eta)
    grid = dyadic_arcs(models["torus64"])
    sp = sparsify([c for k in grid.levels for c in grid.cells(k)], 64)
    problems += sp.verify()
    count += len(sp.families)
    eta = min(eta, sp.eta)
    ok = criterion(4, not problems and Fraction(eta) >= Fraction(1, 2),
                   f"{count} families, min eta {eta:.3f}, {len(problems)} violations")
    assert ok


def test_criterion_5_telescoping(models, criterion):
    lam = np.geomspace(1e-2, 1e2, 1000)
    worst_m = worst_t = 0.0
    rng = np.random.default_rng(0)
    for theta, beta in PAIRS:
        spec = oscillating_multiplier(theta, beta)
        total = sum(spec.piece(j)(lam) for j in range(-12, 13))
        worst_m = max(worst_m, float(np.max(np.abs(total - spec(lam)))))
        for name in ("torus64", "heis4"):
            g = models[name]
            dec = decompose(g, 8.0)
            f = rng.standard_normal(g.size)
            for j in range(-4, 8):
                if j * theta < 0:
                    continue
                sd = spatial_decomposition(dec, spec, j)
                lhs = sum(g.convolve(f, k) for k in sd.kernels.values())
                rhs = dec.apply(spec.piece(j), f)
                scale = max(np.linalg.norm(rhs), 1e-300)
                worst_t = max(worst_t, float(np.linalg.norm(lhs - rhs)) / scale if np.any(rhs) else float(np.linalg.norm(lhs)))
    ok = criterion(5, worst_m <= TELESCOPE_TOL and worst_t <= TELESCOPE_TOL,
                   f"sum of m_j err {worst_m:.2e}, sum of T_j^l err {worst_t:.2e}")
    assert ok


def test_criterion_6_l2_decay(models, criterion):
    spec = oscillating_multiplier(1.0, 2.0)
    out = {}
    for name in ("heis4", "heis10"):
        dec = decompose(models[name], 32.0)
        mu = dec.frequencies[dec.frequencies > 0]
        js = spec.support_indices(float(mu.min()), float(mu.max()))
        slope, usable = l2_decay_slope(dec, spec, js)
        norms = frequency_piece_norms(dec, spec, js)
        gap = max(abs(power_iteration_norm(dec.operator(spec.piece(j)), iters=2000, tol=1e-14) - norms[j])
                  / norms[j] for j in js if norms[j] > 0)
        out[name] = (slope, usable, gap)
    slope, usable, gap = out["heis4"]
    err = abs(slope + 1.0) if np.isfinite(slope) else np.inf
    diag = out["heis10"]
    ok = criterion(6, len(usable) >= MIN_USABLE and err <= SLOPE_TOL and gap <= POWER_ITERATION_TOL,
                   f"Heisenberg n=4: {len(usable)} usable j, slope {slope:.3f}, power-iteration gap {gap:.1e}; "
                   f"n=10: {len(diag[1])} usable j, slope {diag[0]:.3f}")
    assert ok


def test_criterion_7_domination(domination, criterion):
    results, elapsed = domination
    parts, ok = [], elapsed <= 300
    for theta, beta in PAIRS:
        a, b = results[("torus64", theta, beta)], results[("torus128", theta, beta)]
        finite = np.isfinite(a.max_ratio) and np.isfinite(b.max_ratio) and a.max_ratio > 0 and b.max_ratio > 0
        change = max(a.max_ratio / b.max_ratio, b.max_ratio / a.max_ratio) if finite else np.inf
        gap = max(a.dual_gap, b.dual_gap)
        ok &= bool(finite and change <= STABILITY and gap <= DUAL_TOL and a.mode == b.mode == "sparse1")
        parts.append(f"({theta:g},{beta:g}) max {a.max_ratio:.4f}/{b.max_ratio:.4f} x{change:.2f} dual gap {gap:.0e}")
    ok = criterion(7, ok, "; ".join(parts) + f"; {elapsed:.1f} s")
    assert ok


def test_criterion_8_admissibility(criterion):
    total = agree = 0
    for Q in (1, 4):
        for beta in (Fraction(1, 2), Fraction(2), Fraction(3), Fraction(6)):
            for a in range(20):
                for b in range(20):
                    r1 = 1 + Fraction(3 * a, 38)  # [1, 2.5]
                    r2 = 1 + Fraction(4 * b, 19)  # [1, 5]
                    branches = admissible_direct(Fraction(Q), beta, r1, r2)
                    got = admissible_region(Q, beta, r1, r2)
                    total += 1
                    agree += (got in branches) if branches else (got == "inadmissible")
    ok = criterion(8, agree == total, f"{agree}/{total} grid points agree")
    assert ok


def test_criterion_9_weights(models, criterion):
    trivial = []
    for name in ("torus64", "heis4"):
        g = models[name]
        one = np.ones(g.size)
        trivial += [ap_characteristic(g, one, p) for p in (1.5, 2.0, 4.0)]
        trivial += [rh_characteristic(g, one, q) for q in (1.5, 2.0, 4.0)]
    exact_one = all(v == 1.0 for v in trivial)
    nested = True
    rng = np.random.default_rng(1)
    for name in ("torus64", "heis4"):
        g = models[name]
        for _ in range(3):
            w = rng.uniform(0.05, 5.0, g.size)
            vals = [ap_characteristic(g, w, p) for p in (1.25, 1.5, 2.0, 3.0, 5.0, 9.0)]
            nested &= all(a >= b for a, b in zip(vals, vals[1:]))
    g = models["torus64"]
    a0, a95 = power_weight(g, 0.0).ap(2.0), power_weight(g, 0.95).ap(2.0)
    growth = a95 / a0
    ok = criterion(9, exact_one and nested and growth > A2_GROWTH,
                   f"trivial weight exact {exact_one}, nesting {nested}, [w]_A2 a=0 -> 0.95: {a0:.3f} -> {a95:.3f} "
                   f"(x{growth:.2f})")
    assert ok


def test_criterion_10_sparse_bound(models, domination, criterion):
    results, _ = domination
    g = models["torus64"]
    fams = []
    grid = dyadic_arcs(g)
    fams += sparsify([c for k in grid.levels for c in grid.cells(k)], 64).families
    res = results[("torus64", 1.0, 2.0)]
    fams += sparsify([c.points for c in res.collection.cubes], 64).families
    worst_spread, finite, consts = 1.0, True, []
    for fam in fams:
        per_seed = [max(sparse_bound_sweep(fam, g, trials=50, seed=s).values()) for s in range(3)]
        finite &= all(np.isfinite(per_seed))
        worst_spread = max(worst_spread, max(per_seed) / min(per_seed))
        consts.append(max(per_seed))
    ok = criterion(10, finite and worst_spread <= SPARSE_BOUND_STABILITY,
                   f"{len(fams)} families, constants {min(consts):.3f}..{max(consts):.3f}, "
                   f"seed spread x{worst_spread:.3f}")
    assert ok


def test_criterion_11_thresholds(criterion):
    bad = 0
    for Q in (1, 2, 4):
        Q = Fraction(Q)
        for beta in (Fraction(1, 3), Fraction(1), Q, Fraction(3, 2) * Q, 2 * Q):
            th = thresholds(Q, beta)
            if Q <= beta <= 2 * Q:
                bad += th.p_beta != 2 * Q / beta
            else:
                bad += th.s_beta != 1 / (Fraction(1, 2) - beta / (2 * Q))
        # beta = 2k in [Q, 2Q] gives p_k = Q/k; below Q the s-formula with beta = 2k applies
        for k in (Q / 2, 3 * Q / 4, Q):
            bad += riesz_thresholds(Q, k).p_beta != Q / k
        for k in (Q / 8, Q / 4):
            bad += riesz_thresholds(Q, k).s_beta != 1 / (Fraction(1, 2) - k / Q)
        for alpha, beta in ((Fraction(1), Q / 2), (Fraction(2), Q), (Fraction(1, 2), Q / 4)):
            bad += dispersive_thresholds(Q, alpha, beta).p_beta != Q * alpha / beta
    ok = criterion(11, bad == 0, f"{bad} mismatches against the exact rational formulas")
    assert ok


def test_criterion_12_riesz(models, criterion):
    worst = 0.0
    for name in ("torus64", "heis10"):
        dec = decompose(models[name], 8.0)
        mu = np.unique(dec.frequencies)
        quad = np.array([riesz_scalar(float(x), 1.0) for x in mu])
        closed = riesz_closed_form_k1(mu)
        worst = max(worst, float(np.max(np.abs(quad - closed) / np.abs(closed))))
    zeros = [riesz_scalar(0.0, k) for k in (0.5, 1.0, 2.0, 3.5)]
    ok = criterion(12, worst <= RIESZ_TOL and all(z == 1 for z in zeros), f"max rel err {worst:.2e}, value at 0 exactly 1")
    assert ok


def test_criterion_13_dispersive(models, criterion):
    iso = grp = 0.0
    exact = True
    rng = np.random.default_rng(2)
    for name in ("torus64", "heis10"):
        g = models[name]
        dec = decompose(g, 8.0)
        for alpha in (1.0, 2.0):
            f = rng.standard_normal(g.size) + 1j * rng.standard_normal(g.size)
            u = dispersive_apply(dec, alpha, 0.9, f)
            iso = max(iso, abs(np.linalg.norm(u) - np.linalg.norm(f)) / np.linalg.norm(f))
            us = dispersive_apply(dec, alpha, 0.4, u)
            grp = max(grp, np.linalg.norm(us - dispersive_apply(dec, alpha, 1.3, f)) / np.linalg.norm(f))
            exact &= np.array_equal(dispersive_apply(dec, alpha, 0.0, f), f)
    ok = criterion(13, iso <= ISOMETRY_TOL and grp <= GROUP_TOL and exact,
                   f"isometry err {iso:.1e}, group err {grp:.1e}, t=0 exact {exact}")
    assert ok


def test_criterion_14_wall_clock(session_start, criterion):
    elapsed = time.perf_counter() - session_start
    ok = criterion(14, elapsed <= WALL_CLOCK, f"session wall clock {elapsed:.1f} s (limit {WALL_CLOCK} s)")
    assert ok
