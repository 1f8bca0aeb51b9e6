from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg

from stratified_sparse.groups import build_group
from stratified_sparse.multipliers import oscillating_multiplier
from stratified_sparse.norms import INF
from stratified_sparse.sparse import SparseFamily
from stratified_sparse.weights import (Weight, ap_characteristic, ball_averages, sparse_bound_check, sparse_bound_exponent,
                                       sparse_bound_sweep, dispersive_thresholds, dual_weight, power_weight,
                                       power_weight_in_class, quantitative_suite, rh_characteristic,
                                       riesz_thresholds, threshold_mode, thresholds, weighted_opnorm)

from oracles import ap_brute, ball_family, rh_brute


def test_trivial_weight_characteristics_are_one(heis4):
    w = np.ones(heis4.size)
    for p in (1.5, 2.0, 4.0):
        assert ap_characteristic(heis4, w, p) == pytest.approx(1.0)
    assert rh_characteristic(heis4, w, 2.0) == pytest.approx(1.0)


def test_hand_computed_a2_characteristic():
    g = build_group("torus:d=1,n=8")
    w = np.ones(8)
    w[0] = 2.0
    assert ap_characteristic(g, w, 2.0) == pytest.approx(10 / 9, rel=1e-12)


@pytest.mark.parametrize("model", ["torus:d=1,n=16", "heisenberg:n=4"])
def test_characteristics_against_brute_force(model):
    g = build_group(model)
    w = np.random.default_rng(5).uniform(0.1, 3.0, g.size)
    D = g.distance
    for p in (1.5, 2.0, 3.0):
        assert ap_characteristic(g, w, p) == pytest.approx(max(1.0, ap_brute(D, w, p)), rel=1e-10)
    for q in (1.5, 4.0):
        assert rh_characteristic(g, w, q) == pytest.approx(max(1.0, rh_brute(D, w, q)), rel=1e-10)


def test_ball_averages_against_loops(torus16):
    v = np.arange(16.0)
    avg = ball_averages(torus16, v)
    D = torus16.distance
    for z in (0, 5):
        for i, r in enumerate(torus16.norm_values):
            assert avg[z, i] == pytest.approx(v[D[z] <= r].mean())
    assert len(list(ball_family(D[:1]))) == len(torus16.norm_values)


def test_ap_classes_are_nested(heis6):
    w = power_weight(heis6, 0.7)
    vals = [w.ap(p) for p in (1.5, 2.0, 3.0, 6.0)]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_scale_invariance_and_duality(heis4):
    w = np.random.default_rng(6).uniform(0.5, 2.0, heis4.size)
    p = 3.0
    assert ap_characteristic(heis4, 7.5 * w, p) == pytest.approx(ap_characteristic(heis4, w, p))
    # [w]_{A_p}^{1/(p-1)} = [w^{1-p'}]_{A_p'}
    lhs = ap_characteristic(heis4, w, p) ** (1 / (p - 1))
    rhs = ap_characteristic(heis4, dual_weight(w, p), p / (p - 1))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_invalid_weights_and_exponents(torus16):
    with pytest.raises(ValueError):
        Weight(torus16, np.zeros(16))
    with pytest.raises(ValueError):
        Weight(torus16, np.ones(3))
    with pytest.raises(ValueError):
        ap_characteristic(torus16, np.ones(16), 1.0)
    with pytest.raises(ValueError):
        rh_characteristic(torus16, np.ones(16), 1.0)


def test_rh_close_to_one_for_nearly_trivial_q(torus64):
    assert power_weight(torus64, 0.5).rh(1.001) == pytest.approx(1.0, abs=2e-3)


def test_weighted_l2_norm_against_generalized_eigenproblem(dec_heis6, heis6):
    spec = oscillating_multiplier(1.0, 2.0)
    w = power_weight(heis6, 0.5).values
    nb = weighted_opnorm(dec_heis6, spec.m, 2.0, w)
    T = dec_heis6.operator(spec.m)
    W = np.diag(w)
    top = scipy.linalg.eigh(T.conj().T @ W @ T, W, eigvals_only=True)[-1]
    assert nb.exact and nb.lower == pytest.approx(np.sqrt(top), rel=1e-8)


def test_unweighted_l2_norm_is_sup_of_symbol(dec_torus64):
    spec = oscillating_multiplier(1.0, 2.0)
    nb = weighted_opnorm(dec_torus64, spec.m, 2.0)
    assert nb.lower == pytest.approx(np.max(np.abs(spec.m(dec_torus64.frequencies))))


def test_weighted_bounds_bracket(dec_torus64, torus64):
    spec = oscillating_multiplier(1.0, 2.0)
    w = power_weight(torus64, -0.4)
    for p in (1.0, 1.5, 3.0, INF):
        nb = weighted_opnorm(dec_torus64, spec.m, p, w, trials=40)
        assert 0 < nb.lower <= nb.upper * (1 + 1e-12) and not nb.exact


def test_sparse_bound_exponent_examples():
    assert sparse_bound_exponent(1, 4, 2) == pytest.approx(1.5)
    assert sparse_bound_exponent(1, 2, 1.5) == pytest.approx(2.0)
    assert sparse_bound_exponent(1, INF, 3) == pytest.approx(1.0)
    assert sparse_bound_exponent(1, INF, 1.5) == pytest.approx(2.0)


def test_sparse_bound_single_cube_holder(torus16):
    # one cube covering G with w = 1 reduces the sparse bound to Hoelder's inequality
    S = SparseFamily([np.arange(16)], [np.arange(16)], 16)
    w = Weight(torus16, np.ones(16))
    rng = np.random.default_rng(7)
    for _ in range(20):
        f, g = rng.uniform(0, 1, 16), rng.uniform(0, 1, 16)
        assert sparse_bound_check(S, f, g, 1, 4, 2, w) <= 1 + 1e-12
    with pytest.raises(ValueError):
        sparse_bound_check(S, f, g, 2, 4, 2, w)


def test_sparse_bound_sweep_keys(torus16):
    S = SparseFamily([np.arange(16), np.arange(8)], [np.arange(8, 16), np.arange(8)], 16)
    out = sparse_bound_sweep(S, torus16, trials=5)
    assert len(out) == 9 and all(np.isfinite(v) and v > 0 for v in out.values())


def test_threshold_modes():
    assert threshold_mode(4, 8) == "i" and threshold_mode(4, 4) == "ii" and threshold_mode(4, 1) == "iii"
    with pytest.raises(ValueError):
        threshold_mode(4, 9)
    with pytest.raises(ValueError):
        threshold_mode(4, 0)
    assert thresholds(4, 4).p_beta == 2
    assert thresholds(4, 2).s_beta == 4
    assert thresholds(1, 2).p_beta == 1


def test_riesz_and_dispersive_thresholds():
    # order k acts as beta = 2k: p_k = Q / k in mode ii, 1/s_k = 1/2 - k/Q in mode iii
    assert riesz_thresholds(4, 2).p_beta == 2
    assert riesz_thresholds(4, 1).p_beta is None
    assert riesz_thresholds(4, 1).s_beta == 4
    assert riesz_thresholds(4, Fraction(1, 2)).s_beta == Fraction(8, 3)
    # dispersive flow acts as beta_eff = 2 beta / alpha: p = Q alpha / beta
    th = dispersive_thresholds(4, 2, 1)
    assert th.mode == "iii" and th.s_beta == Fraction(8, 3)
    assert dispersive_thresholds(4, 1, 3).p_beta == Fraction(4, 3)
    assert dispersive_thresholds(1, 1, 1).mode == "i"


def test_power_weight_class_membership():
    assert power_weight_in_class(1, 0.5, 2)
    assert not power_weight_in_class(1, 1.0, 2)
    assert not power_weight_in_class(1, -1.0, 2)
    assert not power_weight_in_class(1, -0.6, 2, 2)


def test_quantitative_suite_modes(dec_torus64_s8):
    for beta, mode in ((2, "i"), (1.5, "ii"), (0.5, "iii")):
        spec = oscillating_multiplier(1.0, beta)
        rep = quantitative_suite(dec_torus64_s8, spec.m, beta, mode, trials=10)
        assert rep.cells and rep.passed
    with pytest.raises(ValueError):
        quantitative_suite(dec_torus64_s8, spec.m, 0.5, "i")
