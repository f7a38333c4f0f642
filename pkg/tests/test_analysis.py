import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resilience_lab import analysis as an
from resilience_lab import partitions as pt
from resilience_lab import resilient_fn as rf


def sym_oracle(a, values):
    return sum(math.prod(c) for c in itertools.combinations(values, a))


def none_oracle(n, sets, p):
    total = Fraction(0)
    for x in itertools.product((0, 1), repeat=n):
        if not any(all(x[i] for i in s) for s in sets):
            k = sum(x)
            total += p**k * (1 - p) ** (n - k)
    return total


def binomial_moment_oracle(v, p, k, r):
    """Sum over all 2^v outcomes of C(#ones, k)^r times their probability."""
    total = Fraction(0)
    for x in itertools.product((0, 1), repeat=v):
        t = sum(x)
        total += p**t * (1 - p) ** (v - t) * math.comb(t, k) ** r
    return total


# --- symmetric polynomials and Janson ------------------------------------------


def test_sym_poly_examples():
    assert an.sym_poly(3, [1, 2, 3]) == 6
    assert an.sym_poly(2, [1, 2, 3]) == 11
    assert an.sym_poly(0, [5, 7]) == 1
    with pytest.raises(an.AnalysisError):
        an.sym_poly(3, [1, 2])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.fractions(min_value=0, max_value=3, max_denominator=7), max_size=6), st.integers(0, 6))
def test_sym_poly_matches_oracle(values, a):
    if a <= len(values):
        assert an.sym_poly(a, values) == sym_oracle(a, values)


def test_janson_disjoint_sets_is_exact():
    sys = an.SetSystem(6, (frozenset({0, 1}), frozenset({2, 3, 4})))
    res = an.janson_bounds(sys)
    exact = an.none_probability(sys)
    assert res.delta == 0 and res.lower == pytest.approx(float(exact)) == pytest.approx(res.upper)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sets(st.integers(0, 6), min_size=1, max_size=3), min_size=1, max_size=5))
def test_janson_sandwich(sets):
    sys = an.SetSystem(7, tuple(frozenset(s) for s in sets))
    exact = an.none_probability(sys)
    assert exact == none_oracle(7, sys.sets, Fraction(1, 2))
    res = an.janson_bounds(sys)
    assert res.lower <= float(exact) * (1 + 1e-12)
    assert float(exact) <= res.upper * (1 + 1e-12)


def test_set_system_validation():
    with pytest.raises(an.AnalysisError):
        an.SetSystem(3, (frozenset(),))
    with pytest.raises(an.AnalysisError):
        an.SetSystem(3, (frozenset({3}),))


# --- bias chain --------------------------------------------------------------


def test_theta_exact():
    assert an.theta_exact(3, 2) == Fraction(27, 64)


def test_bias_error_bound_dominates_small_instances():
    for v, w, ell in [(3, 1, 1), (5, 1, 1), (5, 2, 1), (3, 2, 2), (7, 1, 1)]:
        fam = pt.rs_family(v, w, ell)
        f = rf.ResilientFunction(fam)
        gap = abs(rf.exact_bias(f) - rf.bias_formula_exact(fam.u, v, w))
        rep = an.family_bias_bound(fam, witness=gap)
        assert rep.ok and rep.bound_value <= 1


def test_bias_error_bound_nonvacuous_case():
    fam = pt.rs_family(11, 1, 1)
    f = rf.ResilientFunction(fam)
    gap = abs(rf.exact_bias(f) - rf.bias_formula_exact(11, 11, 1))
    rep = an.family_bias_bound(fam, witness=gap)
    assert rep.ok and rep.bound_value < 0.02


def test_bias_error_bound_details():
    rep = an.bias_error_bound(3, 3, 2, 1, 1, 0)
    assert rep.bound_value == 1.0
    assert rep.details["constants"]["note"].startswith("unproven")
    assert rep.details["bias_formula"] == pytest.approx(rf.bias_formula(3, 3, 2))


def test_gamma_reduces_to_one_at_depth_one():
    assert float(an.gamma_a(1, 10, 3, 1, 1, Fraction(1, 2))) == pytest.approx(1 + 100 * 0.5)
    assert float(an.gamma_a(1, 10, 3, 1, 1, 0)) == 1.0


def test_bias_sandwich_small():
    f = rf.ResilientFunction(pt.rs_family(3, 2, 2))
    exact, rows, intervals = an.bias_sandwich(f, depth=4)
    assert exact == rf.exact_bias(f)
    assert all(r.holds_exact and r.holds_janson for r in rows)
    for lo, hi in intervals:
        assert lo <= float(exact) * (1 + 1e-12) and float(exact) <= hi * (1 + 1e-12)


def test_symmetric_moments_first_moment():
    f = rf.ResilientFunction(pt.rs_family(3, 2, 1))
    m = an.symmetric_moments(f, 2)
    assert m[0] == 1
    assert m[1] == 3 * an.theta_exact(3, 2)  # each tribe fails with probability theta


def test_bonferroni_bias_first_terms():
    fam = pt.rs_family(5, 2, 1)
    est, err = an.bonferroni_bias(fam, 2)
    th = an.theta_exact(5, 2)
    assert est == 1 - 5 * th
    assert err >= 0


# --- influence bounds ----------------------------------------------------------


def test_influence_bound_formula():
    assert an.influence_bound(3, 3, 2, 1, 2) == pytest.approx(3 * 0.75**2 * 2 * 0.25 * 1)
    assert an.kwise_influence_bound(3, 3, 2, 1, 2, Fraction(1, 100)) == pytest.approx(
        an.influence_bound(3, 3, 2, 1, 2) + 2 * 3 * 3 / 100
    )


def test_kwise_bias_k_requirements():
    for r, w, v, eps in [(1, 2, 3, 0.5), (3, 2, 5, 0.1), (2, 4, 100, 0.01)]:
        k = an.kwise_bias_k(r, w, v, eps)
        assert k % 2 == 0
        assert k >= 3 * r * (r + math.log2(1 / eps)) - 1e-9
        assert k >= 2 * math.e**2 * v * 2.0**-w - 1e-9
        assert k > 2 * r
        assert an.kwise_bias_requirement(r, w, v, eps) == k * w * r
    with pytest.raises(an.AnalysisError):
        an.kwise_bias_k(1, 2, 3, 1.0)


# --- binomial moments ----------------------------------------------------------


def test_binomial_moment_example():
    # r = 1 is a factorial moment: E[C(T, k)] = C(v, k) p^k exactly.
    assert an.binomial_moment(4, Fraction(1, 100), 2, 1) == 6 * Fraction(1, 100) ** 2
    assert an.binomial_moment(4, Fraction(1, 100), 5, 3) == 0


@pytest.mark.parametrize("v,k,r", [(6, 2, 1), (6, 3, 2), (7, 1, 3), (5, 5, 4)])
def test_binomial_moment_matches_oracle(v, k, r):
    p = Fraction(1, 7)
    assert an.binomial_moment(v, p, k, r) == binomial_moment_oracle(v, p, k, r)


def test_binomial_moment_decreasing_in_k():
    vals = [an.binomial_moment(20, Fraction(1, 100), k, 3) for k in range(1, 21)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_binomial_moment_grid_counterexample_is_real():
    # The claimed 2^-k ceiling fails just above the threshold at r = 4; see the ledger.
    val = an.binomial_moment(37, Fraction(1, 100), 6, 4)
    direct = sum(math.comb(37, t) * 0.01**t * 0.99 ** (37 - t) * math.comb(t, 6) ** 4 for t in range(6, 38))
    assert float(val) == pytest.approx(direct, rel=1e-9)
    assert val > Fraction(1, 64)


def test_binomial_moment_rejects_large_p():
    with pytest.raises(an.AnalysisError):
        an.binomial_moment(5, Fraction(1, 2), 1, 1)


# --- facts and parameters ------------------------------------------------------


def test_fact_checks_pass():
    rep = an.fact_checks()
    assert rep["pass"]


def test_bias_interval_chain_holds():
    sol = an.param_solve(8, "rs", ell=1)
    rep = an.bias_interval_chain(sol.u, sol.v, 8)
    assert rep["holds"] and rep["lower"] <= rep["value"] <= rep["upper"]
    assert rep["one_plus_theta_u"] <= 2


@pytest.mark.parametrize("w,kind,ell", [(6, "rs", 1), (10, "rs", 2), (8, "main", 2)])
def test_param_solve(w, kind, ell):
    sol = an.param_solve(w, kind, ell=ell)
    from resilience_lab.field_codes import is_prime

    assert is_prime(sol.v) and sol.v > sol.x_star
    assert sol.residual >= 0
    assert abs(sol.root_residual) <= 1e-6 * sol.x_star
    assert 0 < sol.bias < 1


def test_param_solve_errors():
    with pytest.raises(an.AnalysisError):
        an.param_solve(1)
    with pytest.raises(an.AnalysisError):
        an.param_solve(5, "other")


# --- read-once CNFs ------------------------------------------------------------


def test_rcnf_gap_vanishes_with_enough_independence():
    cnf = [[1, 2], [-3, 4, 5], [6]]
    assert an.rcnf_kwise_gap(cnf, 6).gap == 0
    # a single clause on t variables is fooled exactly
    assert an.rcnf_kwise_gap([[1, -2, 3]], 3, n_vars=6).gap == 0


def test_rcnf_uniform_probability():
    rep = an.rcnf_kwise_gap([[1, 2], [3]], 1)
    assert rep.uniform == Fraction(3, 4) * Fraction(1, 2)


def test_rcnf_rejects_repeated_variables():
    with pytest.raises(an.AnalysisError):
        an.rcnf_kwise_gap([[1, 2], [-2]], 2)


def test_kwise_influence_bound_dominates():
    fam = pt.rs_family(5, 2, 1)
    f = rf.ResilientFunction(fam)
    tau = pt.check_load_balance(fam, 2).tau_measured
    for Q in ([0, 1], [0, 5], [3, 9]):
        for t in (2, 3):
            val = rf.influence_kwise_exact(f, Q, t).value
            eps = an.kwise_influence_eps(f, Q, t)
            assert val <= an.kwise_influence_bound(fam.u, 5, 2, 2, tau, eps)


def test_kwise_bias_gap_zero_at_full_independence():
    f = rf.ResilientFunction(pt.rs_family(3, 2, 1))
    gap, tw, _ = an.kwise_bias_gap(f, f.n)
    assert gap == 0 and tw == rf.exact_bias(f)
