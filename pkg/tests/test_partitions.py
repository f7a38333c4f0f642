import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resilience_lab import partitions as pt
from resilience_lab import sampler


# --- oracles -------------------------------------------------------------------


def blocks_by_membership(alpha, v, w):
    """Element k*v + j belongs to block (j + alpha_k) mod v."""
    blocks = [set() for _ in range(v)]
    for k in range(w):
        for j in range(v):
            blocks[(j + alpha[k]) % v].add(k * v + j)
    return blocks


def design_oracle(fam):
    """Max cross overlap and, per k, worst fraction over (alpha, i, j) of partners overlapping > w - k."""
    parts = [[set(b) for b in fam.partition(a).blocks] for a in range(fam.u)]
    u, v, w = fam.u, fam.v, fam.w
    max_ov = 0
    worst = {k: Fraction(0) for k in range(w + 1)}
    for a in range(u):
        for i in range(v):
            for j in range(v):
                ovs = [len(parts[a][i] & parts[b][j]) for b in range(u) if b != a]
                max_ov = max([max_ov, *ovs])
                for k in range(w + 1):
                    if u > 1:
                        worst[k] = max(worst[k], Fraction(sum(o > w - k for o in ovs), u - 1))
    return w - max_ov, worst


def load_stat_oracle(fam, Q, j):
    Q = set(Q)
    total = 0
    for a in range(fam.u):
        x = len(Q & set(fam.partition(a).blocks[j]))
        total += 2**x if x else 0
    return Fraction(total, fam.u)


# --- partitions ------------------------------------------------------------------


def test_worked_example():
    p = pt.partition_from_string((1, 2), 3, 2)
    assert [set(b) for b in p.blocks] == [{2, 4}, {0, 5}, {1, 3}]


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.data())
def test_partition_matches_membership_oracle(v, w, data):
    alpha = data.draw(st.lists(st.integers(0, v - 1), min_size=w, max_size=w))
    got = [set(b) for b in pt.partition_from_string(alpha, v, w).blocks]
    assert got == blocks_by_membership(alpha, v, w)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_overlap_profile_gives_max_intersection(v, w, data):
    a = data.draw(st.lists(st.integers(0, v - 1), min_size=w, max_size=w))
    b = data.draw(st.lists(st.integers(0, v - 1), min_size=w, max_size=w))
    A = [set(x) for x in pt.partition_from_string(a, v, w).blocks]
    B = [set(x) for x in pt.partition_from_string(b, v, w).blocks]
    materialised = max(len(x & y) for x in A for y in B)
    assert max(pt.overlap_profile(a, b, v).values()) == materialised
    assert sum(pt.overlap_profile(a, b, v).values()) == w


def test_partition_validation():
    with pytest.raises(pt.PartitionError):
        pt.partition_from_string((0, 3), 3, 2)
    with pytest.raises(pt.PartitionError):
        pt.partition_from_string((0,), 3, 2)
    with pytest.raises(pt.PartitionError):
        pt.Partition(2, 2, ((0, 1), (0, 3)))


# --- families ------------------------------------------------------------------


def test_rs_family_size_and_errors():
    fam = pt.rs_family(7, 4, 2)
    assert (fam.u, fam.n) == (49, 28)
    assert fam.block_array().shape == (49, 7, 4)
    with pytest.raises(pt.PartitionError, match="not prime"):
        pt.rs_family(4, 2, 1)
    with pytest.raises(pt.PartitionError):
        pt.rs_family(5, 5, 1)  # w must stay below v
    with pytest.raises(pt.PartitionError):
        pt.rs_family(5, 2, 3)


def test_rs_family_distinct_partitions():
    fam = pt.rs_family(5, 3, 2)
    keys = {tuple(sorted(map(tuple, (sorted(b) for b in fam.partition(a).blocks)))) for a in range(fam.u)}
    assert len(keys) == fam.u


@pytest.mark.parametrize("v,w,ell", [(3, 2, 1), (5, 2, 1), (5, 3, 2), (5, 4, 3), (7, 3, 1)])
def test_design_profile_matches_oracle(v, w, ell):
    fam = pt.rs_family(v, w, ell)
    d, worst = design_oracle(fam)
    prof = pt.design_profile(fam)
    assert prof.d_achieved == d >= w - ell
    assert prof.delta_by_k == worst
    assert prof.exhaustive and prof.pairs_checked == fam.u * (fam.u - 1)


def test_design_on_random_explicit_families():
    rng = np.random.default_rng(0)
    for _ in range(10):
        v, w, u = int(rng.integers(2, 5)), int(rng.integers(1, 4)), int(rng.integers(2, 6))
        fam = pt.explicit_family(rng.integers(0, v, size=(u, w)).tolist(), v, w)
        d, worst = design_oracle(fam)
        prof = pt.design_profile(fam)
        assert prof.d_achieved == d and prof.delta_by_k == worst


def test_duplicate_strings_fail_the_design_check():
    fam = pt.explicit_family([[0, 1], [0, 1]], 3, 2)
    rep = pt.check_design(fam, 1)
    assert rep.d_achieved == 0 and not rep.passed


def test_single_partition_is_vacuously_a_design():
    rep = pt.check_design(pt.explicit_family([[0, 1]], 3, 2), 2, 2, 0)
    assert rep.passed and rep.pairs_checked == 0


def test_rs_7_4_2_is_a_2_design():
    rep = pt.check_design(pt.rs_family(7, 4, 2), 2)
    assert rep.passed and rep.pairs_checked == 49 * 48


def test_design_k_and_delta():
    fam = pt.rs_family(5, 4, 2)
    d, worst = design_oracle(fam)
    assert pt.check_design(fam, d, 3, worst[3]).passed
    if worst[3] > 0:
        assert not pt.check_design(fam, d, 3, worst[3] / 2).passed


# --- load balancing ------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_load_balance_stat_matches_oracle(data):
    fam = pt.rs_family(5, 3, 2)
    Q = data.draw(st.sets(st.integers(0, fam.n - 1), min_size=1, max_size=5))
    j = data.draw(st.integers(0, fam.v - 1))
    assert pt.load_balance_stat(fam, Q, j) == load_stat_oracle(fam, Q, j)


def test_rs_load_balance_within_closed_form_tau():
    fam = pt.rs_family(5, 3, 3)
    tau = pt.rs_tau_bound(2, 5, 3, 3)
    rep = pt.check_load_balance(fam, 2, tau)
    assert rep.passed and rep.exhaustive
    assert rep.tau_measured <= Fraction(tau)


def test_load_balance_exhaustive_is_the_max():
    fam = pt.rs_family(3, 2, 2)
    rep = pt.check_load_balance(fam, 2)
    best = max(
        load_stat_oracle(fam, Q, j) * fam.v / len(Q)
        for s in (1, 2)
        for Q in itertools.combinations(range(fam.n), s)
        for j in range(fam.v)
    )
    assert rep.tau_measured == best
    greedy = pt.check_load_balance(fam, 2, strategy="greedy")
    assert greedy.tau_measured <= best and not greedy.exhaustive


def test_random_probe_needs_seed():
    with pytest.raises(pt.PartitionError):
        pt.check_load_balance(pt.rs_family(3, 2, 1), 2, strategy="random")
    a = pt.check_load_balance(pt.rs_family(3, 2, 1), 2, strategy="random", rng_seed=3, probes=50)
    b = pt.check_load_balance(pt.rs_family(3, 2, 1), 2, strategy="random", rng_seed=3, probes=50)
    assert a.tau_measured == b.tau_measured


# --- sampler family --------------------------------------------------------------


def test_sampler_family_size_and_design():
    ext = sampler.lhl_extractor(13, 3, 4, 0.5, seed=1)
    fam = pt.sampler_family(sampler.SamplerConfig(13, 4, 2, ext, c=1))
    assert fam.u == 13 * 3**2
    assert pt.check_design(fam, 0, 0, Fraction(1, 9)).passed


def test_sampler_family_nontrivial_design():
    # v=5, D=3, M=1, c=1, w=5, l=1: m = w - 2c - l = 2, target d = min(c, m) = 1.
    ext = sampler.lhl_extractor(5, 3, 1, 0.5)
    fam = pt.sampler_family(sampler.SamplerConfig(5, 5, 1, ext, c=1))
    rep = pt.check_design(fam, 1, 2, Fraction(1, 3))
    assert rep.passed and rep.d_achieved >= 1
    assert rep.delta_measured == Fraction(1, 7)


def test_sampler_family_constraints():
    ext = sampler.lhl_extractor(13, 3, 4, 0.5, seed=1)
    with pytest.raises(pt.PartitionError):
        pt.sampler_family(sampler.SamplerConfig(13, 3, 2, ext, c=1))  # 2c < w fails
    with pytest.raises((pt.PartitionError, sampler.SamplerError)):
        pt.sampler_family(sampler.SamplerConfig(11, 4, 2, ext, c=1))  # D*M > v
