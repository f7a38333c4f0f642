import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resilience_lab import field_codes as fc


def trial_division_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def test_is_prime_matches_trial_division_below_5000():
    assert [n for n in range(5000) if fc.is_prime(n)] == [n for n in range(5000) if trial_division_prime(n)]


@pytest.mark.parametrize("n", [561, 1105, 1729, 2465, 3215031751, 2**32 + 1, (2**31 - 1) * (2**61 - 1)])
def test_is_prime_rejects_carmichael_and_pseudoprimes(n):
    assert not fc.is_prime(n)


@pytest.mark.parametrize("n", [2**31 - 1, 2**61 - 1, 2**64 - 59])
def test_is_prime_accepts_large_primes(n):
    assert fc.is_prime(n)


def test_prime_modulus_rejects_composites():
    with pytest.raises(fc.FieldError, match="not prime"):
        fc.PrimeModulus(4)
    assert int(fc.PrimeModulus(7)) == 7


def test_next_prime():
    assert int(fc.next_prime(14)) == 17
    assert int(fc.next_prime(17)) == 17
    assert int(fc.next_prime(1)) == 2
    with pytest.raises(OverflowError):
        fc.next_prime(2**64 - 58)


def test_rs_codeword_hand_values():
    # 1 + 2X over GF(5) at X = 0, 1, 2
    assert fc.rs_codeword([1, 2], 3, 5).symbols == (1, 3, 0)


def test_shift_free_codeword_hand_values():
    # X over GF(5) at X = 1, 2, 3 and 2X + 3X^2 at X = 1, 2
    assert fc.shift_free_codeword([1], 3, 5).symbols == (1, 2, 3)
    assert fc.shift_free_codeword([2, 3], 2, 5).symbols == (0, (4 + 12) % 5)


def test_codeword_parameter_errors():
    with pytest.raises(fc.FieldError):
        fc.rs_codeword([1, 2, 3], 2, 5)
    with pytest.raises(fc.FieldError):
        fc.rs_codeword([1], 6, 5)
    with pytest.raises(fc.FieldError):
        fc.shift_free_codeword([1], 5, 5)
    with pytest.raises(fc.FieldError):
        fc.rs_codeword([7], 2, 5)


def test_shift_hamming_by_hand():
    assert fc.shift_hamming((0, 1, 2), (1, 2, 3), 5) == 0
    assert fc.shift_hamming((0, 0, 0), (1, 2, 3), 5) == 2
    assert fc.hamming((0, 1), (0, 2)) == 1


primes = st.sampled_from([5, 7, 11])


@settings(max_examples=60, deadline=None)
@given(p=primes, data=st.data())
def test_shift_free_distance(p, data):
    m = data.draw(st.integers(1, p - 1))
    ell = data.draw(st.integers(1, m))
    s1 = data.draw(st.lists(st.integers(0, p - 1), min_size=ell, max_size=ell))
    s2 = data.draw(st.lists(st.integers(0, p - 1), min_size=ell, max_size=ell))
    a, b = fc.shift_free_codeword(s1, m, p), fc.shift_free_codeword(s2, m, p)
    if s1 != s2:
        assert fc.shift_hamming(a, b, p) >= m - ell


@settings(max_examples=60, deadline=None)
@given(p=primes, data=st.data())
def test_rs_distance(p, data):
    m = data.draw(st.integers(1, p))
    ell = data.draw(st.integers(1, m))
    s1 = data.draw(st.lists(st.integers(0, p - 1), min_size=ell, max_size=ell))
    s2 = data.draw(st.lists(st.integers(0, p - 1), min_size=ell, max_size=ell))
    if s1 != s2:
        assert fc.hamming(fc.rs_codeword(s1, m, p), fc.rs_codeword(s2, m, p)) >= m - ell + 1


@pytest.mark.parametrize("shift_free", [False, True])
def test_rs_table_rows_match_codewords(shift_free):
    p, ell, m = 5, 2, 4
    table = fc.rs_table(ell, m, p, shift_free=shift_free)
    assert table.shape == (p**ell, m)
    enc = fc.shift_free_codeword if shift_free else fc.rs_codeword
    for r in range(p**ell):
        seed = [(r // p**i) % p for i in range(ell)]
        assert tuple(table[r]) == enc(seed, m, p).symbols


@pytest.mark.parametrize("shift_free", [False, True])
def test_rs_table_is_ell_wise_uniform(shift_free):
    p, ell, m = 5, 2, 4
    table = fc.rs_table(ell, m, p, shift_free=shift_free)
    for cols in itertools.combinations(range(m), ell):
        counts = Counter(map(tuple, table[:, cols]))
        assert len(counts) == p**ell and set(counts.values()) == {1}


@pytest.mark.parametrize("e", [1, 2, 3, 4, 5])
def test_gf2e_is_a_field(e):
    F = fc.GF2e(e)
    q = F.order
    els = np.arange(q)
    prod = F.mul_array(els[:, None], els[None, :])
    for a in range(q):
        for b in range(q):
            assert prod[a, b] == F.mul(a, b) == F.mul(b, a)
    for a in range(1, q):
        assert sorted(prod[a, 1:].tolist()) == list(range(1, q))  # no zero divisors


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))
def test_gf256_associative_and_distributive(a, b, c):
    F = fc.GF2e(8)
    assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
    assert F.mul(a, b ^ c) == F.mul(a, b) ^ F.mul(a, c)


def test_unsupported_field():
    with pytest.raises(fc.FieldError):
        fc.GF2e(40)


@pytest.mark.parametrize("t,n", [(1, 5), (2, 6), (3, 6), (2, 9)])
def test_kwise_bits_table_is_t_wise_uniform(t, n):
    table = fc.kwise_bits_table(t, n)
    for cols in itertools.combinations(range(n), t):
        counts = Counter(map(tuple, table[:, cols]))
        assert len(counts) == 2**t and len(set(counts.values())) == 1


def test_kwise_bits_table_matches_generator():
    t, n = 2, 6
    q = fc.binary_field_for(n).order
    table = fc.kwise_bits_table(t, n)
    e = fc.binary_field_for(n).e
    for r in range(0, table.shape[0], 7):
        coeffs = [(r >> (i * e)) & (q - 1) for i in range(t)]
        assert tuple(table[r]) == fc.kwise_bits(fc.KWiseBitSeed(t, n, coeffs))


@pytest.mark.parametrize("t,n", [(2, 6), (3, 7), (5, 5)])
def test_kwise_support_carries_the_same_distribution(t, n):
    full = Counter(map(tuple, fc.kwise_bits_table(t, n)))
    support = Counter(map(tuple, fc.kwise_bits_support(t, n)))
    assert set(full) == set(support)
    assert set(support.values()) == {1}
    assert len(set(full.values())) == 1


def test_kwise_seed_validation():
    with pytest.raises(fc.FieldError):
        fc.KWiseBitSeed(2, 4, (1,))
    with pytest.raises(fc.FieldError):
        fc.KWiseBitSeed(1, 4, (8,))
