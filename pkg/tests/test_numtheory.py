import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asl2lab import numtheory as nt
from oracles import moebius, totient


def test_sieve_small_values():
    s = nt.build_sieve(100)
    assert s.phi[12] == 4
    assert s.mu[30] == -1
    assert s.mu[12] == 0
    assert s.mu[1] == 1
    assert list(s.primes[:10]) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_sieve_against_oracles():
    s = nt.build_sieve(2000)
    for n in range(1, 2001):
        assert s.phi[n] == totient(n)
        assert s.mu[n] == moebius(n)


def test_prime_count_one_million():
    assert nt.build_sieve(10**6).primes.size == 78498


def test_sieve_guards():
    with pytest.raises(ValueError):
        nt.build_sieve(0)
    with pytest.raises(ValueError):
        nt.build_sieve(nt.SIEVE_LIMIT_MAX + 1)


def test_sieve_tables_read_only():
    s = nt.build_sieve(50)
    with pytest.raises(ValueError):
        s.phi[3] = 0


def test_omega():
    s = nt.build_sieve(1000)
    assert s.omega(1) == 0
    assert s.omega(360) == 3
    assert nt.omega(2 * 3 * 5 * 7) == 4


def test_full_exp_sum_examples():
    assert nt.full_exp_sum(5, 0) == pytest.approx(1)
    assert abs(nt.full_exp_sum(5, 1)) < 1e-15
    assert nt.full_exp_sum(6, 12) == pytest.approx(1)


def test_ramanujan_examples():
    # S(q, 0) = 1 and S(p, 1) = -1/(p-1) for prime p
    assert nt.ramanujan_sum(12, 0) == 1
    assert nt.ramanujan_sum(7, 1) == pytest.approx(-1 / 6)
    assert nt.ramanujan_sum(12, 1) == 0
    assert nt.ramanujan_sum(1, 5) == 1


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 120), st.integers(-500, 500))
def test_ramanujan_closed_form_matches_direct(q, k):
    assert abs(nt.direct_ramanujan_sum(q, k) - nt.ramanujan_sum(q, k)) < 1e-12


def test_row_sum_closed_form():
    for q in range(1, 400):
        assert nt.abs_S_row_sum(q) == pytest.approx(nt.abs_S_row_sum_direct(q), abs=1e-9)
        assert nt.abs_S_row_sum(q) == 2 ** nt.omega(q)


def test_e_range_reduction():
    # the naive exp loses ~1e-6 at x ~ 1e10; the reduced version does not
    x = 1e10 + 0.25
    assert abs(nt.e(x) - 1j) < 1e-5
    assert abs(nt.e_rational(10**15 + 1, 4) - 1j) < 1e-15
    assert abs(nt.e(0.5) + 1) < 1e-15


def test_divisors():
    assert nt.divisors(12) == [1, 2, 3, 4, 6, 12]
    assert nt.divisors(1) == [1]


def test_coprime_residues_examples():
    assert list(nt.coprime_residues(6, 0, 1)) == [1, 5]
    assert list(nt.coprime_residues(6, 0, 1, closed=True)) == [1, 5]
    assert list(nt.coprime_residues(1, 0, 2)) == [0, 1]
    assert list(nt.coprime_residues(1, 0, 2, closed=True)) == [0, 1, 2]
    assert list(nt.coprime_residues(5, -0.5, 0.5)) == [-2, -1, 1, 2]


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 300), st.floats(-3, 3), st.floats(0, 4))
def test_coprime_residues_property(q, lo, width):
    hi = lo + width
    got = list(nt.coprime_residues(q, lo, hi, closed=True))
    want = [p for p in range(math.floor(lo * q) - 2, math.ceil(hi * q) + 3) if lo <= p / q <= hi and math.gcd(p, q) == 1]
    assert got == want
    assert list(nt.coprime_numerators(q, lo, hi, closed=True)) == want


def test_coprime_residues_count_one_period():
    for q in range(1, 200):
        assert len(list(nt.coprime_residues(q, 0, 1))) == nt.euler_phi(q)


def test_coprime_residues_rejects_bad_input():
    with pytest.raises(ValueError):
        list(nt.coprime_residues(0, 0, 1))
    with pytest.raises(ValueError):
        list(nt.coprime_residues(3, 0, math.inf))


def test_exp_sum_identities_against_mpmath():
    import mpmath

    mpmath.mp.dps = 30
    for q in (1, 8, 15, 30, 49):
        for m in range(q):
            exact = sum(mpmath.expjpi(mpmath.mpf(2 * m * p) / q) for p in range(q) if math.gcd(p, q) == 1)
            exact /= nt.euler_phi(q)
            assert abs(complex(exact) - nt.ramanujan_sum(q, m)) < 1e-12
