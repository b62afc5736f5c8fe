"""Sieves, exponential sums and Ramanujan sums.

``e(x) = exp(2 pi i x)`` throughout. The normalised Ramanujan sum is

    S(q, k) = (1/phi(q)) * sum_{0 <= p < q, (p, q) = 1} e(kp/q)
            = mu(q_k) / phi(q_k),      q_k = q / gcd(q, k).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

SIEVE_LIMIT_MAX = 10**9


@dataclass(frozen=True)
class SieveTable:
    limit: int
    phi: np.ndarray
    mu: np.ndarray
    smallest_prime_factor: np.ndarray

    @property
    def primes(self) -> np.ndarray:
        n = np.arange(self.limit + 1)
        return n[(self.smallest_prime_factor == n) & (n >= 2)]

    def omega(self, n: int) -> int:
        """Number of distinct prime factors of ``n``."""
        count = 0
        while n > 1:
            p = int(self.smallest_prime_factor[n])
            count += 1
            while n % p == 0:
                n //= p
        return count


def build_sieve(limit: int) -> SieveTable:
    """Linear (Euler) sieve for phi, mu and the smallest prime factor."""
    if limit < 1:
        raise ValueError("limit must be positive")
    if limit > SIEVE_LIMIT_MAX:
        raise ValueError(f"limit {limit} exceeds memory guard {SIEVE_LIMIT_MAX}")
    from ._kernels import linear_sieve

    spf, phi, mu = linear_sieve(limit)
    for arr in (spf, phi, mu):
        arr.setflags(write=False)
    return SieveTable(limit=limit, phi=phi, mu=mu, smallest_prime_factor=spf)


def e(x: float) -> complex:
    # Range-reduce first: exp(2 pi i x) loses accuracy for large |x|.
    return cmath.exp(2j * math.pi * math.fmod(x, 1.0))


def e_rational(num: int, den: int) -> complex:
    """``e(num/den)`` with exact integer range reduction."""
    return cmath.exp(2j * math.pi * ((num % den) / den))


def full_exp_sum(q: int, m: int) -> complex:
    """``(1/q) * sum_{p=0}^{q-1} e(mp/q)``; equals 1 if q | m, else 0."""
    if q < 1:
        raise ValueError("q must be positive")
    return sum(e_rational(m * p, q) for p in range(q)) / q


def direct_ramanujan_sum(q: int, k: int) -> complex:
    """Normalised Ramanujan sum by direct summation over reduced residues."""
    if q < 1:
        raise ValueError("q must be positive")
    terms = [e_rational(k * p, q) for p in range(q) if math.gcd(p, q) == 1]
    return sum(terms) / len(terms)


@lru_cache(maxsize=4096)
def _factorize(n: int) -> tuple[tuple[int, int], ...]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e_ = 0
            while n % p == 0:
                n //= p
                e_ += 1
            out.append((p, e_))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def euler_phi(n: int) -> int:
    result = n
    for p, _ in _factorize(n):
        result -= result // p
    return result


def mobius(n: int) -> int:
    fac = _factorize(n)
    if any(e_ > 1 for _, e_ in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def omega(n: int) -> int:
    return len(_factorize(n))


def ramanujan_sum(q: int, k: int) -> float:
    """Closed form ``mu(q_k) / phi(q_k)``."""
    if q < 1:
        raise ValueError("q must be positive")
    qk = q // math.gcd(q, k)
    return mobius(qk) / euler_phi(qk)


def abs_S_row_sum(q: int) -> float:
    """``sum_{r=0}^{q-1} |S(q, r)|`` via the divisor decomposition.

    For each divisor d of q there are phi(d) residues r with q_r = d, each
    contributing |mu(d)| / phi(d); the phi(d) cancel, leaving the number of
    squarefree divisors, 2^omega(q). Integer arithmetic throughout.
    """
    if q < 1:
        raise ValueError("q must be positive")
    return sum(1 for d in divisors(q) if mobius(d) != 0)


def abs_S_row_sum_direct(q: int) -> float:
    """O(q * phi(q)) brute force of :func:`abs_S_row_sum`."""
    return sum(abs(direct_ramanujan_sum(q, r)) for r in range(q))


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e_ in _factorize(n):
        divs = [d * p**j for d in divs for j in range(e_ + 1)]
    return sorted(divs)


def coprime_residues(q: int, lo: float, hi: float, closed: bool = False) -> Iterator[int]:
    """Integers p with gcd(p, q) = 1 and p/q in [lo, hi) (or [lo, hi])."""
    if q < 1:
        raise ValueError("q must be positive")
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("interval must be finite")
    p = math.ceil(lo * q)
    while (p - 1) / q >= lo:
        p -= 1
    while p / q < lo:
        p += 1
    while p / q < hi or (closed and p / q == hi):
        if math.gcd(p, q) == 1:
            yield p
        p += 1


def coprime_numerators(q: int, lo: float, hi: float, closed: bool = True) -> np.ndarray:
    """Vectorised :func:`coprime_residues` for large q."""
    p_lo = math.ceil(lo * q) - 1
    p_hi = math.floor(hi * q) + 1
    p = np.arange(p_lo, p_hi + 1, dtype=np.int64)
    p = p[(p / q >= lo) & ((p / q <= hi) if closed else (p / q < hi))]
    return p[np.gcd(p, q) == 1]
