"""Compiled inner loops.

Points of X are carried as a batch of matrices ``m`` (n, 2, 2) together with
the affine part in lattice coordinates ``xl`` (n, 2), i.e. the affine lattice
is ``(Z^2 + xl) m``. Right multiplication by a linear element leaves ``xl``
unchanged, which keeps the torus coordinate exact along horocycle orbits.
"""

from __future__ import annotations

import math
import os

import numba
import numpy as np
from numba import njit, prange


def _has_omp() -> bool:
    try:
        from numba.np.ufunc import omppool  # noqa: F401
    except ImportError:
        return False
    return True


if "NUMBA_THREADING_LAYER" not in os.environ:
    # Skip the TBB probe, which warns on older system TBB; results do not
    # depend on the layer.
    numba.config.THREADING_LAYER = "omp" if _has_omp() else "workqueue"

MAX_REDUCE_ITER = 10_000
SHORTEST_ENUM_RADIUS = 8

# Observable codes shared with modular_space.TestFunction.
KIND_CONST = 0
KIND_SHORTEST_BUMP = 1
KIND_SMOOTHED_COUNT = 2
KIND_SYSTOLE_BUMP = 3


@njit(cache=True)
def gauss_reduce(a, b, c, d):
    """Reduce rows b1=(a, b), b2=(c, d) so that z = (ai+b)/(ci+d) lies in the
    standard fundamental domain. Returns the reduced rows, the integer matrix
    A with A @ m = m_red, and the iteration count (-1 on failure)."""
    A00, A01, A10, A11 = 1.0, 0.0, 0.0, 1.0
    it = 0
    while True:
        if it >= MAX_REDUCE_ITER:
            return a, b, c, d, A00, A01, A10, A11, -1
        n2 = c * c + d * d
        re = (a * c + b * d) / n2
        shift = math.floor(re + 0.5)
        if shift != 0.0:
            a -= shift * c
            b -= shift * d
            A00 -= shift * A10
            A01 -= shift * A11
        n1 = a * a + b * b
        if n1 < n2:
            a, b, c, d = -c, -d, a, b
            A00, A01, A10, A11 = -A10, -A11, A00, A01
            it += 1
        else:
            break
    # On the unit circle keep the half with Re z <= 0.
    if n1 == n2 and (a * c + b * d) > 0.0:
        a, b, c, d = -c, -d, a, b
        A00, A01, A10, A11 = -A10, -A11, A00, A01
    return a, b, c, d, A00, A01, A10, A11, it


@njit(cache=True)
def _reduce_torus(x0, x1, A00, A01, A10, A11):
    # Lattice coordinates transform as xl -> xl A^{-1}; A^{-1} = [[A11, -A01], [-A10, A00]].
    y0 = x0 * A11 - x1 * A10
    y1 = -x0 * A01 + x1 * A00
    k0 = math.floor(y0)
    k1 = math.floor(y1)
    r0 = y0 - k0
    r1 = y1 - k1
    # floor can leave exactly 1.0 after rounding of y - k.
    if r0 >= 1.0:
        r0 -= 1.0
        k0 += 1.0
    if r1 >= 1.0:
        r1 -= 1.0
        k1 += 1.0
    return r0, r1, k0, k1


@njit(cache=True)
def reduce_one(m, xl):
    a, b, c, d, A00, A01, A10, A11, it = gauss_reduce(m[0, 0], m[0, 1], m[1, 0], m[1, 1])
    r0, r1, k0, k1 = _reduce_torus(xl[0], xl[1], A00, A01, A10, A11)
    m_red = np.array([[a, b], [c, d]])
    x_red = np.array([r0, r1])
    A = np.array([[A00, A01], [A10, A11]])
    # gamma = (A, -k A) in ambient coordinates.
    shift = np.array([-(k0 * A00 + k1 * A10), -(k0 * A01 + k1 * A11)])
    return m_red, x_red, A, shift, it


@njit(cache=True)
def _shortest(a, b, c, d, x0, x1, radius):
    best = np.inf
    for i in range(-radius, radius + 1):
        al = i + x0
        for j in range(-radius, radius + 1):
            be = j + x1
            v0 = al * a + be * c
            v1 = al * b + be * d
            n = v0 * v0 + v1 * v1
            if n < best:
                best = n
    return math.sqrt(best)


@njit(cache=True)
def _bump(s):
    if s <= -1.0 or s >= 1.0:
        return 0.0
    return math.exp(1.0 - 1.0 / (1.0 - s * s))


@njit(cache=True)
def _bump_prime(s):
    if s <= -1.0 or s >= 1.0:
        return 0.0
    w = 1.0 - s * s
    return math.exp(1.0 - 1.0 / w) * (-2.0 * s / (w * w))


@njit(cache=True)
def _psi_exp(u):
    if u <= 0.0:
        return 0.0
    return math.exp(-1.0 / u)


@njit(cache=True)
def smooth_step(s):
    """C-infinity step: 0 for s <= -1/2, 1 for s >= 1/2, symmetric about 0."""
    if s <= -0.5:
        return 0.0
    if s >= 0.5:
        return 1.0
    p = _psi_exp(s + 0.5)
    q = _psi_exp(0.5 - s)
    return p / (p + q)


@njit(cache=True)
def _annulus_weight(r, r_in, r_out, eps):
    if eps <= 0.0:
        if r > r_out:
            return 0.0
        if r_in > 0.0 and r < r_in:
            return 0.0
        return 1.0
    w = smooth_step((r_out - r) / eps)
    if r_in > 0.0:
        w *= smooth_step((r - r_in) / eps)
    return w


@njit(cache=True)
def _smoothed_count(a, b, c, d, x0, x1, r_in, r_out, eps):
    # Rows b1=(a,b), b2=(c,d) are Gauss-reduced, so |al b1 + be b2| >= (sqrt3/2) max(|al||b1|, |be||b2|).
    R = r_out + 0.5 * max(eps, 0.0)
    nb1 = math.sqrt(a * a + b * b)
    nb2 = math.sqrt(c * c + d * d)
    amax = R / (0.8660254037844386 * nb1)
    total = 0.0
    i_lo = math.ceil(-amax - x0)
    i_hi = math.floor(amax - x0)
    g = a * c + b * d
    for i in range(int(i_lo), int(i_hi) + 1):
        al = i + x0
        # |al b1 + be b2|^2 = nb2^2 be^2 + 2 al g be + al^2 nb1^2 <= R^2
        qa = nb2 * nb2
        qb = al * g
        qc = al * al * nb1 * nb1 - R * R
        disc = qb * qb - qa * qc
        if disc < 0.0:
            continue
        sq = math.sqrt(disc)
        be_lo = (-qb - sq) / qa
        be_hi = (-qb + sq) / qa
        for j in range(int(math.floor(be_lo - x1)) - 1, int(math.ceil(be_hi - x1)) + 2):
            be = j + x1
            v0 = al * a + be * c
            v1 = al * b + be * d
            r = math.sqrt(v0 * v0 + v1 * v1)
            if r <= R:
                total += _annulus_weight(r, r_in, r_out, eps)
    return total


@njit(cache=True)
def observe_one(kind, params, a, b, c, d, x0, x1):
    if kind == KIND_CONST:
        return params[0]
    if kind == KIND_SHORTEST_BUMP:
        r = _shortest(a, b, c, d, x0, x1, SHORTEST_ENUM_RADIUS)
        return _bump((r - params[0]) / params[1])
    if kind == KIND_SMOOTHED_COUNT:
        return _smoothed_count(a, b, c, d, x0, x1, params[0], params[1], params[2])
    if kind == KIND_SYSTOLE_BUMP:
        r = math.sqrt(c * c + d * d)
        return _bump((r - params[0]) / params[1])
    return np.nan


@njit(parallel=True, cache=True)
def evaluate_batch(kind, params, m, xl):
    """Observable values at the points (m[i], xl[i]); NaN marks a failed reduction."""
    n = m.shape[0]
    out = np.empty(n)
    for i in prange(n):
        a, b, c, d, A00, A01, A10, A11, it = gauss_reduce(m[i, 0, 0], m[i, 0, 1], m[i, 1, 0], m[i, 1, 1])
        if it < 0:
            out[i] = np.nan
            continue
        r0, r1, k0, k1 = _reduce_torus(xl[i, 0], xl[i, 1], A00, A01, A10, A11)
        out[i] = observe_one(kind, params, a, b, c, d, r0, r1)
    return out


@njit(parallel=True, cache=True)
def shortest_batch(m, xl, radius):
    n = m.shape[0]
    out = np.empty(n)
    for i in prange(n):
        a, b, c, d, A00, A01, A10, A11, it = gauss_reduce(m[i, 0, 0], m[i, 0, 1], m[i, 1, 0], m[i, 1, 1])
        r0, r1, k0, k1 = _reduce_torus(xl[i, 0], xl[i, 1], A00, A01, A10, A11)
        out[i] = _shortest(a, b, c, d, r0, r1, radius)
    return out


@njit(parallel=True, cache=True)
def section_points(t, y, xi1, xi2, m_out, xl_out):
    """Fill m_out, xl_out with n(t) a(y) for horocycle sections.

    n(t) a(y) = (u(t) a(y), xi(t) u(t) a(y)); in lattice coordinates the
    affine part is just xi(t).
    """
    ry = math.sqrt(y)
    for i in prange(t.shape[0]):
        m_out[i, 0, 0] = ry
        m_out[i, 0, 1] = t[i] / ry
        m_out[i, 1, 0] = 0.0
        m_out[i, 1, 1] = 1.0 / ry
        xl_out[i, 0] = xi1[i]
        xl_out[i, 1] = xi2[i]


@njit(cache=True)
def pairwise_sum(v):
    """Deterministic pairwise sum: blocks of 64 summed in order, then a
    balanced tree over the block sums. Depends only on len(v)."""
    n = v.shape[0]
    if n == 0:
        return 0.0
    nb = (n + 63) // 64
    partial = np.empty(nb)
    for bi in range(nb):
        s = 0.0
        for j in range(bi * 64, min(n, (bi + 1) * 64)):
            s += v[j]
        partial[bi] = s
    while nb > 1:
        half = (nb + 1) // 2
        for j in range(nb // 2):
            partial[j] = partial[2 * j] + partial[2 * j + 1]
        if nb % 2 == 1:
            partial[nb // 2] = partial[nb - 1]
        nb = half
    return partial[0]


@njit(cache=True)
def linear_sieve(limit):
    spf = np.zeros(limit + 1, dtype=np.int64)
    phi = np.zeros(limit + 1, dtype=np.int64)
    mu = np.zeros(limit + 1, dtype=np.int8)
    # pi(x) < 1.26 x / log x for x > 1 (Rosser-Schoenfeld).
    primes = np.empty(16 + int(1.26 * limit / math.log(max(limit, 2))), dtype=np.int64)
    n_primes = 0
    if limit >= 1:
        phi[1] = 1
        mu[1] = 1
        spf[1] = 1
    for i in range(2, limit + 1):
        if spf[i] == 0:
            spf[i] = i
            phi[i] = i - 1
            mu[i] = -1
            primes[n_primes] = i
            n_primes += 1
        for j in range(n_primes):
            p = primes[j]
            if p > spf[i] or i * p > limit:
                break
            spf[i * p] = p
            if p == spf[i]:
                phi[i * p] = phi[i] * p
                mu[i * p] = 0
            else:
                phi[i * p] = phi[i] * (p - 1)
                mu[i * p] = -mu[i]
    return spf, phi, mu
