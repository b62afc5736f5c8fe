"""Weighted averages of observables along expanded horocycle sections.

All finite sums run over ascending indices in fixed blocks of ``BLOCK``
terms. Each block is summed pairwise and the block sums are combined by the
same pairwise tree, so results depend only on the index range and never on
the thread count.
"""

from __future__ import annotations

import contextlib
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numba
import numpy as np

from . import _kernels as K
from .modular_space import HaarSampler, ReducedPoint, TestFunction, mean_and_stderr
from .numtheory import euler_phi, ramanujan_sum
from .sections import HorocycleSection
from .weights import WeightFunction, trig_polynomial

BLOCK = 1 << 16
GL_ORDER = 8
HAAR_REF_SAMPLES = 10**6
HAAR_REF_STREAM = 999_983  # away from the small ids used by spawn()
NOISE_FLOOR_SIGMAS = 3.0


class RefinementWarning(UserWarning):
    """Quadrature did not settle within the allowed number of doublings."""


@contextlib.contextmanager
def worker_threads(workers: Optional[int]):
    """Run the compiled kernels on ``workers`` threads (capped at what numba has)."""
    if workers is None:
        yield
        return
    if workers < 1:
        raise ValueError("workers must be at least 1")
    old = numba.get_num_threads()
    numba.set_num_threads(min(workers, numba.config.NUMBA_NUM_THREADS))
    try:
        yield
    finally:
        numba.set_num_threads(old)


def _index_blocks(lo: int, hi: int) -> Iterator[np.ndarray]:
    for start in range(lo, hi + 1, BLOCK):
        yield np.arange(start, min(start + BLOCK, hi + 1), dtype=np.int64)


def _tree_sum(values: Sequence[float]) -> float:
    return float(K.pairwise_sum(np.asarray(values, dtype=np.float64)))


def section_values(n: HorocycleSection, f: TestFunction, t: np.ndarray, y: float) -> np.ndarray:
    """``f(n(t) a(y))`` for an array of times."""
    t = np.ascontiguousarray(t, dtype=np.float64)
    xi1, xi2 = n.xi_at(t)
    m = np.empty((t.shape[0], 2, 2))
    xl = np.empty((t.shape[0], 2))
    K.section_points(t, float(y), np.ascontiguousarray(xi1), np.ascontiguousarray(xi2), m, xl)
    return f.values(m, xl)


def _k_range(support: tuple[float, float], N: int) -> tuple[int, int]:
    a, b = support
    return math.ceil(a * N), math.floor(b * N)


def _terms(n, f, psi, ks, N, y, mean):
    t = ks / N
    w = psi(t)
    vals = section_values(n, f, t, y)
    if mean:
        vals = vals - mean
    return vals * w


def _phase(ks: np.ndarray, c: float, N: int) -> np.ndarray:
    # e(ck/N) with the argument reduced mod 1 before exponentiating.
    frac = np.mod(c * ks.astype(np.float64), N) / N
    return np.exp(2j * np.pi * frac)


def _nonprim_sum(n, f, psi, N, mean=0.0, twists: Sequence[float] = ()):
    """Block sums of ``F(k/N)`` and of ``F(k/N) e(c k/N)`` for each c."""
    lo, hi = _k_range(psi.support, N)
    plain, tw_re, tw_im = [], [[] for _ in twists], [[] for _ in twists]
    for ks in _index_blocks(lo, hi):
        v = _terms(n, f, psi, ks, N, 1.0 / N, mean)
        plain.append(K.pairwise_sum(v))
        for j, c in enumerate(twists):
            z = v * _phase(ks, c, N)
            tw_re[j].append(K.pairwise_sum(np.ascontiguousarray(z.real)))
            tw_im[j].append(K.pairwise_sum(np.ascontiguousarray(z.imag)))
    twisted = [complex(_tree_sum(r), _tree_sum(i)) / N for r, i in zip(tw_re, tw_im)]
    return _tree_sum(plain) / N, twisted, max(hi - lo + 1, 0)


def nonprimitive_average(n: HorocycleSection, f: TestFunction, psi: WeightFunction, N: int, haar_ref: Optional[float] = None) -> float:
    """``(1/N) sum_k f(n(k/N) a(1/N)) psi(k/N)``; with ``haar_ref`` uses ``f - haar_ref``."""
    if N < 1:
        raise ValueError("N must be positive")
    return _nonprim_sum(n, f, psi, N, haar_ref or 0.0)[0]


def twisted_average(
    n: HorocycleSection, f: TestFunction, psi: WeightFunction, N: int, c: float, haar_ref: Optional[float] = None
) -> complex:
    """``(1/N) sum_k f(n(k/N) a(1/N)) psi(k/N) e(ck/N)``.

    Passing ``haar_ref`` replaces f by the mean-zero ``f - haar_ref``.
    """
    if N < 1:
        raise ValueError("N must be positive")
    return _nonprim_sum(n, f, psi, N, haar_ref or 0.0, (c,))[1][0]


def twisted_sup(
    n: HorocycleSection, f: TestFunction, psi: WeightFunction, N: int, cs: Sequence[float], haar_ref: Optional[float] = None
) -> np.ndarray:
    """``|twisted_average|`` for every c in ``cs``, sharing the observable evaluations."""
    return np.abs(np.array(_nonprim_sum(n, f, psi, N, haar_ref or 0.0, tuple(cs))[1]))


def _prim_sum(n, f, psi, q, mean=0.0):
    lo, hi = _k_range(psi.support, q)
    sums, terms = [], 0
    for ks in _index_blocks(lo, hi):
        ks = ks[np.gcd(ks, q) == 1]
        terms += ks.shape[0]
        sums.append(K.pairwise_sum(_terms(n, f, psi, ks, q, 1.0 / q, mean)) if ks.size else 0.0)
    return _tree_sum(sums) / euler_phi(q), terms


def primitive_average(n: HorocycleSection, f: TestFunction, psi: WeightFunction, q: int, haar_ref: Optional[float] = None) -> float:
    """``(1/phi(q)) sum_{(p,q)=1} f(n(p/q) a(1/q)) psi(p/q)``."""
    if q < 1:
        raise ValueError("q must be positive")
    return _prim_sum(n, f, psi, q, haar_ref or 0.0)[0]


def primitive_via_ramanujan(n: HorocycleSection, f: TestFunction, psi: WeightFunction, q: int) -> float:
    """Primitive average rebuilt from twisted sums over all residues.

    ``sum_r S(q, r) (1/q) sum_p F(p/q) e(-rp/q)`` collapses to the primitive
    sum because ``(1/q) sum_r e(r(a - p)/q)`` detects ``p = a mod q``.
    """
    cs = [-float(r) for r in range(q)]
    _, twisted, _ = _nonprim_sum(n, f, psi, q, 0.0, cs)
    total = sum(ramanujan_sum(q, r) * z for r, z in enumerate(twisted))
    return float(total.real)


def trig_primitive_direct(coeffs: dict[int, complex], q: int, a: int = 0) -> float:
    """``(1/phi(q)) sum psi~(p/q)`` over coprime p with p/q in [a, a+1)."""
    psi = trig_polynomial(coeffs, float(a))
    one = TestFunction.constant(1.0)
    from .sections import zero

    return primitive_average(zero(), one, psi, q)


def trig_primitive_ramanujan(coeffs: dict[int, complex], q: int) -> float:
    """``sum_k c_k S(q, k)``: the same average read off the Fourier side."""
    return float(sum(c * ramanujan_sum(q, k) for k, c in coeffs.items()).real)


def _gauss_legendre(points: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(GL_ORDER)
    panels = max(points // GL_ORDER, 1)
    edges = np.linspace(alpha, beta, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _gl_estimate(n, f, alpha, beta, y, points):
    nodes, weights = _gauss_legendre(points, alpha, beta)
    sums = [
        K.pairwise_sum(section_values(n, f, nodes[i : i + BLOCK], y) * weights[i : i + BLOCK])
        for i in range(0, nodes.shape[0], BLOCK)
    ]
    return _tree_sum(sums) / (beta - alpha)


def continuous_average(
    n: HorocycleSection,
    f: TestFunction,
    alpha: float,
    beta: float,
    y: float,
    quad_points: int = 4096,
    tol: float = 1e-6,
    max_quad_points: int = 1 << 22,
) -> float:
    """``(1/(beta - alpha)) int f(n(t) a(y)) dt`` by composite Gauss-Legendre.

    The node count doubles until two successive estimates agree to ``tol``;
    a :class:`RefinementWarning` is issued if ``max_quad_points`` is reached
    first, and the finest estimate is returned.
    """
    if not alpha < beta:
        raise ValueError("need alpha < beta")
    if quad_points < 64:
        raise ValueError("quad_points must be at least 64")
    if not y > 0:
        raise ValueError("y must be positive")
    prev = _gl_estimate(n, f, alpha, beta, y, quad_points)
    points = quad_points
    while points < max_quad_points:
        points *= 2
        cur = _gl_estimate(n, f, alpha, beta, y, points)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    warnings.warn(
        f"continuous_average not converged to {tol:g} at {points} nodes (last change {abs(cur - prev):.3g})",
        RefinementWarning,
        stacklevel=2,
    )
    return prev


def _shift_u(m: np.ndarray, t: float) -> np.ndarray:
    # m u(t): the second column gains t times the first.
    out = m.copy()
    out[:, :, 1] += t * m[:, :, 0]
    return out


def discrepancy_DM(f: TestFunction, x: ReducedPoint, M: int, haar_ref: float) -> float:
    """``(1/M) sum_{m < M} f(x u(m)) - haar_ref``."""
    if M < 1:
        raise ValueError("M must be positive")
    ms = np.arange(M, dtype=np.float64)
    mm = np.repeat(x.m_red[None], M, axis=0)
    mm[:, :, 1] += ms[:, None] * x.m_red[None, :, 0]
    xl = np.repeat(np.asarray(x.x_red, dtype=np.float64)[None], M, axis=0)
    return float(K.pairwise_sum(f.values(mm, xl))) / M - haar_ref


def dm_second_moment(f: TestFunction, M: int, n: int, s: HaarSampler, haar_ref: float) -> tuple[float, float]:
    """Monte Carlo ``int |D_M f|^2 dnu`` and its standard error."""
    if M < 1:
        raise ValueError("M must be positive")
    out = []
    for b in s.chunks(n):
        acc = np.zeros(len(b))
        for j in range(M):
            acc += f.values(_shift_u(b.m, float(j)), b.xl)
        out.append((acc / M - haar_ref) ** 2)
    return mean_and_stderr(np.concatenate(out))


def mixing_correlation(
    f: TestFunction,
    h: TestFunction,
    t: float,
    n: int,
    s: HaarSampler,
    f_mean: Optional[float] = None,
    h_mean: Optional[float] = None,
) -> tuple[float, float]:
    """Monte Carlo ``int f(x u(t)) h(x) dnu - (int f)(int h)``.

    With known means the centred product is averaged directly; otherwise the
    means are taken from the same samples.
    """
    if n < 10**4:
        raise ValueError("mixing_correlation needs at least 1e4 samples")
    fv, hv = [], []
    for b in s.chunks(n):
        fv.append(f.values(_shift_u(b.m, t), b.xl))
        hv.append(h.values(b.m, b.xl))
    fv, hv = np.concatenate(fv), np.concatenate(hv)
    fm = f_mean if f_mean is not None else mean_and_stderr(fv)[0]
    hm = h_mean if h_mean is not None else mean_and_stderr(hv)[0]
    return mean_and_stderr((fv - fm) * (hv - hm))


_HAAR_CACHE: dict[tuple, tuple[float, float]] = {}


def haar_reference(f: TestFunction, seed: int, n: int = HAAR_REF_SAMPLES) -> tuple[float, float]:
    """Cached Haar mean of ``f`` and its standard error, on a dedicated stream."""
    key = (f.spec(), int(seed), int(n))
    if key not in _HAAR_CACHE:
        from .modular_space import haar_integral

        if f.kind == "const":
            _HAAR_CACHE[key] = (float(f.params[0]), 0.0)
        else:
            _HAAR_CACHE[key] = haar_integral(f, n, HaarSampler(seed, stream=HAAR_REF_STREAM))
    return _HAAR_CACHE[key]


@dataclass(frozen=True)
class EnsembleResult:
    """One grid cell. ``reference`` is ``haar_ref * psi_integral``, or 0 for
    mean-subtracted runs, and ``abs_err = |estimate - reference|``."""

    parameter: int
    ensemble: str
    estimate: complex
    haar_ref: float
    haar_stderr: float
    psi_integral: float
    terms: int
    runtime_ms: float
    seed: int
    mean_subtracted: bool = False

    @property
    def reference(self) -> float:
        return 0.0 if self.mean_subtracted else self.haar_ref * self.psi_integral

    @property
    def abs_err(self) -> float:
        return abs(self.estimate - self.reference)

    @property
    def noise(self) -> float:
        """Standard error that ``abs_err`` inherits from the Haar reference."""
        return self.haar_stderr * abs(self.psi_integral)


def run_ensemble(
    ensemble: str,
    n: HorocycleSection,
    f: TestFunction,
    psi: WeightFunction,
    parameter: int,
    haar_ref: float,
    haar_stderr: float,
    seed: int = 0,
    c: Optional[float] = None,
    continuous_y: Optional[float] = None,
) -> EnsembleResult:
    """Evaluate one ensemble at one grid parameter and package the result."""
    start = time.perf_counter()
    mean_sub = False
    if ensemble == "nonprimitive":
        est, _, terms = _nonprim_sum(n, f, psi, parameter)
    elif ensemble == "primitive":
        est, terms = _prim_sum(n, f, psi, parameter)
    elif ensemble == "twisted":
        mean_sub = True
        _, tw, terms = _nonprim_sum(n, f, psi, parameter, haar_ref, (c if c is not None else 0.0,))
        est = tw[0]
        ensemble = f"twisted({c if c is not None else 0.0:g})"
    elif ensemble == "continuous":
        a, b = psi.support
        y = continuous_y if continuous_y is not None else 1.0 / parameter
        est = continuous_average(n, f, a, b, y)
        terms = 0
        return EnsembleResult(parameter, ensemble, complex(est), haar_ref, haar_stderr, 1.0, terms,
                              (time.perf_counter() - start) * 1e3, seed)
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    runtime = (time.perf_counter() - start) * 1e3
    return EnsembleResult(parameter, ensemble, complex(est), haar_ref, haar_stderr, psi.integral, terms, runtime, seed, mean_sub)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares power law ``err ~ C * param^(-delta_hat)``."""

    points: tuple[tuple[float, float], ...]
    delta_hat: float
    r2: float
    intercept: float
    excluded: tuple[tuple[float, float], ...] = field(default=())

    def refit(self) -> "DecayFit":
        return fit_decay(self.points)


def fit_decay(
    points: Sequence[tuple[float, float]], noise_floor: Optional[float] = None, min_points: int = 3
) -> DecayFit:
    """Fit ``log err = b - delta log param``.

    Points with ``err < noise_floor`` are dropped first (kept in ``excluded``).
    """
    pts = [(float(p), float(e)) for p, e in points]
    for p, e in pts:
        if not (e > 0 and p > 0 and math.isfinite(e)):
            raise ValueError(f"fit_decay needs positive finite values, got ({p}, {e})")
    excluded = tuple(pt for pt in pts if noise_floor is not None and pt[1] < noise_floor)
    used = tuple(pt for pt in pts if pt not in excluded)
    if len(used) < min_points:
        raise ValueError(f"need at least {min_points} points above the noise floor, have {len(used)}")
    x = np.log([p for p, _ in used])
    yv = np.log([e for _, e in used])
    xm, ym = x.mean(), yv.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0:
        raise ValueError("parameters must not all coincide")
    slope = float(((x - xm) * (yv - ym)).sum()) / sxx
    intercept = float(ym - slope * xm)
    ss_res = float(((yv - (intercept + slope * x)) ** 2).sum())
    ss_tot = float(((yv - ym) ** 2).sum())
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res == 0 else 0.0
    return DecayFit(points=used, delta_hat=-slope, r2=r2, intercept=intercept, excluded=excluded)
