"""The space X = ASL(2, Z) \\ ASL(2, R) of unimodular affine lattices.

A point of X is represented by its reduced coset representative: the linear
part is Gauss-reduced so that ``z = m_red . i`` lies in the standard
fundamental domain ``|Re z| <= 1/2, |z| >= 1`` and the rotation coordinate is
taken in ``[0, pi)`` (``-I`` lies in the lattice group), and the affine part is
reduced mod Z^2 in lattice coordinates.

The probability Haar measure is ``(3/pi) dx dy / y^2`` on the fundamental
domain, times the uniform measures on the rotation and on the torus fibre.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import _kernels as K
from .group import GENERATORS, GroupElement, LieGenerator, exp_generator, identity

HAAR_DENSITY = 3.0 / math.pi
SAMPLE_CHUNK = 1 << 17
MAX_SOBOLEV_DEGREE = 4


@dataclass(frozen=True, eq=False)
class ReducedPoint:
    m_red: np.ndarray
    x_red: np.ndarray
    gamma: GroupElement
    z: complex
    theta: float

    def element(self) -> GroupElement:
        """Ambient representative ``(m_red, x_red m_red)``."""
        return GroupElement(self.m_red, self.x_red @ self.m_red)

    def coords(self) -> np.ndarray:
        """(Re z, Im z, theta, x_red) as one vector, for comparisons."""
        return np.array([self.z.real, self.z.imag, self.theta, *self.x_red])


def _point_from_rows(m_red: np.ndarray, x_red: np.ndarray, gamma: GroupElement) -> ReducedPoint:
    (a, b), (c, d) = m_red
    z = complex(b, a) / complex(d, c)
    theta = math.atan2(c, d) % (2 * math.pi)
    return ReducedPoint(m_red=m_red, x_red=x_red, gamma=gamma, z=z, theta=theta)


def reduce_lattice(m, xl) -> ReducedPoint:
    """Reduce the point with linear part ``m`` and lattice coordinates ``xl``.

    The returned ``gamma`` is expressed for the ambient element
    ``(m, xl @ m)``.
    """
    m = np.asarray(m, dtype=np.float64)
    xl = np.asarray(xl, dtype=np.float64)
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(xl))):
        raise ValueError("cannot reduce a non-finite point")
    m_red, _, A, _, it = K.reduce_one(m, np.zeros(2))
    if it < 0:
        raise RuntimeError(f"Gauss reduction did not terminate for {m.tolist()}")
    # -I is in Gamma: pick the sign that puts the rotation angle in [0, pi).
    if math.atan2(m_red[1, 0], m_red[1, 1]) % (2 * math.pi) >= math.pi:
        m_red, A = -m_red, -A
    # Torus part: xl -> xl A^{-1} mod 1, gamma's translation is -floor(.) A.
    y = xl @ np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]])
    kfl = np.floor(y)
    x_red = y - kfl
    over = x_red >= 1.0
    x_red[over] -= 1.0
    kfl[over] += 1.0
    gamma = GroupElement(A, -(kfl @ A))
    return _point_from_rows(m_red, x_red, gamma)


def reduce(g: GroupElement) -> ReducedPoint:
    """Canonical representative of the coset Gamma g."""
    if not (np.all(np.isfinite(g.m)) and np.all(np.isfinite(g.x))):
        raise ValueError("cannot reduce a non-finite point")
    (p, q), (r, s) = g.m
    xl = g.x @ np.array([[s, -q], [-r, p]])
    return reduce_lattice(g.m, xl)


def shortest_affine_vector(p: ReducedPoint, radius: int = K.SHORTEST_ENUM_RADIUS) -> float:
    """Minimal Euclidean norm on the affine lattice ``(Z^2 + x_red) m_red``.

    On a Gauss-reduced basis the minimiser has coefficients in [-2, 2]; the
    default radius leaves a wide margin.
    """
    (a, b), (c, d) = p.m_red
    return float(K._shortest(a, b, c, d, p.x_red[0], p.x_red[1], radius))


def bump(s):
    """``exp(1 - 1/(1 - s^2))`` on (-1, 1), zero outside; peak value 1 at 0."""
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out if out.ndim else float(out)


def bump_prime(s):
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    w = 1.0 - s[inside] ** 2
    out[inside] = np.exp(1.0 - 1.0 / w) * (-2.0 * s[inside] / w**2)
    return out if out.ndim else float(out)


_KIND_CODES = {
    "const": K.KIND_CONST,
    "shortest_vector_bump": K.KIND_SHORTEST_BUMP,
    "smoothed_count": K.KIND_SMOOTHED_COUNT,
    "systole_bump": K.KIND_SYSTOLE_BUMP,
}


@dataclass(frozen=True)
class TestFunction:
    """A Gamma-invariant observable on X.

    Every kind is a function of the affine lattice ``Z^2 m + x`` alone, so
    Gamma-invariance holds by construction.

    Kinds and parameters:
      const                 (c,)
      shortest_vector_bump  (r0, w)       bump((|v_min| - r0)/w), v_min the
                                          shortest vector of the affine lattice
      smoothed_count        (r_in, r_out, eps)  smoothed number of affine lattice
                                          points with r_in <= |v| <= r_out;
                                          r_in <= 0 means a disc, eps = 0 the
                                          sharp count
      systole_bump          (r0, w)       bump of the shortest nonzero vector of
                                          the linear lattice; blind to the
                                          affine fibre
    """

    __test__ = False  # not a pytest class

    kind: str
    params: tuple[float, ...]
    sobolev_proxy: dict[int, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown test function kind {self.kind!r}")
        expected = {"const": 1, "shortest_vector_bump": 2, "smoothed_count": 3, "systole_bump": 2}[self.kind]
        if len(self.params) != expected:
            raise ValueError(f"{self.kind} takes {expected} parameters, got {self.params}")
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))

    @classmethod
    def constant(cls, c: float = 1.0) -> "TestFunction":
        return cls("const", (c,))

    @classmethod
    def shortest_vector_bump(cls, r0: float, w: float) -> "TestFunction":
        if w <= 0:
            raise ValueError("bump width must be positive")
        return cls("shortest_vector_bump", (r0, w))

    @classmethod
    def smoothed_count(cls, r_in: float, r_out: float, eps: float = 0.0) -> "TestFunction":
        if r_out <= max(r_in, 0.0) or eps < 0:
            raise ValueError("need r_out > max(r_in, 0) and eps >= 0")
        return cls("smoothed_count", (r_in, r_out, eps))

    @classmethod
    def systole_bump(cls, r0: float, w: float) -> "TestFunction":
        return cls("systole_bump", (r0, w))

    @classmethod
    def parse(cls, spec: str) -> "TestFunction":
        """Parse ``kind:p1,p2,...`` (``one`` is shorthand for ``const:1``)."""
        spec = spec.strip()
        if spec in ("one", "1"):
            return cls.constant(1.0)
        kind, _, rest = spec.partition(":")
        params = tuple(float(v) for v in rest.split(",")) if rest else ()
        return cls(kind.strip(), params)

    def spec(self) -> str:
        return f"{self.kind}:" + ",".join(repr(v) for v in self.params)

    @property
    def sup_bound(self) -> float:
        if self.kind == "const":
            return abs(self.params[0])
        if self.kind == "smoothed_count":
            # Siegel transforms are unbounded in the cusp.
            return math.inf
        return 1.0

    @property
    def affine_sensitive(self) -> bool:
        return self.kind in ("shortest_vector_bump", "smoothed_count")

    def values(self, m: np.ndarray, xl: np.ndarray) -> np.ndarray:
        """Vectorised evaluation at points given by matrices and lattice coordinates."""
        m = np.ascontiguousarray(m, dtype=np.float64)
        xl = np.ascontiguousarray(xl, dtype=np.float64)
        out = K.evaluate_batch(_KIND_CODES[self.kind], np.array(self.params), m, xl)
        if np.isnan(out).any():
            raise FloatingPointError("reduction failed while evaluating a test function")
        return out

    def at(self, g: GroupElement) -> float:
        return evaluate(self, reduce(g))

    def __call__(self, p: ReducedPoint) -> float:
        return evaluate(self, p)


def evaluate(f: TestFunction, p: ReducedPoint) -> float:
    return float(f.values(p.m_red[None], p.x_red[None])[0])


def lattice_coords(g_m: np.ndarray, g_x: np.ndarray) -> np.ndarray:
    """Batch conversion of ambient affine parts to lattice coordinates."""
    inv = np.empty_like(g_m)
    inv[:, 0, 0] = g_m[:, 1, 1]
    inv[:, 0, 1] = -g_m[:, 0, 1]
    inv[:, 1, 0] = -g_m[:, 1, 0]
    inv[:, 1, 1] = g_m[:, 0, 0]
    return np.einsum("ni,nij->nj", g_x, inv)


@dataclass(frozen=True)
class HaarBatch:
    m: np.ndarray
    xl: np.ndarray
    z: np.ndarray
    theta: np.ndarray

    def __len__(self) -> int:
        return self.m.shape[0]


def _iwasawa(x: np.ndarray, y: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Matrices n(x) a(y) k(theta), whose Moebius image of i is x + iy."""
    ry = np.sqrt(y)
    c, s = np.cos(theta), np.sin(theta)
    m = np.empty((x.shape[0], 2, 2))
    m[:, 0, 0] = ry * c + x / ry * s
    m[:, 0, 1] = -ry * s + x / ry * c
    m[:, 1, 0] = s / ry
    m[:, 1, 1] = c / ry
    return m


@dataclass(frozen=True)
class HaarSampler:
    """Deterministic sampler for the probability Haar measure on X.

    Value semantics: ``draw(n)`` depends only on (seed, stream, n). Samples
    are generated in fixed chunks, chunk j from its own child seed, so the
    stream is identical however the work is later partitioned.
    """

    seed: int
    stream: int = 0
    normalization: float = HAAR_DENSITY

    def spawn(self, index: int) -> "HaarSampler":
        return HaarSampler(self.seed, stream=self.stream * 1_000_003 + index + 1)

    def split(self, workers: int) -> list["HaarSampler"]:
        return [self.spawn(i) for i in range(workers)]

    def _rng(self, chunk: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, chunk))
        return np.random.Generator(np.random.PCG64(ss))

    def _chunk(self, chunk: int, n: int) -> HaarBatch:
        rng = self._rng(chunk)
        # A full chunk is always generated so a short draw is a prefix of a long one.
        full = SAMPLE_CHUNK
        # (x, 1/y) is uniform on {|x| <= 1/2, 0 < 1/y <= 1/sqrt(1 - x^2)}.
        top = 2.0 / math.sqrt(3.0)
        x = rng.uniform(-0.5, 0.5, full)
        v = top * (1.0 - rng.random(full))
        bad = v * v * (1.0 - x * x) > 1.0
        while bad.any():
            nb = int(bad.sum())
            x[bad] = rng.uniform(-0.5, 0.5, nb)
            v[bad] = top * (1.0 - rng.random(nb))
            bad = v * v * (1.0 - x * x) > 1.0
        theta = rng.uniform(0.0, math.pi, full)[:n]
        xl = rng.random((full, 2))[:n].copy()
        x, y = x[:n].copy(), 1.0 / v[:n]
        return HaarBatch(m=_iwasawa(x, y, theta), xl=xl, z=x + 1j * y, theta=theta)

    def chunks(self, n: int) -> Iterator[HaarBatch]:
        for j, start in enumerate(range(0, n, SAMPLE_CHUNK)):
            yield self._chunk(j, min(SAMPLE_CHUNK, n - start))

    def draw(self, n: int) -> HaarBatch:
        parts = list(self.chunks(n))
        if len(parts) == 1:
            return parts[0]
        return HaarBatch(
            m=np.concatenate([p.m for p in parts]),
            xl=np.concatenate([p.xl for p in parts]),
            z=np.concatenate([p.z for p in parts]),
            theta=np.concatenate([p.theta for p in parts]),
        )


def haar_sample(s: HaarSampler) -> ReducedPoint:
    """First point of the sampler's stream, already in reduced form."""
    b = s.draw(1)
    return _point_from_rows(b.m[0].copy(), b.xl[0].copy(), identity())


def mean_and_stderr(values: np.ndarray) -> tuple[float, float]:
    """Deterministic two-pass mean and standard error of the mean."""
    n = values.shape[0]
    mean = K.pairwise_sum(values) / n
    if n < 2:
        return float(mean), math.nan
    var = K.pairwise_sum((values - mean) ** 2) / (n - 1)
    return float(mean), math.sqrt(var / n)


def haar_values(f: TestFunction, n: int, s: HaarSampler) -> np.ndarray:
    return np.concatenate([f.values(b.m, b.xl) for b in s.chunks(n)])


def haar_integral(f: TestFunction, n: int, s: HaarSampler) -> tuple[float, float]:
    """Monte Carlo estimate of the Haar integral of ``f`` and its standard error."""
    if n < 100:
        raise ValueError("haar_integral needs at least 100 samples")
    return mean_and_stderr(haar_values(f, n, s))


def fundamental_domain_area() -> float:
    """``int dx dy / y^2`` over the fundamental domain, by adaptive quadrature."""
    from scipy import integrate

    val, _ = integrate.dblquad(
        lambda y, x: 1.0 / (y * y), -0.5, 0.5, lambda x: math.sqrt(1.0 - x * x), lambda x: math.inf,
        epsabs=1e-12, epsrel=1e-12,
    )
    return val


def _fd_step(order: int, h: float) -> float:
    # Rounding error of an order-k central difference grows like eps / h^k;
    # balance it against the h^2 truncation error.
    return max(h, np.finfo(float).eps ** (1.0 / (order + 2)))


def _right_translate(m: np.ndarray, xl: np.ndarray, gen: LieGenerator, t: float):
    """Batch right multiplication by exp(t gen), in lattice coordinates."""
    step = exp_generator(gen, t)
    if gen in (LieGenerator.X4, LieGenerator.X5):
        # (m, x)(I, v) = (m, x + v): lattice coordinates gain v m^{-1}.
        return m, xl + lattice_coords(m, np.broadcast_to(step.x, xl.shape))
    return m @ step.m, xl


def lie_derivative(f: TestFunction, word: tuple[LieGenerator, ...], m, xl, h: float = 1e-5) -> np.ndarray:
    """Nested central difference of ``X_{i1} ... X_{ik} f`` at a batch of points.

    The leftmost letter is applied outermost:
    ``(X_i X_j f)(g) = d/ds d/dt f(g exp(s X_i) exp(t X_j))``.
    """
    if not word:
        return f.values(m, xl)
    hk = _fd_step(len(word), h)
    total = np.zeros(m.shape[0])
    for signs in itertools.product((1.0, -1.0), repeat=len(word)):
        mm, xx = m, xl
        for gen, sg in zip(word, signs):
            mm, xx = _right_translate(mm, xx, gen, sg * hk)
        total += np.prod(signs) * f.values(mm, xx)
    return total / (2 * hk) ** len(word)


def sobolev_proxy(f: TestFunction, d: int, n: int = 256, s: HaarSampler | None = None, h: float = 1e-5) -> float:
    """Sampled lower bound for ``sum_{|D| <= d} sup |D f|``.

    D runs over all words of length at most d in X1..X5; the supremum of the
    sum is replaced by a maximum over n Haar points.
    """
    if d > MAX_SOBOLEV_DEGREE:
        raise ValueError(f"degree {d} > {MAX_SOBOLEV_DEGREE}: finite differences are unreliable")
    if d < 0:
        raise ValueError("degree must be non-negative")
    s = s if s is not None else HaarSampler(seed=0)
    batch = s.draw(n)
    acc = np.zeros(n)
    for order in range(d + 1):
        for word in itertools.product(GENERATORS, repeat=order):
            acc += np.abs(lie_derivative(f, word, batch.m, batch.xl, h))
    value = float(acc.max())
    f.sobolev_proxy[d] = value
    return value
