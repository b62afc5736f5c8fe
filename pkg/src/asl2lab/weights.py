"""Compactly supported weights psi on the line and smooth partitions of unity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .modular_space import bump, bump_prime


@lru_cache(maxsize=1)
def bump_integral() -> float:
    """``int_{-1}^{1} exp(1 - 1/(1 - s^2)) ds``."""
    from scipy import integrate

    val, _ = integrate.quad(lambda s: math.exp(1.0 - 1.0 / (1.0 - s * s)), -1.0, 1.0, epsabs=1e-13, epsrel=1e-12)
    return val


def _phi(u):
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    pos = u > 0
    with np.errstate(over="ignore"):
        out[pos] = np.exp(-1.0 / u[pos])
    return out


def _phi_prime(u):
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    pos = u > 0
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.exp(-1.0 / u[pos]) / u[pos] ** 2
    # exp(-1/u) / u^2 -> 0 as u -> 0+, but the quotient can become 0/0
    out[pos] = np.nan_to_num(vals, nan=0.0)
    return out


def smooth_step(s):
    """C-infinity transition from 0 (s <= 0) to 1 (s >= 1)."""
    s = np.asarray(s, dtype=np.float64)
    p, q = _phi(s), _phi(1.0 - s)
    return p / (p + q)


def smooth_step_prime(s):
    s = np.asarray(s, dtype=np.float64)
    p, q = _phi(s), _phi(1.0 - s)
    dp, dq = _phi_prime(s), _phi_prime(1.0 - s)
    return (dp * q + p * dq) / (p + q) ** 2


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """A compactly supported, piecewise C^1 weight on [a, b].

    ``value`` and ``derivative`` are vectorised; the derivative is the a.e.
    derivative for piecewise kinds. ``integral`` is exact (or quadrature to
    1e-14) and ``discontinuities`` counts jumps, which affect Riemann sums at
    order 1/N.
    """

    kind: str
    support: tuple[float, float]
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    integral: float
    discontinuities: int = 0
    closed: bool = True
    coeffs: Optional[dict[int, complex]] = field(default=None, compare=False)

    def __call__(self, t):
        return self.value(np.asarray(t, dtype=np.float64))

    @property
    def width(self) -> float:
        return self.support[1] - self.support[0]

    @property
    def sup_norm(self) -> float:
        return _grid_max(lambda t: np.abs(self.value(t)), self.support)

    @property
    def w1_inf_norm(self) -> float:
        """``sup |psi| + sup |psi'|``."""
        return self.sup_norm + _grid_max(lambda t: np.abs(self.derivative(t)), self.support)

    def spec(self) -> str:
        a, b = self.support
        return f"{self.kind}:{a!r},{b!r}"


def _grid_max(fun, support, n: int = 200_001) -> float:
    a, b = support
    t = np.linspace(a, b, n)
    vals = fun(t)
    i = int(np.argmax(vals))
    fine = np.linspace(t[max(i - 1, 0)], t[min(i + 1, n - 1)], 2001)
    return float(max(vals[i], fun(fine).max()))


def smooth_bump(a: float, b: float) -> WeightFunction:
    """Peak-one bump ``exp(1 - 1/(1 - s^2))`` rescaled to (a, b)."""
    if not a < b:
        raise ValueError("need a < b")
    mid, half = (a + b) / 2, (b - a) / 2
    return WeightFunction(
        kind="smooth_bump",
        support=(a, b),
        value=lambda t: bump((t - mid) / half),
        derivative=lambda t: bump_prime((t - mid) / half) / half,
        integral=half * bump_integral(),
    )


def triangle(a: float, b: float) -> WeightFunction:
    """Hat function with peak 1 at the midpoint; piecewise C^1."""
    if not a < b:
        raise ValueError("need a < b")
    mid, half = (a + b) / 2, (b - a) / 2

    def value(t):
        return np.clip(1.0 - np.abs(t - mid) / half, 0.0, None)

    def derivative(t):
        inside = np.abs(t - mid) < half
        return np.where(inside, -np.sign(t - mid) / half, 0.0)

    return WeightFunction("triangle", (a, b), value, derivative, integral=half)


def trig_polynomial(coeffs: dict[int, complex], a: float = 0.0) -> WeightFunction:
    """``sum_k c_k e(kt)`` restricted to one period [a, a + 1).

    Real-valued when ``c_{-k} = conj(c_k)``; band-limited, so sums over the
    points p/q of one period are exact in terms of exponential sums.
    """
    ks = np.array(sorted(coeffs), dtype=np.float64)
    cs = np.array([coeffs[int(k)] for k in ks], dtype=np.complex128)

    def full(t):
        t = np.asarray(t, dtype=np.float64)
        return (np.exp(2j * np.pi * np.multiply.outer(t, ks)) @ cs).real

    def value(t):
        t = np.asarray(t, dtype=np.float64)
        inside = (t >= a) & (t < a + 1)
        return np.where(inside, full(t), 0.0)

    def derivative(t):
        t = np.asarray(t, dtype=np.float64)
        inside = (t >= a) & (t < a + 1)
        d = (np.exp(2j * np.pi * np.multiply.outer(t, ks)) @ (2j * np.pi * ks * cs)).real
        return np.where(inside, d, 0.0)

    return WeightFunction(
        kind="trig_polynomial",
        support=(a, a + 1.0),
        value=value,
        derivative=derivative,
        integral=float(coeffs.get(0, 0.0).real),
        discontinuities=2,
        closed=False,
        coeffs=dict(coeffs),
    )


def restricted(psi: WeightFunction, lo: float, hi: float) -> WeightFunction:
    """``psi * 1_[lo, hi]``: the indicator-adjusted weight, piecewise C^1."""
    from scipy import integrate

    a, b = max(psi.support[0], lo), min(psi.support[1], hi)
    if not a < b:
        raise ValueError("restriction leaves an empty support")

    def value(t):
        t = np.asarray(t, dtype=np.float64)
        return np.where((t >= lo) & (t <= hi), psi.value(t), 0.0)

    def derivative(t):
        t = np.asarray(t, dtype=np.float64)
        return np.where((t > lo) & (t < hi), psi.derivative(t), 0.0)

    jumps = sum(1 for edge in (lo, hi) if psi.support[0] < edge < psi.support[1])
    integral, _ = integrate.quad(lambda t: float(psi.value(np.array(t))), a, b, limit=200, epsabs=1e-13)
    return WeightFunction("indicator_adjusted", (a, b), value, derivative, integral, discontinuities=jumps)


def product(psi: WeightFunction, other: Callable, other_prime: Callable, support: tuple[float, float]) -> WeightFunction:
    from scipy import integrate

    a, b = max(psi.support[0], support[0]), min(psi.support[1], support[1])
    if not a < b:
        a = b = psi.support[0]

    def value(t):
        return psi.value(t) * other(t)

    def derivative(t):
        return psi.derivative(t) * other(t) + psi.value(t) * other_prime(t)

    integral = 0.0
    if a < b:
        integral, _ = integrate.quad(lambda t: float(value(np.array(t))), a, b, limit=200, epsabs=1e-13)
    return WeightFunction("product", (a, b) if a < b else (a, a + 1e-300), value, derivative, integral)


def from_spec(spec: str) -> WeightFunction:
    """``smooth_bump:a,b`` or ``triangle:a,b``."""
    kind, _, rest = spec.strip().partition(":")
    a, b = (float(v) for v in rest.split(","))
    if kind == "smooth_bump":
        return smooth_bump(a, b)
    if kind == "triangle":
        return triangle(a, b)
    raise ValueError(f"unknown weight {spec!r}")


@dataclass(frozen=True)
class PartitionOfUnity:
    """Shifted smooth pieces ``Delta_j(t) = Delta(t - j step)`` summing to one.

    ``Delta(t) = H(t/step + 1) - H(t/step)`` with H the smooth step, so
    ``Delta`` is supported on [-step, step] and the sum over j telescopes.
    """

    step: float

    def piece(self, j: int) -> Callable[[np.ndarray], np.ndarray]:
        def delta(t):
            s = np.asarray(t, dtype=np.float64) / self.step - j
            return smooth_step(s + 1.0) - smooth_step(s)

        return delta

    def piece_prime(self, j: int) -> Callable[[np.ndarray], np.ndarray]:
        def delta_prime(t):
            s = np.asarray(t, dtype=np.float64) / self.step - j
            return (smooth_step_prime(s + 1.0) - smooth_step_prime(s)) / self.step

        return delta_prime

    def support(self, j: int) -> tuple[float, float]:
        return ((j - 1) * self.step, (j + 1) * self.step)

    def indices_meeting(self, a: float, b: float) -> range:
        return range(math.floor(a / self.step) - 1, math.ceil(b / self.step) + 2)

    def total(self, t, indices: range) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        return sum(self.piece(j)(t) for j in indices)

    @property
    def derivative_sup(self) -> float:
        return _grid_max(lambda t: np.abs(self.piece_prime(0)(t)), (-self.step, self.step))

    def split(self, psi: WeightFunction) -> list[WeightFunction]:
        """The pieces ``psi * Delta_j`` whose supports meet supp(psi)."""
        a, b = psi.support
        return [
            product(psi, self.piece(j), self.piece_prime(j), self.support(j))
            for j in self.indices_meeting(a, b)
            if self.support(j)[1] > a and self.support(j)[0] < b
        ]


def partition_of_unity(step: float) -> PartitionOfUnity:
    if not step > 0:
        raise ValueError("step must be positive")
    return PartitionOfUnity(step)
