"""Horocycle sections n(t) = (I, xi(t)) u(t) and their window constants."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .group import GroupElement, mul, translation, u


class Family(enum.Enum):
    ZERO = "zero"
    PARABOLIC = "parabolic"
    CONSTANT = "constant"
    CUSTOM = "custom"


class Linearity(enum.Enum):
    """Answer of the rational-linearity predicate; custom sections are undecidable."""

    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class DiophantineMeta:
    K: float
    c: float


@dataclass(frozen=True, eq=False)
class HorocycleSection:
    """A horocycle section given by its displacement ``xi``.

    ``xi`` maps an array of times to a pair of arrays (xi1, xi2). Constant
    sections keep their exact coefficients in ``coeffs`` (as Fractions when
    rational) so that rational linearity can be decided exactly.
    """

    family: Family
    xi: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    name: str
    period: Optional[float] = None
    diophantine: Optional[DiophantineMeta] = None
    coeffs: tuple = ()
    lambda_prime: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def xi_at(self, t) -> tuple[np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=np.float64)
        x1, x2 = self.xi(t)
        return np.broadcast_to(x1, t.shape).astype(np.float64), np.broadcast_to(x2, t.shape).astype(np.float64)

    def __repr__(self) -> str:
        return f"HorocycleSection({self.name})"


def zero() -> HorocycleSection:
    return HorocycleSection(
        family=Family.ZERO,
        xi=lambda t: (np.zeros_like(t), np.zeros_like(t)),
        name="zero",
        period=1.0,
        coeffs=(Fraction(0), Fraction(0)),
        lambda_prime=lambda t: np.zeros_like(t),
    )


def parabolic() -> HorocycleSection:
    """xi(t) = (t/2, -t^2/4); Lambda(t) = t^2/4, period 2."""
    return HorocycleSection(
        family=Family.PARABOLIC,
        xi=lambda t: (t / 2, -t * t / 4),
        name="parabolic",
        period=2.0,
        lambda_prime=lambda t: t / 2,
    )


_CLASSICAL_TYPES = {
    # 1, sqrt2, sqrt3 are algebraic and Q-linearly independent, so by Schmidt's
    # subspace theorem (sqrt2, sqrt3) has type 3/2 + eps for every eps > 0.
    # The constant c(eps) is ineffective; the value here is only a label.
    "sqrt2,sqrt3": DiophantineMeta(K=1.51, c=0.01),
}


def _parse_coeff(text: str):
    text = text.strip()
    if text.startswith("sqrt"):
        return math.sqrt(float(text[4:].strip("()")))
    try:
        return Fraction(text)
    except ValueError:
        return float(text)


def constant(xi1, xi2, diophantine: Optional[DiophantineMeta] = None, name: Optional[str] = None) -> HorocycleSection:
    """Constant displacement. Pass :class:`fractions.Fraction` (or ints) for
    coefficients that should count as rational; plain floats count as
    irrational."""
    v1, v2 = float(xi1), float(xi2)
    return HorocycleSection(
        family=Family.CONSTANT,
        xi=lambda t: (np.full_like(t, v1), np.full_like(t, v2)),
        name=name or f"constant:{xi1},{xi2}",
        diophantine=diophantine,
        coeffs=(xi1, xi2),
        lambda_prime=lambda t: np.full_like(t, v1),
    )


def strom() -> HorocycleSection:
    return constant(math.sqrt(2), math.sqrt(3), _CLASSICAL_TYPES["sqrt2,sqrt3"], name="constant:sqrt2,sqrt3")


def custom(xi: Callable, name: str = "custom", period: Optional[float] = None) -> HorocycleSection:
    return HorocycleSection(family=Family.CUSTOM, xi=xi, name=name, period=period)


def from_name(spec: str) -> HorocycleSection:
    """``zero``, ``parabolic`` or ``constant:a,b`` (a, b rationals like ``1/2``
    or ``sqrtN``)."""
    spec = spec.strip()
    if spec == "zero":
        return zero()
    if spec == "parabolic":
        return parabolic()
    if spec.startswith("constant:"):
        raw = spec.split(":", 1)[1]
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != 2:
            raise ValueError(f"constant section needs two coefficients: {spec!r}")
        if raw.replace(" ", "") == "sqrt2,sqrt3":
            return strom()
        return constant(_parse_coeff(parts[0]), _parse_coeff(parts[1]), name=spec)
    raise ValueError(f"unknown section {spec!r}")


def eval_section(n: HorocycleSection, t: float) -> GroupElement:
    x1, x2 = n.xi_at(t)
    return mul(translation([float(x1), float(x2)]), u(t))


def lambda_of(n: HorocycleSection, t):
    x1, x2 = n.xi_at(t)
    out = np.asarray(t) * x1 + x2
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SectionWindow:
    alpha: float
    beta: float
    L: float
    W: float
    A_xi: float
    sup_xi1: float
    lipschitz: float


def _grid_sup(fun: Callable[[np.ndarray], np.ndarray], alpha: float, beta: float, n: int = 10_000) -> float:
    t = np.linspace(alpha, beta, n)
    vals = np.abs(fun(t))
    i = int(np.argmax(vals))
    lo, hi = t[max(i - 1, 0)], t[min(i + 1, n - 1)]
    fine = np.linspace(lo, hi, 10 * 100)
    return float(max(vals[i], np.abs(fun(fine)).max()))


def _numeric_lambda_prime(n: HorocycleSection) -> Callable[[np.ndarray], np.ndarray]:
    def deriv(t):
        h = 1e-6 * np.maximum(1.0, np.abs(t))
        return (lambda_of(n, t + h) - lambda_of(n, t - h)) / (2 * h)

    return deriv


def window_constants(n: HorocycleSection, alpha: float, beta: float) -> SectionWindow:
    """``A(xi) = sup |xi_1| + Lip(Lambda)`` on [alpha, beta] plus L and W."""
    if not alpha < beta:
        raise ValueError("need alpha < beta")
    if n.family is Family.ZERO:
        sup1 = lip = 0.0
    elif n.family is Family.CONSTANT:
        sup1 = lip = abs(float(n.coeffs[0]))
    elif n.family is Family.PARABOLIC:
        # |xi_1| = |t|/2 and Lambda' = t/2 share the same supremum.
        sup1 = lip = max(abs(alpha), abs(beta)) / 2
    else:
        sup1 = _grid_sup(lambda t: n.xi_at(t)[0], alpha, beta)
        lip = _grid_sup(_numeric_lambda_prime(n), alpha, beta)
    return SectionWindow(
        alpha=alpha,
        beta=beta,
        L=max(abs(alpha), abs(beta), 1.0),
        W=beta - alpha,
        A_xi=sup1 + lip,
        sup_xi1=sup1,
        lipschitz=lip,
    )


def is_rationally_linear(n: HorocycleSection) -> Linearity:
    if n.family is Family.ZERO:
        return Linearity.TRUE
    if n.family is Family.PARABOLIC:
        return Linearity.FALSE
    if n.family is Family.CONSTANT:
        rational = all(isinstance(c, (int, Fraction)) for c in n.coeffs)
        return Linearity.TRUE if rational else Linearity.FALSE
    return Linearity.UNKNOWN


def period_element(n: HorocycleSection) -> Optional[GroupElement]:
    """Integer element gamma with n(t + P) = gamma n(t), for built-in families."""
    if n.family is Family.PARABOLIC:
        return GroupElement([[1.0, 2.0], [0.0, 1.0]], [1.0, 1.0])
    if n.family is Family.ZERO:
        return GroupElement([[1.0, 1.0], [0.0, 1.0]], [0.0, 0.0])
    return None


def _batch_section(n: HorocycleSection, t: np.ndarray, y: np.ndarray):
    """Ambient ``n(t) a(y)`` for arrays: matrices (k, 2, 2) and affine parts (k, 2)."""
    ry = np.sqrt(y)
    m = np.zeros((t.shape[0], 2, 2))
    m[:, 0, 0] = ry
    m[:, 0, 1] = t / ry
    m[:, 1, 1] = 1.0 / ry
    x1, x2 = n.xi_at(t)
    # (I, xi) u(t) a(y) has affine part xi u(t) a(y) = xi m.
    x = np.stack([x1 * m[:, 0, 0], x1 * m[:, 0, 1] + x2 * m[:, 1, 1]], axis=1)
    return m, x


def _batch_dist(m1, x1, m2, x2) -> np.ndarray:
    # g1^{-1} g2 = (m1^{-1} m2, (x2 - x1) m1^{-1} m2)
    inv1 = np.linalg.inv(m1)
    h = inv1 @ m2
    hx = np.einsum("ki,kij->kj", x2 - x1, h)
    dm = np.abs(h - np.eye(2)).reshape(-1, 4).max(axis=1)
    return np.maximum(dm, np.abs(hx).max(axis=1))


def distance_ratio_first(n: HorocycleSection, window: SectionWindow, t, m, N) -> np.ndarray:
    """``dist(n(t)a(1/N)u(m), n(t+m/N)a(1/N)) / ((1+m) N^{-1/2} A(xi))`` for arrays."""
    t, m, N = (np.asarray(v, dtype=np.float64) for v in (t, m, N))
    m1, x1 = _batch_section(n, t, 1.0 / N)
    # right multiplication by u(m): second column gains m times the first
    m1[:, :, 1] += m[:, None] * m1[:, :, 0]
    x1 = x1.copy()
    x1[:, 1] += m * x1[:, 0]
    m2, x2 = _batch_section(n, t + m / N, 1.0 / N)
    return _batch_dist(m1, x1, m2, x2) / ((1.0 + m) * window.A_xi / np.sqrt(N))


def distance_ratio_second(n: HorocycleSection, window: SectionWindow, s, t, N) -> np.ndarray:
    """``dist(n(s)a(1/N), n(t)a(1/N)) / (N|s-t| + (1+|s-t|) A(xi) N^{-1/2})``."""
    s, t, N = (np.asarray(v, dtype=np.float64) for v in (s, t, N))
    m1, x1 = _batch_section(n, s, 1.0 / N)
    m2, x2 = _batch_section(n, t, 1.0 / N)
    d = np.abs(s - t)
    return _batch_dist(m1, x1, m2, x2) / (N * d + (1.0 + d) * window.A_xi / np.sqrt(N))
