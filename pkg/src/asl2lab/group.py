"""The affine special linear group ASL(2, R) = SL(2, R) x| R^2.

Elements are pairs ``(m, x)`` of a 2x2 matrix of determinant one and a row
vector. The product is ``(m, x) . (m', x') = (m m', x m' + x')``, so that
``Z^2 m + x`` is the affine lattice attached to ``(m, x)`` and left
multiplication by integer elements permutes the points of that lattice.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

# Renormalise by sqrt(det) once the drift exceeds this.
DET_DRIFT_TOL = 1e-13


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GroupElement:
    m: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        m = _frozen(self.m)
        x = _frozen(self.x)
        if m.shape != (2, 2) or x.shape != (2,):
            raise ValueError(f"bad shapes: m {m.shape}, x {x.shape}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "x", x)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def __repr__(self) -> str:
        return f"GroupElement(m={self.m.tolist()}, x={self.x.tolist()})"

    @property
    def det(self) -> float:
        m = self.m
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    def embed(self) -> np.ndarray:
        """Coordinates in R^6: the four matrix entries then the affine part."""
        return np.concatenate([self.m.ravel(), self.x])

    def allclose(self, other: "GroupElement", atol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.embed() - other.embed())) <= atol)


def identity() -> GroupElement:
    return GroupElement(np.eye(2), np.zeros(2))


def translation(x) -> GroupElement:
    return GroupElement(np.eye(2), x)


def linear(m) -> GroupElement:
    return GroupElement(m, np.zeros(2))


def _renormalize(m: np.ndarray) -> np.ndarray:
    (p, q), (r, s) = m.tolist()
    det = p * s - q * r
    if abs(det - 1.0) > DET_DRIFT_TOL and det > 0:
        m = m / math.sqrt(det)
    return m


def mul(a: GroupElement, b: GroupElement) -> GroupElement:
    m = _renormalize(a.m @ b.m)
    return GroupElement(m, a.x @ b.m + b.x)


def inv(g: GroupElement) -> GroupElement:
    (p, q), (r, s) = g.m
    m_inv = np.array([[s, -q], [-r, p]])
    return GroupElement(m_inv, -(g.x @ m_inv))


def u(t: float) -> GroupElement:
    return linear([[1.0, t], [0.0, 1.0]])


def Phi(s: float) -> GroupElement:
    return linear([[math.exp(s / 2), 0.0], [0.0, math.exp(-s / 2)]])


def a(y: float) -> GroupElement:
    if not y > 0:
        raise ValueError(f"a(y) needs y > 0, got {y}")
    # Phi(log y), written with sqrt so that a(1) is exactly the identity.
    r = math.sqrt(y)
    return linear([[r, 0.0], [0.0, 1.0 / r]])


def k(theta: float) -> GroupElement:
    c, s = math.cos(theta), math.sin(theta)
    return linear([[c, -s], [s, c]])


class LieGenerator(enum.Enum):
    """Basis of sl(2, R) + R^2."""

    X1 = "X1"  # [[0, 1], [0, 0]]
    X2 = "X2"  # [[0, 0], [1, 0]]
    X3 = "X3"  # diag(1, -1)
    X4 = "X4"  # translation (1, 0)
    X5 = "X5"  # translation (0, 1)

    def algebra_element(self) -> tuple[np.ndarray, np.ndarray]:
        zero_m, zero_x = np.zeros((2, 2)), np.zeros(2)
        if self is LieGenerator.X1:
            return np.array([[0.0, 1.0], [0.0, 0.0]]), zero_x
        if self is LieGenerator.X2:
            return np.array([[0.0, 0.0], [1.0, 0.0]]), zero_x
        if self is LieGenerator.X3:
            return np.array([[1.0, 0.0], [0.0, -1.0]]), zero_x
        if self is LieGenerator.X4:
            return zero_m, np.array([1.0, 0.0])
        return zero_m, np.array([0.0, 1.0])


GENERATORS = tuple(LieGenerator)


def exp_generator(gen: LieGenerator, t: float) -> GroupElement:
    """Closed-form exponential of ``t * gen``."""
    if gen is LieGenerator.X1:
        return u(t)
    if gen is LieGenerator.X2:
        return linear([[1.0, 0.0], [t, 1.0]])
    if gen is LieGenerator.X3:
        return Phi(2 * t)
    if gen is LieGenerator.X4:
        return translation([t, 0.0])
    return translation([0.0, t])


@dataclass(frozen=True)
class CartanFactors:
    theta1: float
    s: float
    theta2: float

    def reconstruct(self) -> GroupElement:
        return k(self.theta1) * Phi(self.s) * k(self.theta2)


def cartan(m) -> CartanFactors:
    """KAK factors of an SL(2, R) matrix: ``m = k(theta1) Phi(s) k(theta2)``.

    Closed-form 2x2 SVD. With determinant one the singular values are
    ``Q + R`` and ``Q - R`` with ``Q^2 - R^2 = 1``, hence ``s = 2 asinh(R)``;
    this avoids both log(1 + tiny) and the cancelling subtraction ``Q - R``.
    """
    (p, q), (r, w) = np.asarray(m, dtype=np.float64)
    e, f = (p + w) / 2, (p - w) / 2
    g, h = (r + q) / 2, (r - q) / 2
    a1 = math.atan2(g, f)
    a2 = math.atan2(h, e)
    s = 2 * math.asinh(math.hypot(f, g))
    return CartanFactors(theta1=(a2 + a1) / 2, s=s, theta2=(a2 - a1) / 2)


def cartan_of_u(t: float) -> CartanFactors:
    return cartan(u(t).m)


def dist_proxy(g1: GroupElement, g2: GroupElement) -> float:
    """Sup-norm distance from the identity of ``g1^-1 g2`` in R^6.

    Left-invariant by construction; only meaningful for nearby pairs, where
    it is comparable to any left-invariant Riemannian distance.
    """
    h = mul(inv(g1), g2)
    return float(np.max(np.abs(h.embed() - identity().embed())))
