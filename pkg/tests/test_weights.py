import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from asl2lab import weights as W


def quad(psi):
    a, b = psi.support
    return integrate.quad(lambda t: float(psi(np.array(t))), a, b, limit=200, epsabs=1e-13)[0]


@pytest.mark.parametrize(
    "psi",
    [W.smooth_bump(0, 2), W.smooth_bump(-1, 3), W.triangle(0, 1), W.triangle(-2, 0.5)],
    ids=["bump02", "bump-13", "tri01", "tri-2"],
)
def test_integrals_against_quadrature(psi):
    assert psi.integral == pytest.approx(quad(psi), abs=1e-10)


def test_bump_integral_value():
    # independent check through mpmath at high precision
    import mpmath

    mpmath.mp.dps = 30
    exact = mpmath.quad(lambda s: mpmath.e ** (1 - 1 / (1 - s * s)), [-1, 0, 1])
    assert W.bump_integral() == pytest.approx(float(exact), abs=1e-13)


def test_triangle_norms():
    for a, b in [(0, 1), (0, 2), (-1, 3)]:
        psi = W.triangle(a, b)
        assert psi.sup_norm == pytest.approx(1.0)
        assert psi.w1_inf_norm == pytest.approx(1 + 2 / (b - a), rel=1e-9)


def test_smooth_bump_derivative_finite_difference():
    psi = W.smooth_bump(0, 2)
    t = np.linspace(0.05, 1.95, 101)
    h = 1e-6
    fd = (psi(t + h) - psi(t - h)) / (2 * h)
    assert np.allclose(psi.derivative(t), fd, atol=1e-6)


def test_trig_polynomial_is_half_open():
    psi = W.trig_polynomial({0: 1.0, 1: 0.25, -1: 0.25})
    assert psi(np.array(0.0)) == pytest.approx(1.5)
    assert psi(np.array(1.0)) == 0.0
    assert psi.integral == 1.0 and psi.discontinuities == 2


def test_restricted_weight():
    psi = W.restricted(W.smooth_bump(0, 2), 0.5, 1.0)
    assert psi.kind == "indicator_adjusted" and psi.discontinuities == 2
    assert psi.integral == pytest.approx(quad(psi), abs=1e-10)


def test_from_spec():
    assert W.from_spec("triangle:0,2").integral == 1.0
    assert W.from_spec(W.smooth_bump(0, 2).spec()).support == (0, 2)
    with pytest.raises(ValueError):
        W.from_spec("gaussian:0,1")


def test_smooth_step_limits():
    assert np.array_equal(W.smooth_step(np.array([-1.0, 0.0, 1.0, 2.0])), [0, 0, 1, 1])
    assert W.smooth_step(np.array(0.5)) == pytest.approx(0.5)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(-20, 20))
def test_partition_sums_to_one(step, t0):
    pou = W.partition_of_unity(step)
    t = t0 + np.linspace(-1, 1, 257)
    total = pou.total(t, pou.indices_meeting(t.min(), t.max()))
    assert np.abs(total - 1).max() < 1e-10


def test_partition_half_step_at_origin():
    pou = W.partition_of_unity(0.5)
    assert pou.total(np.array(0.0), range(-3, 4)) == pytest.approx(1.0, abs=1e-10)
    assert pou.support(2) == (0.5, 1.5)
    with pytest.raises(ValueError):
        W.partition_of_unity(0.0)


def test_split_reconstructs_weight():
    psi = W.smooth_bump(0, 2)
    pieces = W.partition_of_unity(0.3).split(psi)
    t = np.linspace(-0.5, 2.5, 1001)
    assert np.allclose(sum(p(t) for p in pieces), psi(t), atol=1e-12)
    assert sum(p.integral for p in pieces) == pytest.approx(psi.integral, abs=1e-10)


def test_product_norm_bound():
    # ||psi Delta||_{W^{1,inf}} <= ||psi||_{W^{1,inf}} (1 + sup|Delta'|)
    psi = W.smooth_bump(0, 2)
    pou = W.partition_of_unity(0.25)
    bound = psi.w1_inf_norm * (1 + pou.derivative_sup)
    for piece in pou.split(psi):
        assert piece.w1_inf_norm <= bound + 1e-12
