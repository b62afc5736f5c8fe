import math
from fractions import Fraction

import numpy as np
import pytest

from asl2lab import group as G
from asl2lab import sections as S
from asl2lab.modular_space import reduce


def test_eval_section_examples():
    assert S.eval_section(S.zero(), 0.3).allclose(G.u(0.3), atol=1e-15)
    g = S.eval_section(S.parabolic(), 0.0)
    assert g.allclose(G.identity(), atol=0)
    g = S.eval_section(S.constant(0.25, -1.0), 2.0)
    assert np.allclose(g.m, [[1, 2], [0, 1]]) and np.allclose(g.x, [0.25, -0.5])


def test_lambda_examples():
    assert S.lambda_of(S.parabolic(), 2.0) == pytest.approx(1.0)
    assert S.lambda_of(S.constant(2, 5), 3.0) == pytest.approx(11.0)
    assert np.allclose(S.lambda_of(S.parabolic(), np.array([0.0, 4.0])), [0.0, 4.0])


def test_window_constants_examples():
    w = S.window_constants(S.parabolic(), -1, 1)
    assert w.A_xi == pytest.approx(1.0)
    assert (w.L, w.W) == (1.0, 2.0)
    assert S.window_constants(S.strom(), 0, 2).A_xi == pytest.approx(2 * math.sqrt(2))
    assert S.window_constants(S.zero(), 0, 1).A_xi == 0.0
    with pytest.raises(ValueError):
        S.window_constants(S.zero(), 1, 1)


def test_numeric_window_matches_closed_form():
    # the same parabola passed as a custom section goes through the grid path
    par = S.custom(lambda t: (t / 2, -t * t / 4), name="par")
    assert S.window_constants(par, -1, 1).A_xi == pytest.approx(1.0, rel=1e-6)
    assert S.window_constants(par, 0.5, 3).A_xi == pytest.approx(3.0, rel=1e-6)


def test_rational_linearity():
    assert S.is_rationally_linear(S.zero()) is S.Linearity.TRUE
    assert S.is_rationally_linear(S.constant(Fraction(1, 2), Fraction(1, 3))) is S.Linearity.TRUE
    assert S.is_rationally_linear(S.from_name("constant:1/2,2")) is S.Linearity.TRUE
    assert S.is_rationally_linear(S.strom()) is S.Linearity.FALSE
    assert S.is_rationally_linear(S.parabolic()) is S.Linearity.FALSE
    assert S.is_rationally_linear(S.custom(lambda t: (t, t))) is S.Linearity.UNKNOWN


def test_from_name():
    assert S.from_name("parabolic").family is S.Family.PARABOLIC
    s = S.from_name("constant:sqrt2,sqrt3")
    assert s.diophantine is not None and s.diophantine.K > 1.5
    with pytest.raises(ValueError):
        S.from_name("constant:1")
    with pytest.raises(ValueError):
        S.from_name("spiral")


@pytest.mark.parametrize("sec", [S.parabolic(), S.zero()], ids=["parabolic", "zero"])
def test_period_element(sec):
    gamma = S.period_element(sec)
    rng = np.random.default_rng(0)
    for t in rng.uniform(-4, 4, 50):
        lhs = S.eval_section(sec, t + sec.period)
        rhs = G.mul(gamma, S.eval_section(sec, t))
        assert lhs.allclose(rhs, atol=1e-12)


def test_reduced_orbit_is_periodic():
    sec = S.parabolic()
    rng = np.random.default_rng(1)
    for t in rng.uniform(-3, 3, 200):
        y = 10 ** rng.uniform(-3, 0)
        p = reduce(G.mul(S.eval_section(sec, t + 2), G.a(y)))
        q = reduce(G.mul(S.eval_section(sec, t), G.a(y)))
        assert np.allclose(p.m_red, q.m_red, atol=1e-9)
        d = np.abs(p.x_red - q.x_red)
        assert np.all(np.minimum(d, 1 - d) < 1e-9)


def test_distance_ratios_match_scalar_and_stay_bounded():
    sec = S.parabolic()
    win = S.window_constants(sec, -1, 1)
    rng = np.random.default_rng(2)
    t = rng.uniform(-1, 1, 100)
    m = rng.uniform(0, 5, 100)
    N = 10 ** rng.uniform(2, 6, 100)
    r = S.distance_ratio_first(sec, win, t, m, N)
    assert np.all(np.isfinite(r)) and r.max() <= 1.0
    for i in range(5):
        g1 = G.mul(G.mul(S.eval_section(sec, t[i]), G.a(1 / N[i])), G.u(m[i]))
        g2 = G.mul(S.eval_section(sec, t[i] + m[i] / N[i]), G.a(1 / N[i]))
        want = G.dist_proxy(g1, g2) / ((1 + m[i]) * win.A_xi / math.sqrt(N[i]))
        assert r[i] == pytest.approx(want, abs=1e-9)
    s = rng.uniform(-1, 1, 100)
    r2 = S.distance_ratio_second(sec, win, s, t, N)
    assert np.all(np.isfinite(r2)) and r2.max() <= 1.0
