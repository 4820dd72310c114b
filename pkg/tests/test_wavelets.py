import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logiwave.numeric_core import bernoulli
from logiwave.wavelets import (ChildParams, LogisticWavelet, NonConvergenceError, QuadratureSettings,
                               admissibility_integral, child_eval, grosset_veselov_check,
                               grosset_veselov_rhs, l2_norm_squared, mother_eval, psi2_closed_form,
                               sample_mother, simpson, unnormalized_l2_norm_squared)

PSI2 = LogisticWavelet(2)


def test_norm_constant():
    for n in range(2, 12):
        w = LogisticWavelet(n)
        assert w.norm_constant**2 * abs(float(bernoulli(2 * n))) == pytest.approx(1.0, rel=1e-14)
    assert PSI2.norm_constant == pytest.approx(math.sqrt(30), rel=1e-15)


def test_order_validation():
    with pytest.raises(ValueError, match="order must be >= 2"):
        LogisticWavelet(1)
    with pytest.raises(ValueError):
        ChildParams(0.0)
    with pytest.raises(ValueError):
        ChildParams(-2.0)


def test_mother_matches_closed_form():
    t = np.linspace(-30, 30, 6001)
    ref = psi2_closed_form(t)
    got = mother_eval(PSI2, t)
    assert np.allclose(got, ref, rtol=1e-12, atol=1e-300)
    assert mother_eval(PSI2, 0.0) == 0.0
    assert float(mother_eval(PSI2, 1.0)) == pytest.approx(psi2_closed_form(1.0), rel=1e-12)


def test_closed_form_direct_expression():
    # the expression as written, safe for moderate t
    t = np.linspace(-5, 5, 101)
    e = np.exp(-t)
    direct = math.sqrt(30) * (np.exp(-2 * t) - e) / (1 + e) ** 3
    assert np.allclose(psi2_closed_form(t), direct, rtol=1e-12, atol=1e-15)


def test_psi2_is_odd():
    t = np.linspace(0, 20, 401)
    assert np.allclose(mother_eval(PSI2, -t), -mother_eval(PSI2, t), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_derivative_parity(n):
    # x(t) - 1/2 is odd, so x^(n)(-t) = (-1)^(n+1) x^(n)(t)
    t = np.linspace(0.1, 12, 120)
    w = LogisticWavelet(n)
    assert np.allclose(mother_eval(w, -t), (-1) ** (n + 1) * mother_eval(w, t), rtol=1e-11, atol=1e-14)


@pytest.mark.parametrize("n", range(2, 7))
def test_unit_norm(n):
    res = l2_norm_squared(LogisticWavelet(n))
    assert abs(res.value - 1.0) < 1e-8
    assert res.error < 1e-10


def test_unnormalized_norms():
    assert unnormalized_l2_norm_squared(1).value == pytest.approx(1 / 6, abs=1e-9)
    assert unnormalized_l2_norm_squared(2).value == pytest.approx(1 / 30, abs=1e-12)


@pytest.mark.parametrize("n", range(2, 7))
def test_admissibility(n):
    assert abs(admissibility_integral(LogisticWavelet(n)).value) < 1e-10


def test_admissibility_tail_term():
    # x^(n-1) odd (n = 3) leaves a boundary term of order exp(-L) without the exact tails
    w = LogisticWavelet(3)
    q = QuadratureSettings(half_width=8.0)
    bare = admissibility_integral(w, q, tails=False)
    full = admissibility_integral(w, q)
    assert abs(full.value) < 1e-12
    assert abs(full.tail) > 1e-5
    assert bare.value == pytest.approx(-full.tail, abs=1e-12)


@pytest.mark.parametrize("a,b", [(6.4, 33.0), (1.0, 0.0), (0.5, -3.0), (30.0, 120.0)])
def test_child_norm(a, b):
    c = ChildParams(a, b)
    res = simpson(lambda t: child_eval(PSI2, c, t) ** 2, b - 15 * a, b + 15 * a, 1e-12)
    assert abs(res.value - 1.0) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 30.0), st.floats(-200.0, 200.0))
def test_child_norm_random(a, b):
    res = simpson(lambda t: child_eval(PSI2, ChildParams(a, b), t) ** 2, b - 15 * a, b + 15 * a, 1e-10)
    assert abs(res.value - 1.0) < 1e-6


def test_child_identities():
    t = np.linspace(-10, 10, 41)
    assert np.array_equal(child_eval(PSI2, ChildParams(1.0, 0.0), t), mother_eval(PSI2, t))
    assert child_eval(PSI2, ChildParams(1.0, 33.0), 33.0) == 0.0


@pytest.mark.parametrize("n,rhs", [(1, Fraction(4, 3)), (2, Fraction(32, 30)), (3, Fraction(128, 42))])
def test_grosset_veselov_chain(n, rhs):
    lhs, r = grosset_veselov_check(n)
    assert r == pytest.approx(float(rhs), rel=1e-15)
    assert abs(lhs - r) <= 1e-6 * abs(r)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_grosset_veselov_finite_difference(n):
    lhs, r = grosset_veselov_check(n, method="finite-difference")
    assert abs(lhs - r) <= 1e-6 * abs(r)


def test_grosset_veselov_sech4_direct():
    # n = 1 without any derivative machinery: integral of sech^4
    res = simpson(lambda t: 1.0 / np.cosh(t) ** 4, -20, 20, 1e-13)
    assert res.value == pytest.approx(4 / 3, rel=1e-12)
    assert grosset_veselov_rhs(1) == 4 / 3


def test_grosset_veselov_errors():
    with pytest.raises(ValueError):
        grosset_veselov_check(0)
    with pytest.raises(ValueError):
        grosset_veselov_check(9, method="finite-difference")
    with pytest.raises(ValueError):
        grosset_veselov_check(2, method="spline")


def test_nonconvergence_reported():
    q = QuadratureSettings(tolerance=1e-30, max_refinements=2)
    with pytest.raises(NonConvergenceError) as info:
        l2_norm_squared(PSI2, q)
    assert info.value.value == pytest.approx(1.0, abs=1e-3)


def test_quadrature_settings_validation():
    with pytest.raises(ValueError):
        QuadratureSettings(tolerance=0)
    with pytest.raises(ValueError):
        QuadratureSettings(half_width=5)
    assert QuadratureSettings().width_for(3) == 19.0


def test_sample_mother():
    s = sample_mother(PSI2, -7, 7, 3)
    assert list(s.t) == [-7.0, 0.0, 7.0]
    assert s.psi[1] == 0.0
    s = sample_mother(PSI2, -7, 7, 1001)
    assert s.t[0] == -7 and s.t[-1] == 7
    k = np.argmax(s.psi), np.argmin(s.psi)
    assert np.allclose(s.psi[list(k)], psi2_closed_form(s.t[list(k)]), rtol=1e-12)
    assert len(sample_mother(PSI2, 0, 1, 2).t) == 2
    with pytest.raises(ValueError):
        sample_mother(PSI2, 1, 1, 5)
    with pytest.raises(ValueError):
        sample_mother(PSI2, 0, 1, 1)
