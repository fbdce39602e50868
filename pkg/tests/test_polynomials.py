from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as C

from gqsp_power.polynomials import (
    MonomialPoly,
    UnitCirclePoly,
    binomial,
    chebyshev_to_circle,
    circle_max,
    eval_on_circle,
    monomial_to_chebyshev,
    partition_rescale,
    power_to_chebyshev,
    qfsm_poly,
    qii_poly,
    qpi_poly,
    qpl_poly,
)


def test_power_to_chebyshev_table():
    np.testing.assert_allclose(power_to_chebyshev(1), [0, 1])
    np.testing.assert_allclose(power_to_chebyshev(2), [0.5, 0, 0.5])
    np.testing.assert_allclose(power_to_chebyshev(3), [0, 0.75, 0, 0.25])
    np.testing.assert_allclose(power_to_chebyshev(0), [1])


def test_power_to_chebyshev_against_numpy():
    for n in range(0, 20):
        ref = C.poly2cheb(np.r_[np.zeros(n), 1.0])
        np.testing.assert_allclose(power_to_chebyshev(n), ref, atol=1e-14)


def test_monomial_to_chebyshev():
    np.testing.assert_allclose(monomial_to_chebyshev(MonomialPoly([0, 0, 1])), [0.5, 0, 0.5])
    np.testing.assert_allclose(monomial_to_chebyshev(MonomialPoly([1, 1])), [1, 1])
    np.testing.assert_allclose(monomial_to_chebyshev(qpi_poly(4)), [3 / 8, 0, 1 / 2, 0, 1 / 8])


def test_binomial_is_exact():
    assert binomial(50, 25) == float(126410606437752)
    assert binomial(3, 5) == 0


def test_method_polynomials():
    np.testing.assert_array_equal(qpi_poly(1).coefficients, [0, 1])
    np.testing.assert_array_equal(qpi_poly(4).coefficients, [0, 0, 0, 0, 1])
    np.testing.assert_array_equal(qpl_poly(0, [2]).coefficients, [1, 2])
    np.testing.assert_array_equal(qpl_poly(2, [1, -1]).coefficients, [0, 0, 1, 1, -1])
    np.testing.assert_allclose(qii_poly(1, 2.0, 2).coefficients, [-1 / 2, -1 / 4, -1 / 8])
    np.testing.assert_allclose(qii_poly(1, 2.0, 0).coefficients, [-1 / 2])
    # (x + 3)^-2 = 1/9 - 2x/27 + ...
    np.testing.assert_allclose(qii_poly(2, -3.0, 1).coefficients, [1 / 9, -2 / 27])
    np.testing.assert_allclose(qfsm_poly(1, 1.0).coefficients, [1, 0, -1])
    np.testing.assert_allclose(qfsm_poly(2, 0.5).coefficients, [1, 0, -1, 0, 0.25])


def test_qii_converges_to_resolvent():
    x = np.linspace(-1, 1, 33)
    for n in (1, 2, 3):
        p = qii_poly(n, -1.5, 120)
        np.testing.assert_allclose(p(x), (x + 1.5) ** (-n), rtol=1e-11)


def test_circle_embedding_is_chebyshev():
    # P(e^{it}) restricted to real part on the circle equals sum a_k cos(k t)
    a = np.array([0.3, -0.2, 0.1, 0.05])
    t = np.linspace(0, np.pi, 17)
    vals = chebyshev_to_circle(a)(np.exp(1j * t))
    np.testing.assert_allclose(vals.real, C.chebval(np.cos(t), a), atol=1e-14)


def test_eval_on_circle():
    np.testing.assert_allclose(eval_on_circle(UnitCirclePoly([1]), 4), np.ones(4))
    np.testing.assert_allclose(eval_on_circle(UnitCirclePoly([0, 1]), 4), [1, 1j, -1, -1j], atol=1e-15)


def test_partition_rescale_examples():
    p, info = partition_rescale(UnitCirclePoly([0, 1]), 0.0)
    assert info.alpha == pytest.approx(1.0)
    p, info = partition_rescale(UnitCirclePoly([1, 1]), 0.0)
    assert info.alpha == pytest.approx(2.0)
    with pytest.raises(ValueError):
        partition_rescale(UnitCirclePoly([0, 0]))


def test_unit_circle_poly_keeps_padding():
    p = UnitCirclePoly([1, 0, 0])
    assert p.length == 3 and p.degree == 0
    assert UnitCirclePoly.from_json(p.to_json()).length == 3


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_rescaled_max_below_one(d, seed):
    rng = np.random.default_rng(seed)
    p = UnitCirclePoly(rng.normal(size=d + 1) + 1j * rng.normal(size=d + 1))
    bounded, info = partition_rescale(p)
    z = np.exp(2j * np.pi * np.arange(8192) / 8192)
    assert np.max(np.abs(bounded(z))) < 1.0
    assert info.grid_max == pytest.approx(circle_max(p), rel=1e-12)


def test_power_to_chebyshev_exact_against_fractions():
    # 2^(1-n) C(n, (n-k)/2) with the k = 0 term halved
    n = 6
    expected = [Fraction(10, 32), 0, Fraction(15, 32), 0, Fraction(6, 32), 0, Fraction(1, 32)]
    np.testing.assert_allclose(power_to_chebyshev(n), [float(e) for e in expected], atol=0)
