import math

import mpmath
import numpy as np
import pytest
import scipy.special as sp

from dirac_hartree.specialfun import (
    MAX_ARG,
    BesselDomainError,
    RootBracketError,
    RootTable,
    bessel_j,
    bessel_j_array,
    bessel_j_orders,
    bessel_j_series,
    dirac_secular_roots,
    dirichlet_roots,
    secular_function,
)

# frozen from mpmath.besselj at 30 digits / scipy brentq
K_PLUS_0 = (1.434695650819563, 4.680102554104634, 7.83600233515942)
K_MINUS_0 = 3.1128644954171802
K_PLUS_1 = 2.6298741119447144
J0_ZEROS = (2.404825557695773, 5.520078110286311)
J1_ZERO = 3.8317059702075125


@pytest.mark.parametrize("m", [0, 1, 2, 5, 13, 30, 64])
def test_matches_mpmath(m):
    xs = np.array([1e-3, 0.5, 3.7, 11.99, 12.01, 25.0, 60.0, 101.5, 150.0, 199.0])
    got = bessel_j_array(m, xs)
    for x, g in zip(xs, got):
        ref = float(mpmath.besselj(m, mpmath.mpf(float(x))))
        # absolute error relative to the envelope |J| <= 1
        assert abs(g - ref) <= 1e-14 * max(1.0, abs(ref)) + 5e-16


def test_matches_scipy_dense():
    x = np.linspace(0, MAX_ARG, 4001)
    table = bessel_j_orders(40, x)
    ref = sp.jv(np.arange(41)[:, None], x[None, :])
    assert np.max(np.abs(table - ref)) < 1e-13


def test_negative_order_reflection():
    x = np.linspace(0.1, 50, 50)
    for m in range(1, 8):
        np.testing.assert_allclose(bessel_j_array(-m, x), (-1) ** m * bessel_j_array(m, x),
                                   rtol=0, atol=0)
        np.testing.assert_allclose(bessel_j_array(-m, x), sp.jv(-m, x), atol=1e-14)


def test_values_at_zero():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(3, 0.0) == 0.0
    assert bessel_j(-2, 0.0) == 0.0


def test_sum_rule_and_recurrence():
    x = np.array([0.3, 7.0, 33.0, 120.0])
    J = bessel_j_orders(64, x)
    # J_0 + 2 sum J_2k = 1 up to the truncation of the order table
    s = J[0] + 2 * J[2::2].sum(axis=0)
    assert np.max(np.abs(s[:3] - 1)) < 5e-14  # float64 summation of ~30 terms
    # three-term recurrence J_{n-1} + J_{n+1} = (2n/x) J_n
    n = np.arange(1, 30)[:, None]
    lhs = J[n.ravel() - 1] + J[n.ravel() + 1]
    assert np.max(np.abs(lhs - 2 * n / x * J[n.ravel()])) < 1e-13


def test_series_agrees_for_small_arguments():
    x = np.linspace(0.01, 10, 200)
    for m in (0, 1, 4, 9):
        np.testing.assert_allclose(bessel_j_series(m, x), sp.jv(m, x), atol=1e-14)


def test_domain_errors():
    with pytest.raises(BesselDomainError):
        bessel_j(65, 1.0)
    with pytest.raises(BesselDomainError):
        bessel_j(0, 200.5)
    with pytest.raises(BesselDomainError):
        bessel_j(0, -1.0)
    with pytest.raises(BesselDomainError):
        bessel_j(1.5, 1.0)
    with pytest.raises(BesselDomainError):
        bessel_j_array(0, [np.nan])
    with pytest.raises(BesselDomainError):
        dirichlet_roots(-1, 3)


def test_dirichlet_roots_known_values():
    t0 = dirichlet_roots(0, 2)
    assert t0.roots == pytest.approx(J0_ZEROS, rel=1e-14)
    assert dirichlet_roots(1, 1)[0] == pytest.approx(J1_ZERO, rel=1e-14)
    assert t0.family == "dirichlet" and t0.order == 0 and len(t0) == 2


@pytest.mark.parametrize("m", [0, 3, 18])
def test_dirichlet_roots_match_scipy(m):
    t = dirichlet_roots(m, 24)
    np.testing.assert_allclose(t.as_array(), sp.jn_zeros(m, 24), rtol=1e-14)
    assert max(t.residuals) <= 1e-12


def test_dirichlet_interlacing():
    # j_{m,n} < j_{m+1,n} < j_{m,n+1}
    for m in range(0, 10):
        a = dirichlet_roots(m, 10).as_array()
        b = dirichlet_roots(m + 1, 10).as_array()
        assert np.all(a < b)
        assert np.all(b[:-1] < a[1:])


def test_high_order_root_reachable():
    t = dirichlet_roots(18, 24)
    assert t[23] == pytest.approx(sp.jn_zeros(18, 24)[-1], rel=1e-14)
    assert 101 < t[23] < 102


def test_dirac_roots_known_values():
    assert dirac_secular_roots(0, 1, 3).roots == pytest.approx(K_PLUS_0, rel=1e-14)
    assert dirac_secular_roots(0, -1, 1)[0] == pytest.approx(K_MINUS_0, rel=1e-14)
    assert dirac_secular_roots(1, 1, 1)[0] == pytest.approx(K_PLUS_1, rel=1e-14)


def test_dirac_roots_partner_relation():
    # J_m + J_{m+1} = 0 and J_{-m-1} - J_{-m} = 0 have the same roots
    for m in range(0, 6):
        a = dirac_secular_roots(m, -1, 8).as_array()
        b = dirac_secular_roots(-m - 1, 1, 8).as_array()
        np.testing.assert_allclose(a, b, rtol=1e-14)


def test_dirac_roots_against_mpmath():
    for m, s in [(0, 1), (-3, 1), (4, -1), (7, 1)]:
        t = dirac_secular_roots(m, s, 5)
        for k in t.roots:
            f = lambda x: mpmath.besselj(m, x) - s * mpmath.besselj(m + 1, x)
            ref = float(mpmath.findroot(f, mpmath.mpf(k)))
            assert k == pytest.approx(ref, rel=1e-14)


def test_secular_function_residual():
    for m, s in [(2, 1), (-2, -1)]:
        t = dirac_secular_roots(m, s, 12)
        f = secular_function("dirac_plus" if s > 0 else "dirac_minus", m)
        assert np.max(np.abs(f(t.as_array()))) < 1e-12


def test_dirac_roots_ground_gap():
    # lowest root of J_0 - J_1 exceeds sqrt(2), the unit-disk gap constant
    assert dirac_secular_roots(0, 1, 1)[0] ** 2 >= 2
    assert math.isclose(dirac_secular_roots(0, 1, 1)[0], 1.4347, abs_tol=1e-4)


def test_bad_arguments():
    with pytest.raises(ValueError):
        dirac_secular_roots(0, 0, 1)
    with pytest.raises(ValueError):
        dirichlet_roots(0, 0)
    with pytest.raises(ValueError):
        secular_function("neumann", 0)
    with pytest.raises(RootBracketError):
        dirichlet_roots(0, 100)  # only ~63 zeros below MAX_ARG


def test_root_table_validation():
    with pytest.raises(RootBracketError):
        RootTable("dirichlet", 0, (2.0, 1.0), (0.0, 0.0))
    t = RootTable("dirichlet", 0, (1.0, 2.0), (0.0, 0.0))
    assert list(t.as_array()) == [1.0, 2.0]
