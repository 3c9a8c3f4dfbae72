import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwmodel.errors import ConvergenceError, DomainError, ImaginaryResidueError
from qwmodel.numerics import (
    ExactValue,
    circle_mean,
    gamma_as_value,
    gamma_exact,
    halfline_weighted_quadrature,
    legendre_duplication_check,
    real_part_checked,
)


def test_gamma_integer_values():
    assert gamma_exact(1).rational_part == 1
    assert gamma_exact(1).sqrtpi_power == 0
    assert gamma_exact(5).rational_part == 24


def test_gamma_half_odd_values():
    g = gamma_exact(Fraction(1, 2))
    assert (g.rational_part, g.sqrtpi_power) == (1, 1)
    g = gamma_exact(Fraction(5, 2))
    assert (g.rational_part, g.sqrtpi_power) == (Fraction(3, 4), 1)


def test_gamma_domain_errors():
    with pytest.raises(DomainError):
        gamma_exact(Fraction(1, 3))
    with pytest.raises(DomainError):
        gamma_exact(0)
    with pytest.raises(DomainError):
        gamma_exact(Fraction(-3, 2))


@given(n=st.integers(min_value=1, max_value=100))
def test_gamma_recursion_exact(n):
    x = Fraction(n, 2)
    lhs = gamma_as_value(x + 1)
    rhs = gamma_as_value(x) * ExactValue(x)
    assert lhs == rhs


def test_duplication_base2_is_exact_zero():
    s = Fraction(1, 2)
    while s <= 20:
        assert legendre_duplication_check(s, 2) == 0
        s += Fraction(1, 2)


def test_duplication_base_e_fails():
    # at s = 1 the residual is |Gamma(1)Gamma(3/2) - e^-1 sqrt(pi)| ~ 0.234
    res = legendre_duplication_check(1, "e")
    assert abs(abs(float(res)) - 0.234) < 2e-3
    s = Fraction(1, 2)
    while s <= 20:
        assert abs(legendre_duplication_check(s, "e")) > 1e-2
        s += Fraction(1, 2)


def test_duplication_domain():
    with pytest.raises(DomainError):
        legendre_duplication_check(Fraction(1, 3), 2)
    with pytest.raises(DomainError):
        legendre_duplication_check(1, 10)


def test_halfline_quadrature_gaussian_moments():
    # int_0^inf exp(-z^2) z^3 dz = 1/2
    v = halfline_weighted_quadrature(lambda z: 1, Fraction(3, 2), 1)
    assert abs(v - mpmath.mpf(1) / 2) < 1e-18
    # an extra z^2 doubles it via sigma_2 = 2
    v = halfline_weighted_quadrature(lambda z: z * z, Fraction(3, 2), 1)
    assert abs(v - 1) < 1e-18
    # scaling z -> z/sqrt(w) at w = 4
    v = halfline_weighted_quadrature(lambda z: 1, Fraction(3, 2), 4)
    assert abs(v - mpmath.mpf(1) / 32) < 1e-18


def test_halfline_quadrature_domain():
    with pytest.raises(DomainError):
        halfline_weighted_quadrature(lambda z: 1, Fraction(3, 2), -1)
    with pytest.raises(DomainError):
        halfline_weighted_quadrature(lambda z: 1, Fraction(1, 4), 1)


def test_circle_mean_examples():
    assert abs(circle_mean(lambda t: 3.5) - 3.5) < 1e-40
    assert abs(circle_mean(mpmath.cos)) < 1e-40
    v = circle_mean(lambda t: (1 + mpmath.cos(t)) ** 2)
    assert abs(v - mpmath.mpf(3) / 2) < 1e-40


def test_circle_mean_needs_grid():
    with pytest.raises(DomainError):
        circle_mean(lambda t: 1.0, m=4)


def test_circle_mean_adaptive_converges():
    v = circle_mean(lambda t: mpmath.exp(mpmath.cos(t)), m=8, rel_tol=1e-30)
    assert abs(v - mpmath.besseli(0, 1)) < 1e-28


def test_circle_mean_spectral_accuracy_on_series_integrand():
    # the S1 integrand at u=100: aliasing error must collapse by more than
    # a factor 100 between grids of 64 and 128 points (spectral accuracy)
    from qwmodel.oscseries import s1_direct

    u, t = 100, 1
    exact = mpmath.mpf(s1_direct(u, Fraction(3, 2), 2).numerator) / s1_direct(
        u, Fraction(3, 2), 2
    ).denominator

    def integrand(theta):
        em = mpmath.exp(-1j * theta)
        ep = mpmath.exp(1j * theta)
        return ep**t * (1 + em) ** (2 * t) * (1 - (1 + em) ** 2 * ep / 4) ** u

    err64 = abs(circle_mean(integrand, m=64).real - exact)
    err128 = abs(circle_mean(integrand, m=128).real - exact)
    assert err64 > 0
    assert err128 / err64 < 1e-2


def test_real_part_checked():
    assert real_part_checked(mpmath.mpc(2, 1e-40), 1e-30) == 2
    with pytest.raises(ImaginaryResidueError):
        real_part_checked(mpmath.mpc(2, 1e-3), 1e-10)


def test_exact_value_algebra():
    a = ExactValue(Fraction(3, 4), pi_pow=1)
    b = ExactValue(Fraction(1, 4), pi_pow=1)
    assert (a + b).coeff == 1
    assert (a - a).is_zero
    prod = a * b
    assert prod.pi_pow == 2 and prod.coeff == Fraction(3, 16)
    assert (a / b).is_rational and (a / b).as_fraction() == 3
    with pytest.raises(DomainError):
        a + ExactValue(Fraction(1))


def test_exact_value_folds_w_powers():
    v = ExactValue(Fraction(1), w_pow=-5, w=Fraction(2))
    assert v.w_pow == 1 and v.coeff == Fraction(1, 8)
    assert abs(float(v) - 2 ** (-2.5)) < 1e-15
    unit = ExactValue(Fraction(2), w_pow=3, w=Fraction(1))
    assert unit.w_pow == 0


def test_exact_value_rejects_mixed_w():
    a = ExactValue(Fraction(1), w_pow=1, w=Fraction(2))
    b = ExactValue(Fraction(1), w_pow=1, w=Fraction(3))
    with pytest.raises(DomainError):
        a * b


@settings(max_examples=30)
@given(
    st.lists(
        st.fractions(min_value=-100, max_value=100),
        min_size=2,
        max_size=12,
    ),
    st.randoms(use_true_random=False),
)
def test_exact_sums_are_order_independent(values, rng):
    shuffled = list(values)
    rng.shuffle(shuffled)
    assert sum(values, Fraction(0)) == sum(shuffled, Fraction(0))
