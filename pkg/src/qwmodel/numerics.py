"""Scalar and quadrature substrate.

Exact rationals are ``fractions.Fraction``; quantities that pick up a
sqrt(pi) (from Gaussian moments at half-odd exponents) or a half-power of
the confinement strength w are carried exactly as :class:`ExactValue`
products ``coeff * sqrt(pi)**pi_pow * sqrt(w)**w_pow``.  High-precision
floats are mpmath values at a configurable bit count (default 256).

The Gamma function at positive integer and half-odd-integer arguments is
exact: Gamma(n) = (n-1)! and Gamma(n + 1/2) = (1/2)(3/2)...(n - 1/2) sqrt(pi),
both reachable from the recursion Gamma(x+1) = x Gamma(x).

A note on the duplication identity: the classical Legendre form is
Gamma(x) Gamma(x + 1/2) = 2**(1-2x) sqrt(pi) Gamma(2x), with base 2.
`legendre_duplication_check` keeps the base as an argument so the
(incorrect) base-e variant stays testable; the exact base-2 residual is
identically zero while the base-e residual is not.
"""

import math
import os
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .errors import ConvergenceError, DomainError, ImaginaryResidueError

ExactScalar = Fraction

DEFAULT_PRECISION_BITS = 256


def precision_bits() -> int:
    """Active default precision; QW_PRECISION_BITS overrides the built-in 256."""
    env = os.environ.get("QW_PRECISION_BITS")
    if env is not None:
        bits = int(env)
        if bits < 64:
            raise DomainError("QW_PRECISION_BITS must be at least 64")
        return bits
    return DEFAULT_PRECISION_BITS


def as_fraction(x) -> Fraction:
    """Coerce ints, 'num/den' strings and Fractions to Fraction.

    Floats are rejected: every exact pipeline must be fed exact input.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise DomainError(f"cannot interpret {x!r} as an exact rational")


def fraction_to_mpf(q: Fraction) -> mpmath.mpf:
    return mpmath.mpf(q.numerator) / q.denominator


def is_half_odd(x: Fraction) -> bool:
    """True for 1/2, 3/2, 5/2, ..."""
    return x.denominator == 2


@dataclass(frozen=True)
class GammaValue:
    """Exact Gamma(argument) = rational_part * sqrt(pi)**sqrtpi_power.

    sqrtpi_power is 0 for integer arguments and 1 for half-odd arguments.
    """

    argument: Fraction
    rational_part: Fraction
    sqrtpi_power: int

    def to_mpf(self, prec_bits: int | None = None) -> mpmath.mpf:
        bits = prec_bits or precision_bits()
        with mpmath.workprec(bits):
            v = fraction_to_mpf(self.rational_part)
            if self.sqrtpi_power:
                v = v * mpmath.sqrt(mpmath.pi) ** self.sqrtpi_power
            return +v


def gamma_exact(x) -> GammaValue:
    """Gamma at a positive integer or half-odd-integer argument, exactly."""
    x = as_fraction(x)
    two_x = 2 * x
    if two_x.denominator != 1 or x <= 0:
        raise DomainError(f"gamma_exact needs 2x a positive integer, got x={x}")
    if x.denominator == 1:
        return GammaValue(x, Fraction(math.factorial(x.numerator - 1)), 0)
    # x = n + 1/2: climb the recursion from Gamma(1/2) = sqrt(pi)
    n = (x - Fraction(1, 2)).numerator
    rat = Fraction(1)
    for k in range(n):
        rat *= Fraction(2 * k + 1, 2)
    return GammaValue(x, rat, 1)


def _canonical_radical(coeff: Fraction, pi_pow: int, w_pow: int, w: Fraction):
    if w <= 0:
        raise DomainError("w must be positive")
    if w == 1:
        w_pow = 0
    else:
        q, w_pow = divmod(w_pow, 2)
        if q:
            coeff = coeff * w**q
    if coeff == 0:
        return Fraction(0), 0, 0, Fraction(1)
    if w_pow == 0:
        w = Fraction(1)
    return coeff, pi_pow, w_pow, w


@dataclass(frozen=True)
class ExactValue:
    """Exact product coeff * sqrt(pi)**pi_pow * sqrt(w)**w_pow.

    Closed under +, -, * and / by nonzero values whose radical parts match.
    Even powers of sqrt(w) fold into the rational coefficient so w_pow is
    canonically 0 or 1; pi powers stay symbolic.
    """

    coeff: Fraction
    pi_pow: int = 0
    w_pow: int = 0
    w: Fraction = Fraction(1)

    def __post_init__(self):
        coeff, pi_pow, w_pow, w = _canonical_radical(
            as_fraction(self.coeff), self.pi_pow, self.w_pow, as_fraction(self.w)
        )
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "pi_pow", pi_pow)
        object.__setattr__(self, "w_pow", w_pow)
        object.__setattr__(self, "w", w)

    @property
    def is_zero(self) -> bool:
        return self.coeff == 0

    @property
    def is_rational(self) -> bool:
        return self.pi_pow == 0 and self.w_pow == 0

    def as_fraction(self) -> Fraction:
        if not self.is_rational:
            raise DomainError(f"{self} carries radicals, not a plain rational")
        return self.coeff

    @staticmethod
    def _coerce(x) -> "ExactValue":
        if isinstance(x, ExactValue):
            return x
        return ExactValue(as_fraction(x))

    def _merge_w(self, other: "ExactValue") -> Fraction:
        if self.w_pow and other.w_pow and self.w != other.w:
            raise DomainError("mixing sqrt(w) factors with different w")
        return self.w if self.w_pow else other.w

    def __add__(self, other):
        other = self._coerce(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if (self.pi_pow, self.w_pow, self.w) != (other.pi_pow, other.w_pow, other.w):
            raise DomainError("cannot add exact values with different radical parts")
        return ExactValue(self.coeff + other.coeff, self.pi_pow, self.w_pow, self.w)

    __radd__ = __add__

    def __neg__(self):
        return ExactValue(-self.coeff, self.pi_pow, self.w_pow, self.w)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if self.is_zero or other.is_zero:
            return ExactValue(Fraction(0))
        w = self._merge_w(other)
        return ExactValue(
            self.coeff * other.coeff,
            self.pi_pow + other.pi_pow,
            self.w_pow + other.w_pow,
            w,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.is_zero:
            raise ZeroDivisionError("division by exact zero")
        if self.is_zero:
            return ExactValue(Fraction(0))
        w = self._merge_w(other)
        return ExactValue(
            self.coeff / other.coeff,
            self.pi_pow - other.pi_pow,
            self.w_pow - other.w_pow,
            w,
        )

    def to_mpf(self, prec_bits: int | None = None) -> mpmath.mpf:
        bits = prec_bits or precision_bits()
        with mpmath.workprec(bits):
            v = fraction_to_mpf(self.coeff)
            if self.pi_pow:
                v = v * mpmath.sqrt(mpmath.pi) ** self.pi_pow
            if self.w_pow:
                v = v * mpmath.sqrt(fraction_to_mpf(self.w)) ** self.w_pow
            return +v

    def __float__(self) -> float:
        return float(self.to_mpf())


def gamma_as_value(x) -> ExactValue:
    g = gamma_exact(x)
    return ExactValue(g.rational_part, g.sqrtpi_power)


def legendre_duplication_check(s, base, prec_bits: int | None = None) -> mpmath.mpf:
    """Residual Gamma(s)Gamma(s+1/2) - base**(1-2s) sqrt(pi) Gamma(2s).

    base=2 is evaluated with exact Gamma algebra, so a zero residual is a
    true rational zero (returned as an exact mpf 0).  base='e' is evaluated
    in high precision and is nonzero for every admissible s.
    """
    s = as_fraction(s)
    if s <= 0 or (2 * s).denominator != 1:
        raise DomainError(f"need s > 0 with 2s an integer, got {s}")
    bits = prec_bits or precision_bits()
    lhs = gamma_as_value(s) * gamma_as_value(s + Fraction(1, 2))
    gamma_2s = gamma_as_value(2 * s)
    if base == 2 or base == "2":
        exponent = 1 - 2 * s  # an integer, so the power of 2 is rational
        rhs = ExactValue(Fraction(2) ** exponent, 1) * gamma_2s
        residual = lhs - rhs
        return residual.to_mpf(bits)
    if base == "e" or base == mpmath.e:
        with mpmath.workprec(bits):
            rhs = (
                mpmath.e ** (1 - 2 * fraction_to_mpf(s))
                * mpmath.sqrt(mpmath.pi)
                * gamma_2s.to_mpf(bits)
            )
            return +(lhs.to_mpf(bits) - rhs)
    raise DomainError(f"base must be 2 or 'e', got {base!r}")


def halfline_weighted_quadrature(
    f,
    s_eff,
    w,
    target_reldigits: int = 18,
    prec_bits: int | None = None,
    deg_hint: int = 12,
) -> mpmath.mpf:
    """High-precision estimate of  integral_0^inf exp(-w z^2) z^(2 s_eff) f(z) dz.

    The half-line is truncated where the weight times z**deg_hint is below
    10**-(target_reldigits+5); tanh-sinh refinement then runs until two
    successive levels agree to the requested relative tolerance.
    """
    s_eff = as_fraction(s_eff)
    w = as_fraction(w)
    if w <= 0:
        raise DomainError("w must be positive")
    if s_eff < Fraction(1, 2):
        raise DomainError("s_eff must be at least 1/2 for an integrable weight")
    bits = prec_bits or max(precision_bits(), int(3.5 * (target_reldigits + 20)))
    with mpmath.workprec(bits):
        wf = fraction_to_mpf(w)
        two_s = 2 * fraction_to_mpf(s_eff)
        budget = (target_reldigits + 5) * mpmath.log(10)
        z_max = mpmath.sqrt((budget + 10) / wf)
        for _ in range(60):
            # solve w z^2 = budget + (2s + deg) log z by fixed point
            z_new = mpmath.sqrt(
                (budget + (two_s + deg_hint) * mpmath.log(max(z_max, mpmath.mpf(2)))) / wf
            )
            if abs(z_new - z_max) < mpmath.mpf("1e-3"):
                z_max = z_new
                break
            z_max = z_new

        def integrand(z):
            return mpmath.exp(-wf * z * z) * z**two_s * f(z)

        tol = mpmath.mpf(10) ** (-target_reldigits)
        prev = None
        for maxdeg in range(5, 11):
            val = mpmath.quad(integrand, [0, z_max / 8, z_max], maxdegree=maxdeg)
            if prev is not None:
                scale = max(abs(val), mpmath.mpf(10) ** (-2 * target_reldigits))
                if abs(val - prev) <= tol * scale:
                    return +val
            prev = val
        raise ConvergenceError(
            f"half-line quadrature stalled before {target_reldigits} digits"
        )


def circle_mean(
    g,
    m: int = 64,
    rel_tol: float | None = None,
    prec_bits: int | None = None,
    max_doublings: int = 14,
):
    """Uniform-grid mean (1/2pi) int_0^2pi g(theta) dtheta.

    The uniform grid (periodic trapezoid) is spectrally accurate for smooth
    periodic integrands.  With rel_tol set, the grid is doubled until two
    successive grids agree; without it a single grid of size m is used.
    Complex integrands are supported; a real result is returned as mpf.
    """
    if m < 8:
        raise DomainError("circle_mean needs at least 8 grid points")
    bits = prec_bits or precision_bits()
    with mpmath.workprec(bits):
        two_pi = 2 * mpmath.pi

        def mean_at(mm: int):
            res, ims = [], []
            for j in range(mm):
                v = mpmath.mpmathify(g(two_pi * j / mm))
                res.append(mpmath.re(v))
                ims.append(mpmath.im(v))
            re = mpmath.fsum(res) / mm
            im = mpmath.fsum(ims) / mm
            return re if im == 0 else mpmath.mpc(re, im)

        val = mean_at(m)
        if rel_tol is None:
            return +val
        tol = mpmath.mpf(rel_tol)
        for _ in range(max_doublings):
            m *= 2
            nxt = mean_at(m)
            scale = max(abs(nxt), mpmath.mpf(10) ** (-bits // 4))
            if abs(nxt - val) <= tol * scale:
                return +nxt
            val = nxt
        raise ConvergenceError("circle mean did not settle under grid doubling")


def real_part_checked(value, tolerance, prec_bits: int | None = None) -> mpmath.mpf:
    """Real part of a nominally real complex value; raises on residue."""
    bits = prec_bits or precision_bits()
    with mpmath.workprec(bits):
        v = mpmath.mpmathify(value)
        im = abs(mpmath.im(v))
        if im > mpmath.mpf(tolerance):
            raise ImaginaryResidueError(
                f"imaginary residue {mpmath.nstr(im, 5)} above tolerance {tolerance}"
            )
        return +mpmath.re(v)
