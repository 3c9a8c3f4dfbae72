"""Alternating binomial series with factorial-ratio weights, their circle
integral representations, and the nested change-of-variables lemma.

With t = s - 1/2 a positive integer, the three series are

  S1(u) = sum_k base^(-2k) (-1)^k C(u,k) (2t+2k)! / (t+k)!^2
  S2(u) = sum_k k * [same summand]
  S3(u,t) = sum_{j,k} (-1)^(j+k) C(u,j) C(u,k) (t+j+k)! / ((t+j)!(t+k)!)

Direct sums are exact big-integer arithmetic over a common denominator, so
the massive alternating cancellation costs no precision.  Each series also
has a circle-mean integral form; for base 2 the two routes agree to
arbitrary precision, which (together with the duplication check in
`numerics`) adjudicates the base-2-versus-base-e question: base 2 is the
identity, base e fails by order one.

Note on the S2 integral: the generating-function derivation multiplies the
integrand by one extra power of x = exp(i theta), so the phase factor is
exp(i (s+1/2) theta) (the companion S1 form carries exp(i (s-1/2) theta)).
The direct sums pin this down numerically.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iter_product

import mpmath
import numpy as np

from .errors import ConvergenceError, DomainError, SizeError
from .numerics import (
    as_fraction,
    circle_mean,
    fraction_to_mpf,
    precision_bits,
    real_part_checked,
)

_HALF = Fraction(1, 2)


def _require_half_odd_s(s) -> tuple[Fraction, int]:
    s = as_fraction(s)
    if s.denominator != 2 or s < Fraction(3, 2):
        raise DomainError(f"s must be a half-odd-integer >= 3/2, got {s}")
    return s, int(s - _HALF)


def _series_terms_int(u: int, t: int) -> list[int]:
    """Base-2 summands times the common denominator 4^u ((t+u)!)^2."""
    fact = [math.factorial(i) for i in range(2 * t + 2 * u + 1)]
    top = fact[t + u]
    terms = []
    for k in range(u + 1):
        ratio = top // fact[t + k]
        term = 4 ** (u - k) * math.comb(u, k) * fact[2 * t + 2 * k] * ratio * ratio
        terms.append(-term if k % 2 else term)
    return terms


def s1_direct(u: int, s, base=2):
    """Exact S1 for base 2 (Fraction); high-precision mpf for base e."""
    s, t = _require_half_odd_s(s)
    if u < 0:
        raise DomainError("u must be nonnegative")
    if base == 2 or base == "2":
        denom = 4**u * math.factorial(t + u) ** 2
        return Fraction(sum(_series_terms_int(u, t)), denom)
    if base == "e":
        bits = max(precision_bits(), 64 + 4 * u)
        with mpmath.workprec(bits):
            total = mpmath.mpf(0)
            for k in range(u + 1):
                term = (
                    mpmath.e ** (-2 * k)
                    * math.comb(u, k)
                    * Fraction(
                        math.factorial(2 * t + 2 * k), math.factorial(t + k) ** 2
                    )
                )
                total += -term if k % 2 else term
            return +total
    raise DomainError(f"base must be 2 or 'e', got {base!r}")


def s2_direct(u: int, s, base=2):
    """Exact S2 (extra factor k in the summand)."""
    s, t = _require_half_odd_s(s)
    if u < 0:
        raise DomainError("u must be nonnegative")
    if base == 2 or base == "2":
        terms = _series_terms_int(u, t)
        denom = 4**u * math.factorial(t + u) ** 2
        return Fraction(sum(k * term for k, term in enumerate(terms)), denom)
    if base == "e":
        bits = max(precision_bits(), 64 + 4 * u)
        with mpmath.workprec(bits):
            total = mpmath.mpf(0)
            for k in range(u + 1):
                term = (
                    k
                    * mpmath.e ** (-2 * k)
                    * math.comb(u, k)
                    * Fraction(
                        math.factorial(2 * t + 2 * k), math.factorial(t + k) ** 2
                    )
                )
                total += -term if k % 2 else term
            return +total
    raise DomainError(f"base must be 2 or 'e', got {base!r}")


def _base_squared(base):
    if base == 2 or base == "2":
        return mpmath.mpf(4)
    if base == "e":
        return mpmath.e**2
    raise DomainError(f"base must be 2 or 'e', got {base!r}")


def _grid_for_bandwidth(band: int) -> int:
    m = 64
    while m < band:
        m *= 2
    return m


def s1_integral(u: int, s, base=2, tolerance: float = 1e-30, prec_bits: int | None = None):
    """Circle-mean form of S1; the imaginary residue must stay below tolerance."""
    s, t = _require_half_odd_s(s)
    bits = prec_bits or precision_bits()
    with mpmath.workprec(bits):
        b2 = _base_squared(base)

        def integrand(theta):
            em = mpmath.exp(-1j * theta)
            ep = mpmath.exp(1j * theta)
            # phase exp(i(s-1/2)theta) = ep**t and (1+em)**(2s-1) = (1+em)**(2t)
            return ep**t * (1 + em) ** (2 * t) * (1 - (1 + em) ** 2 * ep / b2) ** u

        m = _grid_for_bandwidth(2 * u + 2 * t + 16)
        val = circle_mean(integrand, m=m, rel_tol=None, prec_bits=bits)
        check = circle_mean(integrand, m=2 * m, rel_tol=None, prec_bits=bits)
        if abs(check - val) > mpmath.mpf(tolerance) * max(abs(check), mpmath.mpf("1e-40")):
            raise ConvergenceError("circle grid did not resolve the S1 integrand")
        return real_part_checked(check, tolerance, prec_bits=bits)


def s2_integral(u: int, s, base=2, tolerance: float = 1e-30, prec_bits: int | None = None):
    """Circle-mean form of S2: prefactor -u/base^2, exponent u-1, phase s+1/2."""
    s, t = _require_half_odd_s(s)
    if u == 0:
        return mpmath.mpf(0)
    bits = prec_bits or precision_bits()
    with mpmath.workprec(bits):
        b2 = _base_squared(base)

        def integrand(theta):
            em = mpmath.exp(-1j * theta)
            ep = mpmath.exp(1j * theta)
            # phase exp(i(s+1/2)theta) = ep**(t+1), (1+em)**(2s+1) = (1+em)**(2t+2)
            return (
                ep ** (t + 1)
                * (1 + em) ** (2 * t + 2)
                * (1 - (1 + em) ** 2 * ep / b2) ** (u - 1)
            )

        m = _grid_for_bandwidth(2 * u + 2 * t + 18)
        val = circle_mean(integrand, m=m, rel_tol=None, prec_bits=bits)
        check = circle_mean(integrand, m=2 * m, rel_tol=None, prec_bits=bits)
        if abs(check - val) > mpmath.mpf(tolerance) * max(abs(check), mpmath.mpf("1e-40")):
            raise ConvergenceError("circle grid did not resolve the S2 integrand")
        mean = real_part_checked(check, tolerance, prec_bits=bits)
        return +(-(mpmath.mpf(u) / b2) * mean)


def s3_direct(u: int, t: int) -> Fraction:
    """Exact double series over a common denominator ((t+u)!)^2."""
    if u < 0 or t < 1:
        raise DomainError("need u >= 0 and integer t >= 1")
    fact = [math.factorial(i) for i in range(2 * u + t + 1)]
    top = fact[t + u]
    ratio = [top // fact[t + j] for j in range(u + 1)]
    binom = [math.comb(u, j) for j in range(u + 1)]
    total = 0
    for j in range(u + 1):
        bj = binom[j] * ratio[j]
        row = 0
        for k in range(u + 1):
            term = binom[k] * ratio[k] * fact[t + j + k]
            row += -term if k % 2 else term
        total += -bj * row if j % 2 else bj * row
    return Fraction(total, top * top)


def s3_integral(
    u: int,
    t: int,
    tolerance: float = 1e-8,
    max_t: int = 4,
    work_cap: float = 5e7,
) -> float:
    """(t+1)-dimensional quadrature form of S3.

    Tensor Gauss-Legendre on [-1,0]^t (exact once the node count exceeds the
    polynomial degree u) crossed with a uniform circle grid in theta, doubled
    once to confirm convergence.  Plain float64 is ample at tolerance 1e-6+.
    """
    if t < 1 or t > max_t:
        raise DomainError(f"t must be in 1..{max_t}")
    if u < 0:
        raise DomainError("u must be nonnegative")
    n_nodes = max(24, u + t + 2)
    m = _grid_for_bandwidth(2 * u + 2 * t + 16)
    if n_nodes**t * 2 * m > work_cap:
        raise SizeError("tensor quadrature too large; use the exact direct sum")

    x, wts = np.polynomial.legendre.leggauss(n_nodes)
    v = (x - 1.0) / 2.0  # [-1, 1] -> [-1, 0]
    wts = wts / 2.0

    combos = list(iter_product(range(n_nodes), repeat=t))
    vprod = np.empty(len(combos))
    weight = np.empty(len(combos))
    for i, combo in enumerate(combos):
        vp = 1.0
        wt = 1.0
        for axis, idx in enumerate(combo):
            vi = v[idx]
            vp *= 1.0 + vi
            wt *= wts[idx] * (1.0 + vi) ** (t - 1 - axis)
        vprod[i] = vp
        weight[i] = wt

    def mean_at(mm: int) -> float:
        thetas = 2.0 * np.pi * np.arange(mm) / mm
        e_minus = np.exp(-1j * thetas)
        e_plus = np.conj(e_minus)
        acc = 0.0
        for theta_idx in range(mm):
            em = e_minus[theta_idx]
            ep = e_plus[theta_idx]
            inner = (1.0 - vprod * (1.0 + ep)) ** u * (1.0 - vprod * (1.0 + em)) ** u
            acc += ((1.0 + em) ** t * np.dot(weight, inner)).real
        return acc / mm

    val = mean_at(m)
    check = mean_at(2 * m)
    if abs(check - val) > tolerance * max(abs(check), 1e-12):
        raise ConvergenceError("theta grid did not resolve the S3 integrand")
    return check


def iterated_integral_check(n: int, g, z: float, nodes: int = 24):
    """Both sides of the nested-integral change of variables.

    lhs: direct nesting  int_{-1}^z dz1 ... int_{-1}^{z_{n-1}} dz_n g(z_n).
    rhs: (z+1)^n times the tensor integral over [-1,0]^n with weights
         (v_1+1)^(n-1) ... (v_{n-1}+1) of g(V_n (z+1) - 1), V_n = prod (1+v_i).
    """
    if not (1 <= n <= 4):
        raise DomainError("n must be between 1 and 4")
    if z < -1:
        raise DomainError("z must be at least -1")
    x, wts = np.polynomial.legendre.leggauss(nodes)

    def nest(level: int, upper: float) -> float:
        pts = (x + 1.0) * (upper + 1.0) / 2.0 - 1.0
        scale = (upper + 1.0) / 2.0
        if level == 1:
            vals = np.array([g(p) for p in pts])
        else:
            vals = np.array([nest(level - 1, p) for p in pts])
        return float(scale * np.dot(wts, vals))

    lhs = nest(n, z)

    v = (x - 1.0) / 2.0
    w2 = wts / 2.0
    combos = list(iter_product(range(nodes), repeat=n))
    acc = 0.0
    for combo in combos:
        vp = 1.0
        wt = 1.0
        for axis, idx in enumerate(combo):
            vi = v[idx]
            vp *= 1.0 + vi
            wt *= w2[idx] * (1.0 + vi) ** (n - 1 - axis)
        acc += wt * g(vp * (z + 1.0) - 1.0)
    rhs = (z + 1.0) ** n * acc
    return lhs, rhs


def product_constant(s, base=2):
    """C(s): base^2 (s+1/2)!^2 / (2s+2)! in the chosen base."""
    s, t = _require_half_odd_s(s)
    core = Fraction(math.factorial(t + 1) ** 2, math.factorial(2 * t + 3))
    if base == 2 or base == "2":
        return 4 * core
    if base == "e":
        with mpmath.workprec(precision_bits()):
            return +(mpmath.e**2 * fraction_to_mpf(core))
    raise DomainError(f"base must be 2 or 'e', got {base!r}")


def product_identity_check(k: int, s, base=2):
    """Residual of  prod_{j=1}^{k-1} (1+s+j)/(1/2+s+j)
                  = C(s) base^(-2k) (2s+2k)! / (s+k-1/2)!^2.

    Exactly zero for base 2; order-one for base e.
    """
    if k < 1:
        raise DomainError("k must be at least 1")
    s, t = _require_half_odd_s(s)
    lhs = Fraction(1)
    for j in range(1, k):
        lhs *= (1 + s + j) / (Fraction(1, 2) + s + j)
    ratio = Fraction(math.factorial(2 * t + 2 * k + 1), math.factorial(t + k) ** 2)
    if base == 2 or base == "2":
        rhs = product_constant(s, 2) * Fraction(1, 4**k) * ratio
        return lhs - rhs
    with mpmath.workprec(precision_bits()):
        rhs = product_constant(s, "e") * mpmath.e ** (-2 * k) * fraction_to_mpf(ratio)
        return +(fraction_to_mpf(lhs) - rhs)


def critical_point_check(u: int, s, grid: int = 200001):
    """Grid-search maximum of the base-2 S1 integrand magnitude.

    |I1(theta)| = (2(1+cos theta))^(s-1/2) (1 - (1+cos theta)/2)^u has an
    interior maximum where 1 + cos theta* = 2(s-1/2)/(s-1/2+u); returns
    (measured 1+cos theta*, predicted value, grid spacing in 1+cos units).
    """
    s, t = _require_half_odd_s(s)
    if u < 2 * t + 1:
        raise DomainError("u must be large enough for an interior maximum")
    theta = np.linspace(0.0, np.pi, grid)
    c = 1.0 + np.cos(theta)
    vals = (2.0 * c) ** t * (1.0 - c / 2.0) ** u
    idx = int(np.argmax(vals))
    predicted = 2.0 * t / (t + u)
    spacing = float(np.max(np.abs(np.diff(c[max(0, idx - 1) : idx + 2]))))
    return float(c[idx]), predicted, spacing


@dataclass(frozen=True)
class SeriesResult:
    which: str
    u: int
    t_or_s: str
    base: str
    direct_value: float
    integral_value: float
    abs_diff: float


def series_result(which: str, u: int, s_or_t, base=2, tolerance: float = 1e-10) -> SeriesResult:
    if which == "S1":
        s = as_fraction(s_or_t)
        direct = s1_direct(u, s, base)
        integral = s1_integral(u, s, base, tolerance=1e-25)
        label = str(s)
    elif which == "S2":
        s = as_fraction(s_or_t)
        direct = s2_direct(u, s, base)
        integral = s2_integral(u, s, base, tolerance=1e-25)
        label = str(s)
    elif which == "S3":
        if base not in (2, "2"):
            raise DomainError("the S3 route is base-free; use base=2")
        t = int(s_or_t)
        direct = s3_direct(u, t)
        integral = s3_integral(u, t, tolerance=min(tolerance, 1e-8))
        label = str(t)
    else:
        raise DomainError(f"unknown series {which!r}")
    d = float(direct)
    i = float(integral)
    return SeriesResult(
        which=which,
        u=u,
        t_or_s=label,
        base=str(base),
        direct_value=d,
        integral_value=i,
        abs_diff=abs(d - i),
    )
