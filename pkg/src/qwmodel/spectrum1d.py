"""Exact spectral theory of the one-variable half-line problem

    -xi'' + (q z**-2 + w**2 z**2) xi = mu xi   on (0, inf),

whose eigenfunctions are xi_n = exp(-w z^2/2) z^s P_n(z) with P_n an even
polynomial of degree 2n and eigenvalues mu_n = 4 w n + w (1 + 2s).

Everything here is exact rational arithmetic: the even moments sigma_2k of
the weight gamma(z) = exp(-w z^2) z^(2s), the polynomial coefficients a_2k
(normalization a_2 = 1), and the eigenvalues.  An independent second-order
finite-difference eigensolver on a truncated interval acts as the numerical
oracle for the closed-form spectrum.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, DomainError, InternalConsistencyError, ValidationError
from .model_core import ModelParams
from .numerics import ExactValue, as_fraction, gamma_as_value

_HALF = Fraction(1, 2)


@dataclass(frozen=True)
class MomentTable:
    """Even moments of gamma(z) = exp(-w z^2) z^(2 s_eff) on the half-line.

    sigma[k] holds the normalized moment sigma_2k (sigma[0] = 1), i.e. the
    moment divided by the total mass; gamma_mass is the total mass
    (1/2) w**-(s_eff+1/2) Gamma(s_eff + 1/2), whose reciprocal is d0.
    """

    s_eff: Fraction
    w: Fraction
    sigma: tuple
    gamma_mass: ExactValue

    def raw_moment(self, k: int) -> ExactValue:
        """Unnormalized moment: integral of gamma(z) z^(2k) dz."""
        return self.gamma_mass * self.sigma[k]


@lru_cache(maxsize=None)
def moments(s_eff, w, k_max: int) -> MomentTable:
    """Moment table sigma_2k = (1/2w)^k prod_{j<k} (1 + 2 s_eff + 2 j), k <= k_max."""
    s_eff = as_fraction(s_eff)
    w = as_fraction(w)
    if w <= 0:
        raise DomainError("w must be positive")
    if s_eff < _HALF or (2 * s_eff).denominator != 1:
        raise DomainError(f"s_eff must be a half-integer or integer >= 1/2, got {s_eff}")
    if k_max < 0:
        raise DomainError("k_max must be nonnegative")
    sigma = [Fraction(1)]
    inv_2w = 1 / (2 * w)
    for k in range(k_max):
        sigma.append(sigma[-1] * inv_2w * (1 + 2 * s_eff + 2 * k))
    mass = ExactValue(_HALF, 0, -(2 * s_eff + 1).numerator, w) * gamma_as_value(s_eff + _HALF)
    return MomentTable(s_eff=s_eff, w=w, sigma=tuple(sigma), gamma_mass=mass)


def gamma_mass(s_eff, w) -> ExactValue:
    return moments(s_eff, w, 0).gamma_mass


@dataclass(frozen=True)
class OneVarState:
    """Eigenstate index n with exact coefficients a_2k (k = 1..n, a_2 = 1).

    mu is the exact eigenvalue 4 w n + w (1 + 2s).  The even polynomial is
    P_n = sum_k a_2k (z^(2k) - sigma_2k), so its plain coefficient on z^0 is
    -sum_k a_2k sigma_2k, available via poly_coeffs().
    """

    n: int
    s: Fraction
    w: Fraction
    coeffs: tuple
    mu: Fraction

    def poly_coeffs(self) -> tuple:
        """Plain even-power coefficients c[m] of P_n (coefficient of z^(2m))."""
        table = moments(self.s, self.w, self.n)
        const = -sum(
            (a * sig for a, sig in zip(self.coeffs, table.sigma[1:])), Fraction(0)
        )
        if self.n == 0:
            return (Fraction(1),)
        return (const,) + self.coeffs


def eigenvalue(n: int, params: ModelParams) -> Fraction:
    """Exact eigenvalue mu_n = 4 w n + w (1 + 2s)."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    return 4 * params.w * n + params.w * (1 + 2 * params.s)


@lru_cache(maxsize=None)
def _eigenstate_cached(n: int, s: Fraction, w: Fraction) -> OneVarState:
    eta = 4 * w * n  # excitation part of the eigenvalue
    coeffs = []
    if n >= 1:
        a = Fraction(1)
        coeffs.append(a)
        for j in range(1, n):
            # recursion a_{2(j+1)} = B_{2j} a_{2j} with
            # B_k = (2wk - eta) / ((k+2)(1+2s+k)) at k = 2j
            b = Fraction(2 * w * (j - n), (j + 1)) / (1 + 2 * s + 2 * j)
            a = a * b
            coeffs.append(a)
    mu = 4 * w * n + w * (1 + 2 * s)
    state = OneVarState(n=n, s=s, w=w, coeffs=tuple(coeffs), mu=mu)
    _check_first_row(state)
    return state


def eigenstate(n: int, params: ModelParams) -> OneVarState:
    """Exact eigenstate; the constant-term consistency equation is verified
    before returning (InternalConsistencyError would indicate a bug)."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    return _eigenstate_cached(n, params.s, params.w)


def _check_first_row(state: OneVarState) -> None:
    """The z^0 row of the coefficient hierarchy:

        2 (1+2s) a_2 = eta * sum_k a_2k sigma_2k,   eta = 4 w n.

    This is equivalent to the alternating binomial identity
    1 - u = sum_{k=2}^u (-1)^(k-1) binom(u, k); it must hold exactly.
    """
    n = state.n
    if n == 0:
        return
    table = moments(state.s, state.w, n)
    total = sum(
        (a * sig for a, sig in zip(state.coeffs, table.sigma[1:])), Fraction(0)
    )
    lhs = 2 * (1 + 2 * state.s)
    rhs = 4 * state.w * n * total
    if lhs != rhs:
        raise InternalConsistencyError(
            f"first-row equation failed for n={n}: {lhs} != {rhs}"
        )


def first_row_residual(n: int, params: ModelParams) -> Fraction:
    """Exact residual of the z^0 consistency row (zero for every valid state)."""
    state = eigenstate(n, params)
    if n == 0:
        return Fraction(0)
    table = moments(params.s, params.w, n)
    total = sum((a * sig for a, sig in zip(state.coeffs, table.sigma[1:])), Fraction(0))
    return 2 * (1 + 2 * params.s) - 4 * params.w * n * total


def binomial_alternating_sum(u: int) -> int:
    """sum_k (-1)^k binom(u,k); identically zero for u >= 1 by the binomial theorem."""
    from math import comb

    return sum((-1) ** k * comb(u, k) for k in range(u + 1))


def evaluate_xi(state: OneVarState, z):
    """Pointwise xi_n(z) = exp(-w z^2/2) z^s P_n(z) for z > 0 (float result)."""
    zf = float(z)
    if zf <= 0:
        raise DomainError("xi is defined on the open half-line z > 0")
    coeffs = state.poly_coeffs()
    z2 = zf * zf
    p = 0.0
    for c in reversed(coeffs):
        p = p * z2 + float(c)
    return float(np.exp(-float(state.w) * z2 / 2.0) * zf ** float(state.s) * p)


def fd_oracle_spectrum(
    params: ModelParams,
    grid_points: int,
    z_min: float,
    z_max: float,
    k_eigs: int,
    refine_check: bool = False,
    refine_rel_tol: float = 1e-2,
) -> np.ndarray:
    """Lowest eigenvalues of the half-line operator by central differences.

    Dirichlet conditions at both ends of [z_min, z_max]; the interior grid
    has `grid_points` nodes.  Independent of the closed-form machinery, this
    is the oracle for the exact spectrum.  With refine_check, the grid is
    doubled once and a ConvergenceError is raised if any requested
    eigenvalue moves by more than refine_rel_tol relatively.
    """
    if params.w == 0:
        raise ValidationError("w = 0 leaves the spectrum unconfined")
    if grid_points < 200:
        raise ValidationError("use at least 200 grid points")
    if not (0 < z_min < z_max):
        raise ValidationError("need 0 < z_min < z_max")
    if k_eigs < 1:
        raise ValidationError("k_eigs must be positive")

    def solve(n_nodes: int) -> np.ndarray:
        z = np.linspace(z_min, z_max, n_nodes + 2)[1:-1]
        h = z[1] - z[0]
        q = float(params.q)
        w2 = float(params.w) ** 2
        diag = 2.0 / h**2 + q / z**2 + w2 * z**2
        off = np.full(n_nodes - 1, -1.0 / h**2)
        vals = eigh_tridiagonal(
            diag, off, select="i", select_range=(0, k_eigs - 1)
        )[0]
        return vals

    vals = solve(grid_points)
    if refine_check:
        finer = solve(2 * grid_points)
        rel = np.abs(finer - vals) / np.abs(finer)
        if np.any(rel > refine_rel_tol):
            raise ConvergenceError(
                f"oracle eigenvalues moved by up to {rel.max():.2e} on refinement"
            )
        vals = finer
    return vals


def spectrum_rows(params: ModelParams, n_max: int) -> list:
    """Rows for spectrum.csv: one row per (n, k) coefficient, k=0 for the ground."""
    rows = []
    for n in range(n_max + 1):
        state = eigenstate(n, params)
        mu = state.mu
        if n == 0:
            rows.append([0, str(mu), float(mu), 0, "1"])
            continue
        for k, a in enumerate(state.coeffs, start=1):
            rows.append([n, str(mu), float(mu), k, str(a)])
    return rows
