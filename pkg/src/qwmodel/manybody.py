"""Product eigenstates, the heavy-body observable, ensemble draws, the
divergence-criterion partial sums, and the dispersion analysis.

A basis label is a pair of occupation tuples (L, R) of length N; the
product state has modified eigenvalue 4 w (sum L + sum R) + 2 N w (1 + 2s).
In the rest frame the heavy-body coordinate is X = -Y sum_k (z_k^L - z_k^R)
with Y = r / (1 + 2 r N), so every X matrix element factorizes into
single-coordinate elements and vanishes unless the two labels differ in at
most one entry ((sum)^2 elements allow two).

The Brownian-motion-like criterion partial sums are

    sum_u |c_u| |<phi_u| sum_k (z_k^L - z_k^R) |phi_0>| |lambda_u - lambda_0|

over the special states (single left excitation u); only the z_1^L term
survives, the element reduces to the normalized one-body <xi_u|z|xi_0>, and
the eigenvalue gap is exactly 4 w u.

The thermal ensemble on wavefunctions is pluggable.  The default draws
complex Gaussian coefficients with variance exp(-beta lambda) and projects
to the unit sphere; named deterministic profiles (the 1/(u log u) special
profile and an inverse-square comparison profile) cover the criterion
experiments.  The cat/diffusion composite verdict lives in `dynamics`.
"""

import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, SizeError, ValidationError
from .matelem import SingleBodyElements, normalized_z_ground, normalized_matrix_element
from .model_core import ModelParams

FULL_BASIS_CAP = 20000


@dataclass(frozen=True)
class ManyBodyIndex:
    """Occupation label (L, R) for a product eigenstate."""

    L: tuple
    R: tuple

    @property
    def total_n(self) -> int:
        return sum(self.L) + sum(self.R)

    def lambda_modified(self, params: ModelParams) -> Fraction:
        return 4 * params.w * self.total_n + 2 * params.N * params.w * (1 + 2 * params.s)

    def entries(self) -> tuple:
        return self.L + self.R


def ground_state(N: int) -> ManyBodyIndex:
    return ManyBodyIndex(L=(0,) * N, R=(0,) * N)


def special_state(u: int, N: int) -> ManyBodyIndex:
    """Single left excitation: L(1) = u, everything else in the ground mode."""
    if u < 1:
        raise DomainError("special states carry a positive excitation")
    return ManyBodyIndex(L=(u,) + (0,) * (N - 1), R=(0,) * N)


def _compositions_upto(slots: int, n_max: int):
    """All occupation tuples of given length with sum <= n_max, lexicographic."""

    def rec(remaining_slots: int, budget: int):
        if remaining_slots == 0:
            yield ()
            return
        for first in range(budget + 1):
            for rest in rec(remaining_slots - 1, budget - first):
                yield (first,) + rest

    yield from rec(slots, n_max)


def full_basis_size(N: int, n_max: int) -> int:
    return math.comb(n_max + 2 * N, 2 * N)


def enumerate_basis(
    params: ModelParams, n_max: int, mode: str = "special", cap: int = FULL_BASIS_CAP
) -> list:
    """Basis labels: 'special' gives ground plus single-left-excitation states
    u = 1..n_max; 'full' gives every label with total excitation <= n_max."""
    if n_max < 0:
        raise DomainError("n_max must be nonnegative")
    N = params.N
    if mode == "special":
        return [ground_state(N)] + [special_state(u, N) for u in range(1, n_max + 1)]
    if mode == "full":
        count = full_basis_size(N, n_max)
        if count > cap:
            raise SizeError(
                f"full basis has {count} states, above the cap of {cap}"
            )
        out = []
        for occ in _compositions_upto(2 * N, n_max):
            out.append(ManyBodyIndex(L=occ[:N], R=occ[N:]))
        return out
    raise DomainError(f"mode must be 'special' or 'full', got {mode!r}")


def heavy_body_prefactor(params: ModelParams) -> Fraction:
    """Y = r / (1 + 2 r N)."""
    return params.r / (1 + 2 * params.r * params.N)


def _diff_positions(a: ManyBodyIndex, b: ManyBodyIndex):
    out = []
    for k, (x, y) in enumerate(zip(a.L, b.L)):
        if x != y:
            out.append(("L", k))
    for k, (x, y) in enumerate(zip(a.R, b.R)):
        if x != y:
            out.append(("R", k))
    return out


def _sum_z_element(a: ManyBodyIndex, b: ManyBodyIndex, el: SingleBodyElements) -> float:
    """<phi_a | sum_k (z_k^L - z_k^R) | phi_b> for normalized product states."""
    d = _diff_positions(a, b)
    if len(d) > 1:
        return 0.0
    if not d:
        return sum(
            el.zhat(a.L[k], a.L[k]) - el.zhat(a.R[k], a.R[k]) for k in range(len(a.L))
        )
    side, k = d[0]
    if side == "L":
        return el.zhat(a.L[k], b.L[k])
    return -el.zhat(a.R[k], b.R[k])


def _sum_z_squared_element(
    a: ManyBodyIndex, b: ManyBodyIndex, el: SingleBodyElements
) -> float:
    """<phi_a | [sum_k (z_k^L - z_k^R)]^2 | phi_b>; labels may differ in <= 2 entries."""
    d = _diff_positions(a, b)
    if len(d) > 2:
        return 0.0
    N = len(a.L)
    if not d:
        m_l = [el.zhat(a.L[k], a.L[k]) for k in range(N)]
        m_r = [el.zhat(a.R[k], a.R[k]) for k in range(N)]
        delta = [ml - mr for ml, mr in zip(m_l, m_r)]
        total = sum(
            el.z2hat(a.L[k], a.L[k]) + el.z2hat(a.R[k], a.R[k]) - 2.0 * m_l[k] * m_r[k]
            for k in range(N)
        )
        s_delta = sum(delta)
        total += s_delta * s_delta - sum(dk * dk for dk in delta)
        return total
    if len(d) == 1:
        side, k = d[0]
        if side == "L":
            u, v = a.L[k], b.L[k]
            z_uv = el.zhat(u, v)
            base = el.z2hat(u, v) - 2.0 * z_uv * el.zhat(a.R[k], a.R[k])
            sign = 1.0
        else:
            u, v = a.R[k], b.R[k]
            z_uv = el.zhat(u, v)
            base = el.z2hat(u, v) - 2.0 * el.zhat(a.L[k], a.L[k]) * z_uv
            sign = -1.0
        cross = 0.0
        for kp in range(N):
            if kp == k:
                continue
            cross += el.zhat(a.L[kp], a.L[kp]) - el.zhat(a.R[kp], a.R[kp])
        return base + 2.0 * sign * z_uv * cross
    (s1, k1), (s2, k2) = d
    z1 = (
        el.zhat(a.L[k1], b.L[k1]) if s1 == "L" else el.zhat(a.R[k1], b.R[k1])
    )
    z2 = (
        el.zhat(a.L[k2], b.L[k2]) if s2 == "L" else el.zhat(a.R[k2], b.R[k2])
    )
    sign = (1.0 if s1 == "L" else -1.0) * (1.0 if s2 == "L" else -1.0)
    return 2.0 * sign * z1 * z2


def x_matrix_element(
    a: ManyBodyIndex,
    b: ManyBodyIndex,
    params: ModelParams,
    elements: SingleBodyElements | None = None,
) -> float:
    """<phi_a | X | phi_b> = -Y <phi_a | sum (z^L - z^R) | phi_b> (rest frame)."""
    el = elements or SingleBodyElements(params)
    return -float(heavy_body_prefactor(params)) * _sum_z_element(a, b, el)


def build_sum_z_matrix(basis, params, elements=None) -> np.ndarray:
    el = elements or SingleBodyElements(params)
    n = len(basis)
    mat = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            v = _sum_z_element(basis[i], basis[j], el)
            mat[i, j] = v
            mat[j, i] = v
    return mat


def build_sum_z_squared_matrix(basis, params, elements=None) -> np.ndarray:
    el = elements or SingleBodyElements(params)
    n = len(basis)
    mat = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            v = _sum_z_squared_element(basis[i], basis[j], el)
            mat[i, j] = v
            mat[j, i] = v
    return mat


def build_x_matrix(basis, params, elements=None) -> np.ndarray:
    return -float(heavy_body_prefactor(params)) * build_sum_z_matrix(
        basis, params, elements
    )


# ---------------------------------------------------------------------------
# Ensembles.
# ---------------------------------------------------------------------------

PROFILES = ("special_loglog", "inverse_square", "gibbs_gaussian", "custom")


def rng_for(seed: int, stream: str) -> np.random.Generator:
    """Named deterministic substream of the master seed."""
    digest = hashlib.sha256(stream.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([seed] + words))


@dataclass(frozen=True)
class EnsembleDraw:
    """Unit-norm coefficient vector over an ordered basis, with provenance."""

    basis: tuple
    c: np.ndarray
    profile: str
    beta: float
    seed: int

    def norm_deficit(self) -> float:
        return abs(float(np.sum(np.abs(self.c) ** 2)) - 1.0)


def _special_excitations(basis) -> list:
    """Excitation u of each label in a special basis (0 for the ground)."""
    out = []
    for idx in basis:
        if any(idx.R):
            raise DomainError("special profiles need a special-state basis")
        nonzero = [x for x in idx.L if x]
        if len(nonzero) > 1:
            raise DomainError("special profiles need a special-state basis")
        out.append(nonzero[0] if nonzero else 0)
    return out


def make_ensemble(
    basis,
    profile: str,
    beta,
    seed: int,
    params: ModelParams,
    custom_weights=None,
) -> EnsembleDraw:
    """Coefficient vector on the unit sphere.

    special_loglog: |c_u| proportional to 1/(u log u) for u >= 2, zero
    otherwise (a square-summable sequence whose absolute sum diverges).
    inverse_square: |c_u| proportional to u**-2 for u >= 2 (absolutely
    summable comparison profile).
    gibbs_gaussian: complex Gaussian amplitudes with variance
    exp(-beta lambda), projected to the sphere; deterministic under seed.
    """
    if not basis:
        raise ValidationError("basis must be nonempty")
    beta = float(beta)
    if profile in ("special_loglog", "inverse_square"):
        us = _special_excitations(basis)
        c = np.zeros(len(basis), dtype=complex)
        for i, u in enumerate(us):
            if u >= 2:
                c[i] = 1.0 / (u * math.log(u)) if profile == "special_loglog" else u**-2.0
    elif profile == "gibbs_gaussian":
        if beta < 0:
            raise ValidationError("beta must be nonnegative")
        lam = np.array([float(idx.lambda_modified(params)) for idx in basis])
        if math.isinf(beta):
            weights = (lam == lam.min()).astype(float)
        else:
            weights = np.exp(-beta * (lam - lam.min()))
        rng = rng_for(seed, f"ensemble/{profile}/{beta}")
        g = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
        c = g * np.sqrt(weights / 2.0)
    elif profile == "custom":
        if custom_weights is None:
            raise ValidationError("custom profile needs custom_weights")
        c = np.asarray(custom_weights(basis), dtype=complex)
    else:
        raise DomainError(f"unknown profile {profile!r}; choose from {PROFILES}")
    nrm = float(np.sqrt(np.sum(np.abs(c) ** 2)))
    if nrm == 0:
        raise ValidationError("profile produced the zero vector on this basis")
    return EnsembleDraw(
        basis=tuple(basis), c=c / nrm, profile=profile, beta=beta, seed=seed
    )


# ---------------------------------------------------------------------------
# Criterion partial sums.
# ---------------------------------------------------------------------------


def bml_partial_sums(
    draw: EnsembleDraw, params: ModelParams, U_list, method: str = "closed"
):
    """Partial sums of |c_u| |<phi_u|sum(z^L - z^R)|phi_0>| |lambda_u - lambda_0|.

    method 'closed' uses the Gamma-product form of the one-body element
    (exactly equal to the moment route; cross-checked in tests), 'direct'
    the moment route.  Returns [(U, partial_sum)] for each requested U.
    """
    us = _special_excitations(draw.basis)
    targets = sorted(set(int(v) for v in U_list))
    if not targets:
        return []
    w = float(params.w)
    sums = []
    acc = 0.0
    it = iter(targets)
    bound = next(it)
    order = sorted(range(len(us)), key=lambda i: us[i])
    for i in order:
        u = us[i]
        if u < 1:
            continue
        while u > bound:
            sums.append((bound, acc))
            nxt = next(it, None)
            if nxt is None:
                return sums
            bound = nxt
        amp = abs(draw.c[i])
        if amp == 0.0:
            continue
        if method == "closed":
            m = normalized_z_ground(u, params)
        elif method == "direct":
            m = abs(float(normalized_matrix_element(u, 0, "z", params)))
        else:
            raise DomainError(f"unknown method {method!r}")
        acc += amp * m * 4.0 * w * u
    sums.append((bound, acc))
    for nxt in it:
        sums.append((nxt, acc))
    return sums


def loglog_reference_increment(params: ModelParams, u_anchor: int, U_from: int, U_to: int) -> float:
    """Increment the partial sums would show if the summand were kappa |c_u|
    with kappa frozen at u_anchor (the divergence-criterion reference)."""
    kappa = normalized_z_ground(u_anchor, params) * 4.0 * float(params.w) * u_anchor
    total = 0.0
    for u in range(max(2, U_from + 1), U_to + 1):
        total += kappa / (u * math.log(u))
    return total


# ---------------------------------------------------------------------------
# Dispersion of the heavy-body coordinate over the ensemble.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DispersionReport:
    N: int
    beta: float
    Y: float
    terms: tuple
    dispersion: float
    dispersion_reduced: float
    stderr: float
    n_draws: int
    scaling_exponent: float | None = None


def dispersion_report(
    params: ModelParams,
    basis,
    beta,
    n_draws: int,
    seed: int,
    elements: SingleBodyElements | None = None,
) -> DispersionReport:
    """Monte-Carlo dispersion of X over Gibbs draws, with the paired-term
    reduction computed from the same draws for comparison."""
    if n_draws < 1:
        raise ValidationError("n_draws must be positive")
    el = elements or SingleBodyElements(params)
    a1 = build_sum_z_matrix(basis, params, el)
    a2 = build_sum_z_squared_matrix(basis, params, el)
    y = float(heavy_body_prefactor(params))
    full = np.empty(n_draws)
    t1 = np.empty(n_draws)
    t2 = np.empty(n_draws)
    t3 = np.empty(n_draws)
    a1_sq = a1 * a1
    diag1 = np.diag(a1).copy()
    diag2 = np.diag(a2).copy()
    np.fill_diagonal(a1_sq, 0.0)
    for i in range(n_draws):
        draw = make_ensemble(basis, "gibbs_gaussian", beta, seed + i, params)
        c = draw.c
        p = np.abs(c) ** 2
        mean_sq = float(np.real(np.conj(c) @ (a2 @ c)))
        mean_x = float(np.real(np.conj(c) @ (a1 @ c)))
        full[i] = mean_sq - mean_x**2
        t1[i] = float(p @ diag2)
        t2[i] = 2.0 * float(p @ a1_sq @ p)
        t3[i] = float(p @ diag1) ** 2
    dispersion = y * y * float(np.mean(full))
    reduced = y * y * float(np.mean(t1) - np.mean(t2) - np.mean(t3))
    stderr = y * y * float(np.std(full, ddof=1) / np.sqrt(n_draws)) if n_draws > 1 else 0.0
    return DispersionReport(
        N=params.N,
        beta=float(beta),
        Y=y,
        terms=(float(np.mean(t1)), float(np.mean(t2)), float(np.mean(t3))),
        dispersion=dispersion,
        dispersion_reduced=reduced,
        stderr=stderr,
        n_draws=n_draws,
    )


def dispersion_scaling(
    make_params_for_n,
    N_list,
    beta,
    n_max: int,
    n_draws: int,
    seed: int,
):
    """Dispersion sweep over system sizes; fits the power of N in
    dispersion / Y**2 and returns (reports, fitted_exponent)."""
    points = []
    reports = []
    for N in N_list:
        params = make_params_for_n(N)
        basis = enumerate_basis(params, n_max, mode="full")
        rep = dispersion_report(params, basis, beta, n_draws, seed)
        reports.append(rep)
        points.append((N, rep.dispersion / rep.Y**2))
    xs = [math.log(n) for n, _ in points]
    ys = [math.log(v) for _, v in points]
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum(
        (x - mx) ** 2 for x in xs
    )
    reports = [
        DispersionReport(
            N=r.N,
            beta=r.beta,
            Y=r.Y,
            terms=r.terms,
            dispersion=r.dispersion,
            dispersion_reduced=r.dispersion_reduced,
            stderr=r.stderr,
            n_draws=r.n_draws,
            scaling_exponent=slope,
        )
        for r in reports
    ]
    return reports, slope
