"""Degenerate first-order perturbation theory for the cross-derivative
coupling between relative coordinates.

After the re-organization maneuver (the same-index second derivatives are
absorbed into the unperturbed operator), the perturbation is

    J = - sum_{j != k} [dL_j dL_k + dR_j dR_k] - 2 sum_{j,k} dL_j dR_k.

On normalized product states every J element factorizes into two
single-coordinate derivative elements; the one-body derivative element is
exactly antisymmetric, hence zero on the diagonal, which forces

  * J's diagonal to vanish (the ground-state first-order shift is exactly 0),
  * K (the restriction of J to a degenerate level) to be symmetric with
    zero diagonal, nonzero only between labels differing at exactly two
    entries.

Level splitting is the symmetric eigenproblem of K; every correction obeys
the row-sum eigenvalue bound and the coarser count-times-max-entry bound.

The order-r**2 residual law of first-order theory is verified inside a
Galerkin truncation (a finite symmetric matrix with exact moment-algebra
entries), where the first-order equations are exactly consistent; in the
full space any finite expansion of the correction vector leaves an O(r)
projection tail because the derivative of the one-body ground state has
slow spectral decay (see the first_order_vector tail report).
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CutoffError, DomainError, EigensolveError, SizeError
from .manybody import (
    ManyBodyIndex,
    _diff_positions,
    enumerate_basis,
    ground_state,
    special_state,
)
from .matelem import SingleBodyElements, normalized_matrix_element
from .model_core import ModelParams

K_DIMENSION_CAP = 3000


def j_matrix_element(
    a: ManyBodyIndex,
    b: ManyBodyIndex,
    params: ModelParams,
    elements: SingleBodyElements | None = None,
) -> float:
    """<phi_a | J | phi_b> for normalized product states.

    Every term carries two one-coordinate derivative factors; since the
    diagonal derivative element vanishes, the result is nonzero only when
    the labels differ at exactly two entries.
    """
    el = elements or SingleBodyElements(params)
    d = _diff_positions(a, b)
    if len(d) != 2:
        return 0.0

    def dval(side: str, k: int) -> float:
        if side == "L":
            return el.dhat(a.L[k], b.L[k])
        return el.dhat(a.R[k], b.R[k])

    (s1, k1), (s2, k2) = d
    # ordered pairs in the double sums contribute twice for distinct slots of
    # the same side, and the LR family carries an explicit factor 2
    return -2.0 * dval(s1, k1) * dval(s2, k2)


def ground_first_order_shift(params: ModelParams) -> float:
    """First-order shift of the ground level; exactly zero after the RoM."""
    g = ground_state(params.N)
    return j_matrix_element(g, g, params)


def _compositions_exact(slots: int, total: int):
    def rec(remaining: int, budget: int):
        if remaining == 1:
            yield (budget,)
            return
        for first in range(budget + 1):
            for rest in rec(remaining - 1, budget - first):
                yield (first,) + rest

    yield from rec(slots, total)


def degenerate_level_basis(level_n: int, params: ModelParams) -> list:
    """All labels with total excitation level_n (the eigenspace of that level)."""
    if level_n < 0:
        raise DomainError("level_n must be nonnegative")
    return [
        ManyBodyIndex(L=occ[: params.N], R=occ[params.N :])
        for occ in _compositions_exact(2 * params.N, level_n)
    ]


def level_multiplicity(level_n: int, N: int) -> int:
    return math.comb(level_n + 2 * N - 1, 2 * N - 1)


@dataclass(frozen=True)
class KMatrix:
    level_n: int
    basis: tuple
    entries: np.ndarray
    sparsity: int

    @property
    def m_n(self) -> int:
        return len(self.basis)


def build_k_matrix(
    level_n: int, params: ModelParams, cap: int = K_DIMENSION_CAP
) -> KMatrix:
    """K[t][p] = <phi^(t) | J | phi^(p)> over the degenerate level basis."""
    m_n = level_multiplicity(level_n, params.N)
    if m_n > cap:
        raise SizeError(f"level {level_n} has dimension {m_n}, above cap {cap}")
    basis = degenerate_level_basis(level_n, params)
    el = SingleBodyElements(params)
    k = np.zeros((m_n, m_n))
    nonzero = 0
    for i in range(m_n):
        for j in range(i + 1, m_n):
            v = j_matrix_element(basis[i], basis[j], params, el)
            k[i, j] = v
            k[j, i] = v
            if v != 0.0:
                nonzero += 2
    return KMatrix(level_n=level_n, basis=tuple(basis), entries=k, sparsity=nonzero)


@dataclass(frozen=True)
class SplitLevel:
    lambda0: Fraction
    corrections: np.ndarray
    vectors: np.ndarray
    lhg_bound: float
    coarse_bound: float
    level_n: int


def split_level(k: KMatrix, params: ModelParams) -> SplitLevel:
    """Eigen-split of a degenerate level: corrections ascending, with the
    row-sum bound and the coarser n(2N-1) * max|K| bound."""
    try:
        vals, vecs = np.linalg.eigh(k.entries)
    except np.linalg.LinAlgError as exc:
        raise EigensolveError(str(exc)) from exc
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    # deterministic sign convention: first nonzero component positive
    for col in range(vecs.shape[1]):
        v = vecs[:, col]
        nz = np.nonzero(np.abs(v) > 1e-14)[0]
        if nz.size and v[nz[0]] < 0:
            vecs[:, col] = -v
    abs_k = np.abs(k.entries)
    lhg = float(np.max(np.sum(abs_k, axis=0))) if k.m_n else 0.0
    c_entry = float(np.max(abs_k)) if k.m_n else 0.0
    coarse = k.level_n * (2 * params.N - 1) * c_entry
    lam0 = 4 * params.w * k.level_n + 2 * params.N * params.w * (1 + 2 * params.s)
    return SplitLevel(
        lambda0=lam0,
        corrections=vals,
        vectors=vecs,
        lhg_bound=lhg,
        coarse_bound=coarse,
        level_n=k.level_n,
    )


@dataclass(frozen=True)
class FirstOrderVector:
    level_n: int
    correction_index: int
    coefficients: dict
    tail_norm: float


def first_order_vector(
    level_n: int,
    chosen_correction_index: int,
    params: ModelParams,
    basis_cutoff: int,
    tail_tol: float | None = None,
) -> FirstOrderVector:
    """First-order correction coefficients a_k over labels outside the level.

    a_k = -(lambda_k - lambda_n)^-1 <phi_k | J | sum_p b_p phi^(p)> with b
    the chosen split eigenvector.  Coefficients inside the level are zero by
    construction.  The tail norm is the part of the coefficient norm living
    on the outermost shell (total excitation == basis_cutoff); CutoffError
    if tail_tol is given and exceeded.
    """
    if basis_cutoff < level_n + 2:
        raise DomainError("basis_cutoff must exceed the level by a buffer")
    k = build_k_matrix(level_n, params)
    split = split_level(k, params)
    if not (0 <= chosen_correction_index < k.m_n):
        raise DomainError("correction index out of range")
    b = split.vectors[:, chosen_correction_index]
    el = SingleBodyElements(params)
    basis = enumerate_basis(params, basis_cutoff, mode="full")
    lam_n = 4 * params.w * level_n
    coeffs = {}
    tail_sq = 0.0
    for idx in basis:
        if idx.total_n == level_n:
            continue
        num = sum(
            bp * j_matrix_element(idx, member, params, el)
            for bp, member in zip(b, k.basis)
        )
        if num == 0.0:
            continue
        gap = float(4 * params.w * idx.total_n - lam_n)
        a = -num / gap
        coeffs[idx] = a
        if idx.total_n == basis_cutoff:
            tail_sq += a * a
    tail = math.sqrt(tail_sq)
    if tail_tol is not None and tail > tail_tol:
        raise CutoffError(f"tail norm {tail:.3e} above tolerance {tail_tol:.3e}")
    return FirstOrderVector(
        level_n=level_n,
        correction_index=chosen_correction_index,
        coefficients=coeffs,
        tail_norm=tail,
    )


# ---------------------------------------------------------------------------
# Residual scaling inside a Galerkin truncation.
# ---------------------------------------------------------------------------


def _j_matrix_dense(basis, params, el: SingleBodyElements) -> np.ndarray:
    n = len(basis)
    j = np.zeros((n, n))
    for i in range(n):
        for jdx in range(i + 1, n):
            v = j_matrix_element(basis[i], basis[jdx], params, el)
            if v != 0.0:
                j[i, jdx] = v
                j[jdx, i] = v
    return j


def residual_scaling(
    params: ModelParams,
    basis_cutoff: int,
    r_values,
) -> dict:
    """Norm of (H0 + r J - lambda0 - r lambda1)(phi0 + r phi1) against r.

    Runs inside the Galerkin truncation (finite symmetric matrices with
    moment-algebra entries) for the ground level, where phi1 solves the
    first-order equation exactly and the residual is exactly order r**2.
    Returns the residual norms and the fitted log-log slope.
    """
    el = SingleBodyElements(params)
    basis = enumerate_basis(params, basis_cutoff, mode="full")
    lam = np.array([float(idx.lambda_modified(params)) for idx in basis])
    jmat = _j_matrix_dense(basis, params, el)
    i0 = min(range(len(basis)), key=lambda i: lam[i])
    lam0 = lam[i0]
    lam1 = jmat[i0, i0]  # exactly zero
    phi1 = np.zeros(len(basis))
    for kdx in range(len(basis)):
        if lam[kdx] != lam0:
            phi1[kdx] = jmat[kdx, i0] / (lam0 - lam[kdx])
    e0 = np.zeros(len(basis))
    e0[i0] = 1.0
    norms = []
    for r in r_values:
        r = float(r)
        vec = e0 + r * phi1
        res = lam * vec + r * (jmat @ vec) - (lam0 + r * lam1) * vec
        norms.append((r, float(np.linalg.norm(res))))
    xs = [math.log(r) for r, _ in norms]
    ys = [math.log(n) for _, n in norms]
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum(
        (x - mx) ** 2 for x in xs
    )
    return {"residuals": norms, "slope": slope, "lambda1": lam1, "basis_size": len(basis)}


# ---------------------------------------------------------------------------
# Structural robustness of the divergence criterion at first order.
# ---------------------------------------------------------------------------


def bml_robustness_check(
    params: ModelParams,
    r_values,
    profile_c,
    U_list,
    basis_cutoff: int | None = None,
) -> list:
    """Partial sums recomputed with first-order-corrected elements.

    For each special state u the corrected element is
    M_u + r (<theta_u|O|phi_0> + <phi_u|O|theta_0>) with theta the
    reduced-resolvent first-order vector (degenerate directions excluded;
    diagonal J elements vanish so the eigenvalue gaps keep their 4 w u
    form at this order).  profile_c maps u to the coefficient magnitude.
    Returns rows (r, [(U, partial_sum)]); r = 0 reproduces the unperturbed
    sums bit for bit.
    """
    if params.N != 1:
        raise DomainError("the robustness experiment runs at N = 1")
    u_max = max(U_list)
    cutoff = basis_cutoff or (u_max + 6)
    el = SingleBodyElements(params)
    basis = enumerate_basis(params, cutoff, mode="full")
    index_of = {idx: i for i, idx in enumerate(basis)}
    lam = np.array([float(idx.lambda_modified(params)) for idx in basis])
    # O = sum_k (z_k^L - z_k^R); dense over the truncated basis
    from .manybody import build_sum_z_matrix

    omat = build_sum_z_matrix(basis, params, el)
    i_ground = index_of[ground_state(1)]
    specials = {u: index_of[special_state(u, 1)] for u in range(1, u_max + 1)}

    def theta_column(i_state: int) -> np.ndarray:
        col = np.zeros(len(basis))
        for kdx, idx in enumerate(basis):
            if lam[kdx] == lam[i_state]:
                continue
            jv = j_matrix_element(basis[kdx], basis[i_state], params, el)
            if jv:
                col[kdx] = jv / (lam[i_state] - lam[kdx])
        return col

    theta0 = theta_column(i_ground)
    base_elements = {}
    corrections = {}
    for u, iu in specials.items():
        theta_u = theta_column(iu)
        base_elements[u] = omat[iu, i_ground]
        corrections[u] = float(theta_u @ omat[:, i_ground] + omat[iu, :] @ theta0)
    w = float(params.w)
    rows = []
    for r in r_values:
        r = float(r)
        acc = 0.0
        sums = []
        targets = iter(sorted(set(int(v) for v in U_list)))
        bound = next(targets)
        for u in range(1, u_max + 1):
            while u > bound:
                sums.append((bound, acc))
                bound = next(targets)
            cu = profile_c(u)
            if cu:
                m_corr = base_elements[u] + r * corrections[u]
                acc += abs(cu) * abs(m_corr) * 4.0 * w * u
        sums.append((bound, acc))
        for nxt in targets:
            sums.append((nxt, acc))
        rows.append((r, sums))
    return rows


def splitting_rows(params: ModelParams, level_max: int) -> list:
    """Rows for splitting.csv: level, dimension, correction index and value,
    row-sum bound, coarse bound."""
    rows = []
    for n in range(0, level_max + 1):
        k = build_k_matrix(n, params)
        split = split_level(k, params)
        for idx, val in enumerate(split.corrections):
            rows.append(
                [n, k.m_n, idx, float(val), split.lhg_bound, split.coarse_bound]
            )
    return rows
