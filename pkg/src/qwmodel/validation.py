"""Programmatic invariant suite behind the `validate` CLI command.

Each check is a named callable returning (ok, detail).  The suite covers
the exact identities (Gamma recursion, base-2 duplication, moment
recursion, the constant-term consistency row, alternating binomial sums,
orthogonality, the boundary sums of the norm assembly), the dual numeric
routes (finite-difference spectrum oracle, quadrature versus moment
algebra, direct versus integral series), the perturbation structure, and
the trajectory layer.  It is sized to finish in well under ten minutes.

Three properties of the source derivation are refuted by the exact
arithmetic itself (see the test suite and README): the printed norm limit,
the claimed sharp 1/u rate of the normalized ground coupling, and the
divergence of the 1/(u log u) criterion sums.  `validate` reports the
measured behavior for these as informational lines rather than failures,
since the corrected forms are the ones the exact cross-checks support.
"""

import math
import random
from fractions import Fraction

import numpy as np

from . import dynamics, manybody, matelem, numerics, oscseries, perturbation, spectrum1d
from .model_core import PhysicalConstants, make_params


def _check_gamma_recursion():
    x = Fraction(1, 2)
    while x <= 50:
        lhs = numerics.gamma_as_value(x + 1)
        rhs = numerics.gamma_as_value(x) * numerics.ExactValue(x)
        if lhs != rhs:
            return False, f"recursion failed at x={x}"
        x += Fraction(1, 2)
    return True, "Gamma(x+1) = x Gamma(x) exact for x = 1/2 .. 50"


def _check_duplication():
    s = Fraction(1, 2)
    while s <= 20:
        if numerics.legendre_duplication_check(s, 2) != 0:
            return False, f"base-2 residual nonzero at s={s}"
        if abs(numerics.legendre_duplication_check(s, "e")) < 1e-3:
            return False, f"base-e residual too small at s={s}"
        s += Fraction(1, 2)
    return True, "duplication identity: base 2 exact, base e fails, s in [1/2, 20]"


def _check_moment_recursion():
    for s_eff, w in ((Fraction(3, 2), Fraction(1)), (Fraction(5, 2), Fraction(2)), (Fraction(2), Fraction(3, 2))):
        table = spectrum1d.moments(s_eff, w, 12)
        for n in range(1, 12):
            lhs = table.sigma[n + 1]
            rhs = table.sigma[n] * (2 * n + 1 + 2 * s_eff) / (2 * w)
            if lhs != rhs:
                return False, f"moment recursion failed at n={n}, s_eff={s_eff}"
    return True, "moment recursion exact through sigma_24 for three parameter sets"


def _check_first_row(u_max=200):
    params = make_params("3/2", "1")
    for u in range(1, u_max + 1):
        if spectrum1d.first_row_residual(u, params) != 0:
            return False, f"constant-term row failed at u={u}"
    return True, f"constant-term consistency row exact for u <= {u_max}"


def _check_binomial_sums(u_max=500):
    for u in range(1, u_max + 1):
        if spectrum1d.binomial_alternating_sum(u) != 0:
            return False, f"alternating binomial sum nonzero at u={u}"
    return True, f"alternating binomial sum exactly zero for u <= {u_max}"


def _check_orthogonality():
    params = make_params("3/2", "1")
    rng = random.Random(7)
    pairs = {(u, v) for u in range(0, 30) for v in range(0, 30) if u < v}
    sample = rng.sample(sorted(pairs), 60)
    for u, v in sample:
        if matelem.inner_product(u, v, params) != 0:
            return False, f"inner product nonzero at ({u},{v})"
    return True, "orthogonality exact on 60 sampled pairs with u,v < 30"


def _check_assembly(u_max=40):
    params = make_params("3/2", "1")
    for u in range(1, u_max + 1):
        rep = matelem.denominator_assembly(params, u)
        if rep.j0 != 0 or rep.j1 != 0:
            return False, f"boundary sums nonzero at u={u}"
        if rep.assembled != matelem.norm_sq(u, params):
            return False, f"assembly mismatch at u={u}"
    return True, f"norm assembly equals the direct route exactly for u <= {u_max}"


def _check_fd_oracle():
    params = make_params("3/2", "1")
    vals = spectrum1d.fd_oracle_spectrum(params, 2500, 1e-3, 10.0, 3)
    exact = [float(spectrum1d.eigenvalue(n, params)) for n in range(3)]
    rel = max(abs(v - e) / e for v, e in zip(vals, exact))
    return rel < 5e-3, f"finite-difference spectrum within {rel:.1e} of closed form"


def _check_method_equivalence():
    params = make_params("3/2", "1")
    for u, v, kernel in ((1, 0, "z"), (2, 1, "identity"), (2, 0, "d_dz"), (1, 1, "z_squared")):
        a = matelem.matelem_report(u, v, kernel, params, "moment_algebra")
        b = matelem.matelem_report(u, v, kernel, params, "quadrature")
        scale = max(abs(a.raw), 1e-12)
        if abs(a.raw - b.raw) / scale > 1e-12:
            return False, f"routes disagree for {kernel}({u},{v})"
    return True, "moment algebra and quadrature agree to 1e-12 on spot checks"


def _check_series_duality():
    s = Fraction(3, 2)
    for u in (5, 20):
        d = float(oscseries.s1_direct(u, s, 2))
        i = float(oscseries.s1_integral(u, s, 2))
        if abs(d - i) > 1e-8 * max(abs(d), 1e-12):
            return False, f"S1 duality failed at u={u}"
        d2 = float(oscseries.s2_direct(u, s, 2))
        i2 = float(oscseries.s2_integral(u, s, 2))
        if abs(d2 - i2) > 1e-8 * max(abs(d2), 1e-12):
            return False, f"S2 duality failed at u={u}"
    for u in (5, 20):
        for t in (1, 2):
            d3 = float(oscseries.s3_direct(u, t))
            i3 = oscseries.s3_integral(u, t)
            if abs(d3 - i3) > 1e-6 * max(abs(d3), 1e-9):
                return False, f"S3 duality failed at u={u}, t={t}"
            if abs(d3) >= 2**t:
                return False, f"S3 bound violated at u={u}, t={t}"
    return True, "series duality to tolerance and the 2^t bound hold"


def _check_perturbation():
    params = make_params("3/2", "1", N=2)
    if perturbation.ground_first_order_shift(params) != 0.0:
        return False, "ground first-order shift nonzero"
    for n in (1, 2, 3):
        k = perturbation.build_k_matrix(n, params)
        if not np.allclose(k.entries, k.entries.T):
            return False, f"K not symmetric at level {n}"
        if np.any(np.abs(np.diag(k.entries)) > 0):
            return False, f"K diagonal nonzero at level {n}"
        split = perturbation.split_level(k, params)
        if np.any(np.abs(split.corrections) > split.lhg_bound + 1e-12):
            return False, f"row-sum bound violated at level {n}"
        if abs(float(np.sum(split.corrections))) > 1e-10:
            return False, f"corrections do not sum to zero at level {n}"
    return True, "K structure, row-sum bound and zero trace hold for N=2, n <= 3"


def _check_trajectory():
    params = make_params("3/2", "1", N=1)
    consts = PhysicalConstants(hbar=2.0, m_light=1.0)
    basis = manybody.enumerate_basis(params, 4, mode="special")
    draw = manybody.make_ensemble(basis, "gibbs_gaussian", 0.5, 11, params)
    t = np.linspace(0.0, 20.0, 400)
    traj = dynamics.synthesize_trajectory(draw, params, consts, t)
    if traj.imag_ratio > 1e-12:
        return False, f"trajectory not real: {traj.imag_ratio:.1e}"
    if abs(traj.msd[0]) > 0:
        return False, "msd(0) != 0"
    return True, "trajectories real to 1e-12 with msd(0) = 0"


def _check_ensembles():
    params = make_params("3/2", "1", N=1)
    basis = manybody.enumerate_basis(params, 12, mode="special")
    for profile, beta in (("special_loglog", 0.0), ("gibbs_gaussian", 1.0)):
        d1 = manybody.make_ensemble(basis, profile, beta, 5, params)
        d2 = manybody.make_ensemble(basis, profile, beta, 5, params)
        if d1.norm_deficit() > 1e-14:
            return False, f"{profile} normalization off by {d1.norm_deficit():.1e}"
        if not np.array_equal(d1.c, d2.c):
            return False, f"{profile} not deterministic under seed"
    return True, "ensembles normalized to 1e-14 and reproducible under seed"


def _info_measured_rates():
    params = make_params("3/2", "1")
    rows = matelem.theorem2_sequence(params, [64, 128, 256, 512], method="closed")
    slope_m = matelem.fit_loglog_slope([(u, m) for u, m, _ in rows])
    norm_512 = float(matelem.norm_sq(512, params))
    return True, (
        "measured behavior: normalized <u|z|0> slope "
        f"{slope_m:.3f} (documented: the asserted -1 is an upper-bound order only); "
        f"<xi_512|xi_512> = {norm_512:.3e} (tends to 0, not to the printed constant)"
    )


CHECKS = [
    ("gamma_recursion", _check_gamma_recursion),
    ("duplication_base2_vs_e", _check_duplication),
    ("moment_recursion", _check_moment_recursion),
    ("first_row_identity", _check_first_row),
    ("alternating_binomial", _check_binomial_sums),
    ("orthogonality", _check_orthogonality),
    ("norm_assembly", _check_assembly),
    ("fd_oracle", _check_fd_oracle),
    ("method_equivalence", _check_method_equivalence),
    ("series_duality", _check_series_duality),
    ("perturbation_structure", _check_perturbation),
    ("trajectory_reality", _check_trajectory),
    ("ensemble_contracts", _check_ensembles),
    ("documented_discrepancies", _info_measured_rates),
]


def run_validation(emit=print) -> bool:
    """Run every invariant; prints one line per check; True iff all passed."""
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        emit(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return all_ok
