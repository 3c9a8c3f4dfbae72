"""Frequencies and physical units, quasi-periodic trajectory synthesis,
mean-square-displacement analysis, the diffusion criterion, scenario
arithmetic, and the classical baselines (Einstein coefficient, analytic
Langevin displacement curves, sedimentation profile).

The heavy-body expectation evolves as

    X(t) = sum_{n,n'} conj(c_n) c_{n'} M_{n,n'} exp(-i (omega_{n'} - omega_n) t)

with M the X matrix over product states and omega = (hbar / 2m) lambda_mod.
The result is real for Hermitian M up to rounding; the mean square
displacement is lag-averaged along the trajectory, optionally ensemble
averaged over draws.

Diffusion verdicts default to the empirical route: least squares
msd(tau) ~ a + 2 D tau + c tau^2 on [0, T]; the criterion is non-positive
average curvature (c <= 0) and D is half the fitted linear slope.  The
kernel-weighted sums gamma* = (40/T^2) sum a H(mu) and
D = (12/T) sum a G(mu) are available in pluggable mode for callers who can
supply the two kernel functions; results in that mode are flagged as
dependent on those externally supplied kernels.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FitError, ValidationError
from .manybody import (
    EnsembleDraw,
    build_sum_z_matrix,
    build_x_matrix,
    dispersion_report,
    heavy_body_prefactor,
    make_ensemble,
)
from .matelem import SingleBodyElements
from .model_core import ModelParams, PhysicalConstants


@dataclass(frozen=True)
class FrequencyTable:
    basis: tuple
    omega: np.ndarray  # rad/s per basis state
    nu: np.ndarray  # pairwise omega_n - omega_n' (rad/s)
    mu: np.ndarray  # T * nu (rad)
    dropped: np.ndarray  # pairs with |mu| below the cutoff
    cutoff_mu: float
    T: float


def frequency_table(
    basis,
    params: ModelParams,
    consts: PhysicalConstants,
    T: float,
    cutoff_mu: float = 1e-3,
) -> FrequencyTable:
    """omega_n = (hbar/2m) lambda_mod;n and all pairwise differences.

    Pairs whose dimensionless argument |nu| T falls below cutoff_mu are
    flagged as dropped (too slow to matter over the observation window)."""
    if T <= 0:
        raise ValidationError("T must be positive")
    lam = np.array([float(idx.lambda_modified(params)) for idx in basis])
    omega = consts.hbar / (2.0 * consts.m_light) * lam
    nu = omega[:, None] - omega[None, :]
    mu = T * nu
    dropped = (np.abs(mu) < cutoff_mu) & ~np.eye(len(basis), dtype=bool)
    return FrequencyTable(
        basis=tuple(basis),
        omega=omega,
        nu=nu,
        mu=mu,
        dropped=dropped,
        cutoff_mu=cutoff_mu,
        T=T,
    )


@dataclass(frozen=True)
class TrajectoryResult:
    times: np.ndarray
    x: np.ndarray  # meters
    lags: np.ndarray
    msd: np.ndarray  # lag-averaged along the trajectory
    imag_ratio: float
    msd_ensemble: np.ndarray | None = None


def synthesize_trajectory(
    draw: EnsembleDraw,
    params: ModelParams,
    consts: PhysicalConstants,
    t_grid,
    elements: SingleBodyElements | None = None,
    x_matrix: np.ndarray | None = None,
) -> TrajectoryResult:
    """Expectation trajectory of the heavy-body coordinate for one draw."""
    basis = draw.basis
    if not basis:
        raise ValidationError("empty basis")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValidationError("t_grid must be a 1-d grid with at least two points")
    m = x_matrix if x_matrix is not None else build_x_matrix(basis, params, elements)
    lam = np.array([float(idx.lambda_modified(params)) for idx in basis])
    omega = consts.hbar / (2.0 * consts.m_light) * lam
    c = draw.c
    x = np.empty(t.size)
    max_im = 0.0
    for i, ti in enumerate(t):
        phase = np.exp(-1j * omega * ti) * c
        val = np.vdot(phase, m @ phase)
        x[i] = val.real
        max_im = max(max_im, abs(val.imag))
    scale = float(np.max(np.abs(x))) or 1.0
    lags, msd = msd_lag_average(t, x)
    return TrajectoryResult(
        times=t, x=x, lags=lags, msd=msd, imag_ratio=max_im / scale
    )


def msd_lag_average(times: np.ndarray, x: np.ndarray, max_lag_fraction: float = 0.5):
    """Lag-averaged mean square displacement over a uniform time grid."""
    n = x.size
    n_lags = max(2, int(n * max_lag_fraction))
    dt = times[1] - times[0]
    lags = np.arange(n_lags) * dt
    msd = np.empty(n_lags)
    msd[0] = 0.0
    for j in range(1, n_lags):
        diff = x[j:] - x[:-j]
        msd[j] = float(np.mean(diff * diff))
    return lags, msd


def ensemble_msd(
    params: ModelParams,
    consts: PhysicalConstants,
    basis,
    beta,
    t_grid,
    n_draws: int,
    seed: int,
) -> TrajectoryResult:
    """Trajectory of the last draw plus the ensemble-averaged MSD curve."""
    el = SingleBodyElements(params)
    m = build_x_matrix(basis, params, el)
    acc = None
    traj = None
    for i in range(n_draws):
        draw = make_ensemble(basis, "gibbs_gaussian", beta, seed + i, params)
        traj = synthesize_trajectory(draw, params, consts, t_grid, x_matrix=m)
        acc = traj.msd if acc is None else acc + traj.msd
    return TrajectoryResult(
        times=traj.times,
        x=traj.x,
        lags=traj.lags,
        msd=traj.msd,
        imag_ratio=traj.imag_ratio,
        msd_ensemble=acc / n_draws,
    )


@dataclass(frozen=True)
class KernelSpec:
    """Externally supplied analytic kernels for the criterion and coefficient.

    In empirical mode both callbacks are absent and verdicts come from the
    least-squares curvature fit of the measured displacement curve."""

    H: object = None
    G: object = None
    mode: str = "empirical"

    def __post_init__(self):
        if self.mode == "empirical":
            if self.H is not None or self.G is not None:
                raise ValidationError("empirical mode carries no kernel callbacks")
        elif self.mode == "pluggable":
            if self.H is None or self.G is None:
                raise ValidationError("pluggable mode needs both H and G")
        else:
            raise ValidationError(f"unknown kernel mode {self.mode!r}")


@dataclass(frozen=True)
class DiffusionVerdict:
    a: float
    D: float
    curvature_c: float
    criterion_met: bool
    T: float
    mode: str
    cutoff_mu: float | None = None
    gamma_star: float | None = None
    kernel_dependent: bool = False


def diffusion_analysis(
    lags,
    msd,
    T: float,
    kernels: KernelSpec | None = None,
    x_matrix: np.ndarray | None = None,
    freq: FrequencyTable | None = None,
    c2_means: np.ndarray | None = None,
) -> DiffusionVerdict:
    """Diffusion verdict from a displacement curve (empirical mode) or from
    kernel-weighted frequency sums (pluggable mode).

    Empirical: least squares msd ~ a + b tau + c tau^2 on lags <= T;
    criterion_met iff c <= 0, and D = b/2.
    """
    kernels = kernels or KernelSpec()
    if kernels.mode == "empirical":
        lags = np.asarray(lags, dtype=float)
        msd = np.asarray(msd, dtype=float)
        mask = lags <= T
        if int(mask.sum()) < 4:
            raise FitError("need at least 4 lags inside the observation window")
        coeffs = np.polyfit(lags[mask], msd[mask], 2)
        c, b, a = float(coeffs[0]), float(coeffs[1]), float(coeffs[2])
        return DiffusionVerdict(
            a=a, D=b / 2.0, curvature_c=c, criterion_met=(c <= 0.0), T=T, mode="empirical"
        )
    if x_matrix is None or freq is None or c2_means is None:
        raise ValidationError("pluggable mode needs x_matrix, freq and c2_means")
    weights = np.outer(c2_means, c2_means) * np.abs(x_matrix) ** 2
    keep = ~freq.dropped & ~np.eye(len(c2_means), dtype=bool)
    gamma_star = 0.0
    d_coeff = 0.0
    for i, j in zip(*np.nonzero(keep)):
        mu = freq.mu[i, j]
        gamma_star += weights[i, j] * float(kernels.H(mu))
        d_coeff += weights[i, j] * float(kernels.G(mu))
    gamma_star *= 40.0 / T**2
    d_coeff *= 12.0 / T
    return DiffusionVerdict(
        a=0.0,
        D=d_coeff,
        curvature_c=gamma_star,
        criterion_met=(gamma_star <= 0.0),
        T=T,
        mode="pluggable",
        cutoff_mu=freq.cutoff_mu,
        gamma_star=gamma_star,
        kernel_dependent=True,
    )


# ---------------------------------------------------------------------------
# Scenario arithmetic and classical baselines.
# ---------------------------------------------------------------------------


def scenario(volume_V_cm3: float, grain_mass_M_g: float, consts: PhysicalConstants) -> dict:
    """Counts for a water droplet watched under the microscope (CGS inputs):
    N = V/m light bodies and the combination rN = V/M."""
    if volume_V_cm3 <= 0 or grain_mass_M_g <= 0:
        raise ValidationError("volume and grain mass must be positive")
    m_g = consts.m_light * 1000.0  # kg -> g; water density 1 g/cm^3
    n_light = volume_V_cm3 / m_g
    rn = volume_V_cm3 / grain_mass_M_g
    return {"N": n_light, "r": rn / n_light, "rN": rn}


def einstein_D(consts: PhysicalConstants, viscosity_nu: float, grain_radius_P: float) -> float:
    """K tau / (6 pi nu P), the classical diffusion coefficient."""
    if viscosity_nu <= 0 or grain_radius_P <= 0:
        raise ValidationError("viscosity and radius must be positive")
    return consts.boltzmann_K * consts.temperature_tau / (
        6.0 * math.pi * viscosity_nu * grain_radius_P
    )


def langevin_msd(
    consts: PhysicalConstants,
    M: float,
    gamma: float,
    T_grid,
    trap_omega: float | None = None,
) -> np.ndarray:
    """Analytic mean square displacement of the inertial Langevin particle.

    Free case: (2 K tau M / gamma^2)(gamma T / M - 1 + exp(-gamma T / M)),
    ballistic (K tau / M) T^2 at small T and diffusive 2 (K tau/gamma) T at
    large T.  Trapped case saturates at 2 K tau / (M omega^2).
    """
    if M <= 0 or gamma <= 0:
        raise ValidationError("M and gamma must be positive")
    t = np.asarray(T_grid, dtype=float)
    kt = consts.boltzmann_K * consts.temperature_tau
    if trap_omega is None:
        x = gamma * t / M
        return 2.0 * kt * M / gamma**2 * (x - 1.0 + np.exp(-x))
    w0 = float(trap_omega)
    if w0 <= 0:
        raise ValidationError("trap_omega must be positive")
    return (
        2.0
        * kt
        / (M * w0**2)
        * (
            1.0
            - np.exp(-t * gamma / (2.0 * M))
            * (np.cos(w0 * t) + gamma * np.sin(w0 * t) / (2.0 * w0 * M))
        )
    )


def perrin_profile(
    consts: PhysicalConstants,
    phi_volume: float,
    delta_densities: float,
    g: float,
    h_grid,
    n0: float,
) -> np.ndarray:
    """Sedimentation-equilibrium concentration n(h) = n0 exp(-3 phi dd g h / 2W)
    with W = (3/2) K tau the mean thermal energy."""
    if phi_volume <= 0 or n0 <= 0 or g <= 0:
        raise ValidationError("phi, g and n0 must be positive")
    h = np.asarray(h_grid, dtype=float)
    w_energy = 1.5 * consts.boltzmann_K * consts.temperature_tau
    return n0 * np.exp(-3.0 * phi_volume * delta_densities * g * h / (2.0 * w_energy))


def perrin_half_height(
    consts: PhysicalConstants, phi_volume: float, delta_densities: float, g: float
) -> float:
    """Height at which the profile halves; inverts the exponential balance."""
    w_energy = 1.5 * consts.boltzmann_K * consts.temperature_tau
    return math.log(2.0) * 2.0 * w_energy / (3.0 * phi_volume * delta_densities * g)


# ---------------------------------------------------------------------------
# Composite dispersion / visibility verdict.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CatVerdict:
    dispersion: float  # m^2
    spread: float  # m
    grain_diameter: float  # m
    cat_free: bool
    D_diffusion: float  # m^2/s
    visible_motion: bool
    T: float
    n_squared_f: float  # N^2 * fitted f
    g_fitted: float
    jointly_satisfiable: bool


def cat_check(
    params: ModelParams,
    consts: PhysicalConstants,
    grain_diameter_P: float,
    T: float,
    basis,
    beta,
    seed: int = 0,
    n_draws: int = 32,
    t_points: int = 512,
) -> CatVerdict:
    """Evaluates sqrt(D(X)) < P (no macroscopic spread) together with
    sqrt(D_diff T) > P (motion visible over the window), and reports the
    implied comparison of N^2 f against g in fitted form."""
    if grain_diameter_P <= 0 or T <= 0:
        raise ValidationError("grain diameter and T must be positive")
    rep = dispersion_report(params, basis, beta, n_draws, seed)
    spread = math.sqrt(max(rep.dispersion, 0.0))
    t_grid = np.linspace(0.0, 2.0 * T, t_points)
    traj = ensemble_msd(params, consts, basis, beta, t_grid, max(4, n_draws // 8), seed)
    verdict = diffusion_analysis(traj.lags, traj.msd_ensemble, T)
    d_diff = max(verdict.D, 0.0)
    cat_free = spread < grain_diameter_P
    visible = math.sqrt(d_diff * T) > grain_diameter_P
    y2_over_w = rep.Y**2 / float(params.w)
    n_sq_f = rep.dispersion / y2_over_w
    g_fit = d_diff * T / y2_over_w
    return CatVerdict(
        dispersion=rep.dispersion,
        spread=spread,
        grain_diameter=grain_diameter_P,
        cat_free=cat_free,
        D_diffusion=d_diff,
        visible_motion=visible,
        T=T,
        n_squared_f=n_sq_f,
        g_fitted=g_fit,
        jointly_satisfiable=(n_sq_f < g_fit),
    )
