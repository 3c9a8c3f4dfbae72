"""Command-line surface.

Subcommands: spectrum, oracle-eig, matelem, series, bml, perturb,
trajectory, diffusion, cats, scenario, baselines, validate.

Precedence: built-in defaults, then command-line flags, then the JSON
config file (the config file wins when both are given), with the
QW_PRECISION_BITS environment variable overriding the precision on top.
Every run writes a manifest (inputs, versions, seed, wall time) next to
its outputs, and all randomness derives from the single seed via named
substreams.  Exit codes: 0 ok, 1 validation or criterion failure, 2 usage.
"""

import argparse
import json
import os
import platform
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__, dynamics, manybody, matelem, oscseries, perturbation, spectrum1d
from .errors import QwError
from .model_core import ModelParams, PhysicalConstants, make_params
from .numerics import precision_bits
from .output import emit_csv, write_json
from .validation import run_validation

CONFIG_KEYS = ("s", "w", "N", "r", "beta", "precision_bits", "seed")

DEFAULTS = {
    "s": "3/2",
    "w": "1",
    "N": 1,
    "r": "1/100000",
    "beta": "1",
    "precision_bits": 256,
    "seed": 12345,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qwmodel",
        description="Exact spectral theory and trajectory experiments for the rational q-w model",
    )
    parser.add_argument("--config", help="JSON config file (overrides flags)")
    parser.add_argument("--s", help="half-odd-integer parameter, e.g. 3/2")
    parser.add_argument("--w", help="confinement strength (rational, 1/length^2)")
    parser.add_argument("--N", type=int, help="light bodies per side")
    parser.add_argument("--r", help="mass ratio m/M (rational)")
    parser.add_argument("--beta", help="inverse temperature (rational)")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--precision-bits", type=int, dest="precision_bits")
    parser.add_argument("--out", default=".", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="exact eigenvalues and coefficients")
    p.add_argument("--nmax", type=int, default=10)

    p = sub.add_parser("oracle-eig", help="finite-difference spectrum oracle")
    p.add_argument("--grid", type=int, default=4000)
    p.add_argument("--zmin", type=float, default=1e-3)
    p.add_argument("--zmax", type=float, default=10.0)
    p.add_argument("--keigs", type=int, default=4)

    p = sub.add_parser("matelem", help="matrix-element table")
    p.add_argument("--umax", type=int, default=4)
    p.add_argument("--vmax", type=int, default=4)
    p.add_argument(
        "--kernels", default="identity,z", help="comma list from identity,z,z_squared,z_inverse,d_dz"
    )

    p = sub.add_parser("series", help="alternating series, direct vs integral")
    p.add_argument("--which", choices=["s1", "s2", "s3"], required=True)
    p.add_argument("--u", type=int, required=True)
    p.add_argument("--t", type=int, default=1, help="t = s - 1/2 for the s3 route")
    p.add_argument("--base", choices=["2", "e"], default="2")

    p = sub.add_parser("bml", help="criterion partial sums over special states")
    p.add_argument("--profile", choices=["special_loglog", "inverse_square"], default="special_loglog")
    p.add_argument("--umax", type=int, default=10000)
    p.add_argument("--checkpoints", default="100,1000,10000")

    p = sub.add_parser("perturb", help="level splitting table")
    p.add_argument("--level-max", type=int, default=3)

    p = sub.add_parser("trajectory", help="synthesize a Gibbs-draw trajectory")
    p.add_argument("--tmax", type=float, default=1.0)
    p.add_argument("--points", type=int, default=2048)
    p.add_argument("--nmax", type=int, default=8)
    p.add_argument("--draws", type=int, default=4)
    p.add_argument("--hbar", type=float, default=None)
    p.add_argument("--mass", type=float, default=None)

    p = sub.add_parser("diffusion", help="trajectory + curvature criterion verdict")
    p.add_argument("--tmax", type=float, default=1.0)
    p.add_argument("--points", type=int, default=2048)
    p.add_argument("--nmax", type=int, default=8)
    p.add_argument("--draws", type=int, default=8)
    p.add_argument("--T", type=float, default=None, help="observation window (default tmax/2)")
    p.add_argument("--hbar", type=float, default=None)
    p.add_argument("--mass", type=float, default=None)

    p = sub.add_parser("cats", help="dispersion vs visibility verdict")
    p.add_argument("--grain-diameter", type=float, default=1e-6)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--nmax", type=int, default=3)
    p.add_argument("--draws", type=int, default=32)
    p.add_argument("--hbar", type=float, default=None)
    p.add_argument("--mass", type=float, default=None)

    p = sub.add_parser("scenario", help="droplet / grain counting")
    p.add_argument("--volume", type=float, required=True, help="droplet volume in cm^3")
    p.add_argument("--grain-mass", type=float, required=True, help="grain mass in grams")

    p = sub.add_parser("baselines", help="classical reference curves")
    p.add_argument("--viscosity", type=float, default=1.0e-3)
    p.add_argument("--grain-radius", type=float, default=1e-7)
    p.add_argument("--grain-mass-kg", type=float, default=1e-10)
    p.add_argument("--gamma", type=float, default=2e-9)
    p.add_argument("--trap-omega", type=float, default=None)
    p.add_argument("--tmax", type=float, default=1.0)
    p.add_argument("--points", type=int, default=200)

    sub.add_parser("validate", help="run the full invariant suite")
    return parser


def _apply_config(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    if args.config:
        with open(args.config) as handle:
            cfg = json.load(handle)
        for key in CONFIG_KEYS:
            if key in cfg:
                settings[key] = cfg[key]
    if os.environ.get("QW_PRECISION_BITS"):
        settings["precision_bits"] = int(os.environ["QW_PRECISION_BITS"])
    settings["N"] = int(settings["N"])
    settings["seed"] = int(settings["seed"])
    settings["precision_bits"] = int(settings["precision_bits"])
    return settings


def _params(settings: dict) -> ModelParams:
    return make_params(settings["s"], settings["w"], settings["N"], settings["r"])


def _consts(args: argparse.Namespace) -> PhysicalConstants:
    kwargs = {}
    if getattr(args, "hbar", None):
        kwargs["hbar"] = args.hbar
    if getattr(args, "mass", None):
        kwargs["m_light"] = args.mass
    return PhysicalConstants(**kwargs)


def _write_manifest(out_dir, command, argv, settings, outputs, t0) -> None:
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": {k: str(settings[k]) for k in CONFIG_KEYS},
        "seed": settings["seed"],
        "precision_bits": settings["precision_bits"],
        "package_version": __version__,
        "python_version": platform.python_version(),
        "wall_time_s": round(time.monotonic() - t0, 3),
        "outputs": outputs,
    }
    write_json(os.path.join(out_dir, "manifest.json"), manifest)


def parse_and_dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.monotonic()
    try:
        settings = _apply_config(args)
        os.environ.setdefault("QW_PRECISION_BITS", str(settings["precision_bits"]))
        out_dir = args.out
        os.makedirs(out_dir, exist_ok=True)
        outputs: list[str] = []
        code = _dispatch(args, settings, out_dir, outputs)
        _write_manifest(out_dir, args.command, argv, settings, outputs, t0)
        return code
    except QwError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


def _out(out_dir: str, name: str, outputs: list) -> str:
    outputs.append(name)
    return os.path.join(out_dir, name)


def _dispatch(args, settings, out_dir, outputs) -> int:
    command = args.command
    seed = settings["seed"]
    beta = Fraction(str(settings["beta"]))

    if command == "validate":
        ok = run_validation()
        return 0 if ok else 1

    if command == "scenario":
        result = dynamics.scenario(args.volume, args.grain_mass, PhysicalConstants())
        write_json(_out(out_dir, "scenario.json", outputs), result)
        print(f"N = {result['N']:.4e}, r = {result['r']:.4e}, rN = {result['rN']:.4e}")
        return 0

    if command == "baselines":
        consts = PhysicalConstants()
        d_einstein = dynamics.einstein_D(consts, args.viscosity, args.grain_radius)
        t = np.linspace(0.0, args.tmax, args.points + 1)[1:]
        free = dynamics.langevin_msd(consts, args.grain_mass_kg, args.gamma, t)
        rows = [[ti, fi] for ti, fi in zip(t, free)]
        header = ["T", "msd_free"]
        if args.trap_omega:
            trapped = dynamics.langevin_msd(
                consts, args.grain_mass_kg, args.gamma, t, trap_omega=args.trap_omega
            )
            header.append("msd_trapped")
            rows = [row + [tr] for row, tr in zip(rows, trapped)]
        emit_csv(_out(out_dir, "langevin.csv", outputs), header, rows)
        write_json(_out(out_dir, "baselines.json", outputs), {"einstein_D": d_einstein})
        print(f"einstein D = {d_einstein:.4e} m^2/s")
        return 0

    params = _params(settings)

    if command == "spectrum":
        rows = spectrum1d.spectrum_rows(params, args.nmax)
        emit_csv(
            _out(out_dir, "spectrum.csv", outputs),
            ["n", "mu_exact", "mu_float", "coeff_k", "coeff_value"],
            rows,
        )
        return 0

    if command == "oracle-eig":
        vals = spectrum1d.fd_oracle_spectrum(
            params, args.grid, args.zmin, args.zmax, args.keigs
        )
        rows = []
        worst = 0.0
        for n, v in enumerate(vals):
            exact = float(spectrum1d.eigenvalue(n, params))
            rel = abs(v - exact) / exact
            worst = max(worst, rel)
            rows.append([n, v, str(spectrum1d.eigenvalue(n, params)), exact, rel])
        emit_csv(
            _out(out_dir, "oracle.csv", outputs),
            ["n", "mu_oracle", "mu_exact", "mu_exact_float", "rel_err"],
            rows,
        )
        print(f"worst relative error {worst:.3e}")
        return 0

    if command == "matelem":
        kernels = tuple(k.strip() for k in args.kernels.split(",") if k.strip())
        rows = matelem.matelem_rows(params, args.umax, args.vmax, kernels)
        emit_csv(
            _out(out_dir, "matelem.csv", outputs),
            ["u", "v", "kernel", "value_float", "value_exact_string", "method"],
            rows,
        )
        return 0

    if command == "series":
        which = args.which.upper()
        res = oscseries.series_result(
            which, args.u, args.t if which == "S3" else settings["s"], args.base
        )
        emit_csv(
            _out(out_dir, "series.csv", outputs),
            ["which", "u", "t_or_s", "base", "direct", "integral", "abs_diff", "slope_window"],
            [
                [
                    res.which,
                    res.u,
                    res.t_or_s,
                    res.base,
                    res.direct_value,
                    res.integral_value,
                    res.abs_diff,
                    "",
                ]
            ],
        )
        print(f"{res.which}(u={res.u}) direct={res.direct_value:.12g} integral={res.integral_value:.12g}")
        return 0

    if command == "bml":
        checkpoints = [int(x) for x in args.checkpoints.split(",")]
        basis = manybody.enumerate_basis(params, args.umax, mode="special")
        draw = manybody.make_ensemble(basis, args.profile, beta, seed, params)
        sums = manybody.bml_partial_sums(draw, params, checkpoints)
        emit_csv(_out(out_dir, "bml.csv", outputs), ["U", "partial_sum"], sums)
        for u_val, total in sums:
            print(f"U = {u_val}: partial sum = {total:.6e}")
        return 0

    if command == "perturb":
        rows = perturbation.splitting_rows(params, args.level_max)
        emit_csv(
            _out(out_dir, "splitting.csv", outputs),
            ["level_n", "m_n", "correction_index", "lambda1", "lhg_bound", "coarse_bound"],
            rows,
        )
        return 0

    if command in ("trajectory", "diffusion"):
        consts = _consts(args)
        basis = manybody.enumerate_basis(params, args.nmax, mode="special")
        t_grid = np.linspace(0.0, args.tmax, args.points)
        traj = dynamics.ensemble_msd(
            params, consts, basis, beta, t_grid, args.draws, seed
        )
        emit_csv(
            _out(out_dir, "trajectory.csv", outputs),
            ["t", "x"],
            [[t, x] for t, x in zip(traj.times, traj.x)],
        )
        emit_csv(
            _out(out_dir, "msd.csv", outputs),
            ["lag", "msd_time_avg", "msd_ensemble"],
            [
                [lag, m1, m2]
                for lag, m1, m2 in zip(traj.lags, traj.msd, traj.msd_ensemble)
            ],
        )
        if command == "trajectory":
            return 0
        T = args.T or args.tmax / 2.0
        verdict = dynamics.diffusion_analysis(traj.lags, traj.msd_ensemble, T)
        write_json(
            _out(out_dir, "diffusion.json", outputs),
            {
                "D": verdict.D,
                "curvature": verdict.curvature_c,
                "criterion_met": verdict.criterion_met,
                "T": verdict.T,
                "cutoff": verdict.cutoff_mu,
            },
        )
        print(
            f"D = {verdict.D:.6e}, curvature = {verdict.curvature_c:.6e}, "
            f"criterion_met = {verdict.criterion_met}"
        )
        return 0 if verdict.criterion_met else 1

    if command == "cats":
        consts = _consts(args)
        basis = manybody.enumerate_basis(params, args.nmax, mode="full")
        verdict = dynamics.cat_check(
            params,
            consts,
            args.grain_diameter,
            args.T,
            basis,
            beta,
            seed=seed,
            n_draws=args.draws,
        )
        write_json(
            _out(out_dir, "cats.json", outputs),
            {
                "dispersion_m2": verdict.dispersion,
                "spread_m": verdict.spread,
                "grain_diameter_m": verdict.grain_diameter,
                "cat_free": verdict.cat_free,
                "D_diffusion": verdict.D_diffusion,
                "visible_motion": verdict.visible_motion,
                "T": verdict.T,
                "n_squared_f": verdict.n_squared_f,
                "g_fitted": verdict.g_fitted,
                "jointly_satisfiable": verdict.jointly_satisfiable,
            },
        )
        print(
            f"cat_free = {verdict.cat_free}, visible_motion = {verdict.visible_motion}, "
            f"jointly_satisfiable = {verdict.jointly_satisfiable}"
        )
        return 0

    raise QwError(f"unhandled command {command!r}")


def main() -> None:
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
