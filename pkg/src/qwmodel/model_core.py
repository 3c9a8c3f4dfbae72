"""Model parameterization and unit bookkeeping for the rational q-w model.

The one-dimensional model confines N light bodies on each side of a heavy
body with an inverse-square repulsion of strength q = s(s-1) and a harmonic
attraction of strength w**2 (w carries units of 1/length**2).  Solvability
restricts s to half-odd-integers 3/2, 5/2, ..., equivalently q = p**2 - 1/4
with integer p >= 1.  All parameters are exact rationals; serialization uses
"num/den" strings so downstream exact pipelines stay exact.
"""

import json
from dataclasses import dataclass
from fractions import Fraction

from .errors import ValidationError
from .numerics import as_fraction


@dataclass(frozen=True)
class ModelParams:
    """Validated parameter set (s, q, p, w, N, r); immutable and hashable."""

    s: Fraction
    q: Fraction
    p: int
    w: Fraction
    N: int
    r: Fraction

    def to_json_dict(self) -> dict:
        return {
            "s": str(self.s),
            "w": str(self.w),
            "N": self.N,
            "r": str(self.r),
        }


def make_params(s, w, N: int = 1, r=Fraction(1, 100000)) -> ModelParams:
    """Validate and derive the full parameter set.

    q = s(s-1) and p = s - 1/2 are derived; both forms of the rationality
    constraint (q = s(s-1) = p**2 - 1/4) then hold by construction.
    """
    s = as_fraction(s)
    w = as_fraction(w)
    r = as_fraction(r)
    if s.denominator != 2 or s < Fraction(3, 2):
        raise ValidationError(f"s must be a half-odd-integer >= 3/2, got {s}")
    if w <= 0:
        raise ValidationError(f"w must be positive, got {w}")
    if not isinstance(N, int) or N < 1:
        raise ValidationError(f"N must be a positive integer, got {N!r}")
    if not (0 < r < 1):
        raise ValidationError(f"r must satisfy 0 < r < 1, got {r}")
    q = s * (s - 1)
    p = int(s - Fraction(1, 2))
    assert q == Fraction(p * p) - Fraction(1, 4)
    return ModelParams(s=s, q=q, p=p, w=w, N=N, r=r)


def params_from_json(text: str) -> ModelParams:
    d = json.loads(text)
    return make_params(d["s"], d["w"], int(d.get("N", 1)), d.get("r", "1/100000"))


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants used to convert modified eigenvalues into energies.

    Defaults: CODATA hbar and the mass of a water molecule (3e-26 kg);
    Boltzmann constant and a room-temperature default for the baselines.
    """

    hbar: float = 1.054571817e-34  # J s
    m_light: float = 3e-26  # kg
    boltzmann_K: float = 1.380649e-23  # J / K
    temperature_tau: float = 293.0  # K

    def __post_init__(self):
        for name in ("hbar", "m_light", "boltzmann_K", "temperature_tau"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be strictly positive")


def physical_energy(lambda_mod: float, consts: PhysicalConstants) -> float:
    """Energy in joules of a modified eigenvalue: (hbar^2 / 2m) * lambda."""
    return consts.hbar**2 / (2.0 * consts.m_light) * lambda_mod
