"""Trapped-ion parameters mapped onto model couplings.

Two ions of mass M and charge N e in an axial trap of angular frequency nu
sit a distance l0 apart; their breathing mode oscillates at sqrt(3) nu.  A
dipolar interaction with slope V'_d at l0 gives the tripartite coupling
g = l_b |V'_d| / 4, with l_b the oscillator length of the chosen mode.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ParameterError
from .model import ModelParams

ELEMENTARY_CHARGE = 1.602176634e-19  # C
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
HBAR = 1.054571817e-34  # J s
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg

SQRT3 = math.sqrt(3.0)


class LengthConvention(enum.Enum):
    """Which mode frequency sets the oscillator length and critical coupling."""

    BREATHING_MODE = "breathing"
    TRAP_MODE = "trap"


@dataclass(frozen=True)
class PhysicalIonParams:
    """Angular frequencies in rad/s; ``Vd_slope`` in rad/s per metre."""

    mass_amu: float = 88.0
    net_charge: int = 1
    nu: float = 2 * math.pi * 2.02e6
    Omega_drive: float = 2 * math.pi * 25e3
    Vd_slope: float = -2 * math.pi * 174.7e6 / 1e-6
    lb_convention: LengthConvention = LengthConvention.TRAP_MODE

    def __post_init__(self):
        for name in ("mass_amu", "nu", "Omega_drive", "Vd_slope"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.mass_amu <= 0:
            raise ParameterError("mass_amu must be positive")
        if self.nu <= 0:
            raise ParameterError("nu must be positive")
        if self.Omega_drive <= 0:
            raise ParameterError("Omega_drive must be positive")
        if int(self.net_charge) != self.net_charge or self.net_charge == 0:
            raise ParameterError("net_charge must be a nonzero integer")

    @property
    def mass(self) -> float:
        return self.mass_amu * ATOMIC_MASS_UNIT


@dataclass(frozen=True)
class DerivedTrapQuantities:
    l0: float
    omega_breathing: float
    l_b: float
    g: float
    g_c: float
    ratio: float
    convention: LengthConvention


def equilibrium_separation(mass: float, net_charge: int, nu: float) -> float:
    """Distance between two ions from Coulomb repulsion against the trap force."""
    s3 = net_charge**2 * ELEMENTARY_CHARGE**2 / (16 * math.pi * VACUUM_PERMITTIVITY * mass * nu * nu)
    return 2 * s3 ** (1 / 3)


def derive_trap(p: PhysicalIonParams) -> DerivedTrapQuantities:
    """Separation, mode frequency, oscillator length and coupling ratio.

    ``TRAP_MODE`` uses nu for both the oscillator length sqrt(hbar / 2 M nu)
    and the critical coupling sqrt(nu W); ``BREATHING_MODE`` uses sqrt(3) nu
    for both, which lowers the ratio g/g_c by exactly sqrt(3).
    """
    omega = SQRT3 * p.nu
    ref = p.nu if p.lb_convention is LengthConvention.TRAP_MODE else omega
    l_b = math.sqrt(HBAR / (2 * p.mass * ref))
    g = l_b * abs(p.Vd_slope) / 4
    g_c = math.sqrt(ref * p.Omega_drive)
    return DerivedTrapQuantities(
        l0=equilibrium_separation(p.mass, p.net_charge, p.nu),
        omega_breathing=omega,
        l_b=l_b,
        g=g,
        g_c=g_c,
        ratio=g / g_c,
        convention=p.lb_convention,
    )


@dataclass(frozen=True)
class ScaledModel:
    """Dimensionless couplings (omega = 1) and the angular frequency they are in units of."""

    params: ModelParams
    scale: float

    def restore(self, value: float) -> float:
        """Convert an energy in units of omega back to rad/s."""
        return value * self.scale


def model_params_from_physical(p: PhysicalIonParams, detuning: float = 0.0) -> ScaledModel:
    """Model couplings for an ion pair driven with laser detuning ``detuning``.

    The breathing mode is the boson, so omega = sqrt(3) nu; the spin energy
    splitting is the full detuning, hence epsilon = detuning / 2.
    """
    if not math.isfinite(detuning):
        raise ParameterError("detuning must be finite")
    derived = derive_trap(p)
    scale = derived.omega_breathing
    params = ModelParams(
        omega=1.0,
        Omega=p.Omega_drive / scale,
        epsilon=0.5 * detuning / scale,
        g=derived.g / scale,
    )
    return ScaledModel(params, scale)
