"""Mean-field ground state: the phonon mode replaced by a real amplitude alpha.

With a, a^+ -> alpha the energy is w alpha^2 plus the lowest level of the
two-spin Hamiltonian W(sx1+sx2) + eps(sz1+sz2) + J sz1 sz2, J = 2 g alpha.  The
singlet sits at -J; the triplet levels are J - u for the roots u of

    u^3 - 2J u^2 - 4(eps^2 + W^2) u + 8 J eps^2 = 0,

so the lowest level is J - u_max.  At eps = 0 this is -2 sqrt(g^2 alpha^2 + W^2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, golden

from .errors import ParameterError
from .model import ModelParams

SCAN_STEP = 1e-2
GOLDEN_TOL = 1e-12


class Branch(enum.Enum):
    SUBRADIANT = "subradiant"
    SUPERRADIANT_PLUS = "superradiant_plus"
    SUPERRADIANT_MINUS = "superradiant_minus"
    DETUNED_UNIQUE = "detuned_unique"


@dataclass(frozen=True)
class MeanFieldResult:
    alpha_star: float
    energy: float
    branch: Branch
    degenerate: bool = False
    gradient: float = 0.0


def _largest_root(J, eps, W):
    """Largest root of the triplet cubic, trigonometric form plus Newton polish."""
    J = np.asarray(J, dtype=float)
    s = eps * eps + W * W
    a, b, c = -2 * J, -4 * s + 0 * J, 8 * J * eps * eps
    p = b - a * a / 3
    q = 2 * a**3 / 27 - a * b / 3 + c
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.sqrt(np.maximum(-p / 3, 0.0))
        arg = np.where(r > 0, -q / (2 * np.where(r > 0, r, 1.0) ** 3), 1.0)
        phi = np.arccos(np.clip(arg, -1.0, 1.0))
    u = 2 * r * np.cos(phi / 3) - a / 3
    for _ in range(2):
        f = u**3 + a * u * u + b * u + c
        df = 3 * u * u + 2 * a * u + b
        step = np.where(np.abs(df) > 0, f / np.where(df != 0, df, 1.0), 0.0)
        u = u - step
    return u


def _largest_root_scalar(J: float, eps: float, W: float) -> float:
    s = eps * eps + W * W
    a, b, c = -2 * J, -4 * s, 8 * J * eps * eps
    p = b - a * a / 3
    q = 2 * a**3 / 27 - a * b / 3 + c
    r = math.sqrt(max(-p / 3, 0.0))
    arg = -q / (2 * r**3) if r > 0 else 1.0
    u = 2 * r * math.cos(math.acos(min(1.0, max(-1.0, arg))) / 3) - a / 3
    for _ in range(2):
        df = 3 * u * u + 2 * a * u + b
        if df == 0:
            break
        u -= (u**3 + a * u * u + b * u + c) / df
    return u


def _energy_scalar(alpha: float, params: ModelParams) -> float:
    J = 2 * params.g * alpha
    triplet = J - _largest_root_scalar(J, params.epsilon, params.Omega)
    return params.omega * alpha * alpha + min(triplet, -J)


def _gradient_scalar(alpha: float, params: ModelParams) -> float:
    w, W, eps, g = params.omega, params.Omega, params.epsilon, params.g
    J = 2 * g * alpha
    u = _largest_root_scalar(J, eps, W)
    denom = 3 * u * u - 4 * J * u - 4 * (eps * eps + W * W)
    du = (2 * u * u - 8 * eps * eps) / denom if denom != 0 else 0.0
    return 2 * w * alpha + 2 * g * (1 - du)


def spin_ground_level(J, epsilon: float, Omega: float):
    """Lowest eigenvalue of W(sx1+sx2) + eps(sz1+sz2) + J sz1 sz2."""
    J = np.asarray(J, dtype=float)
    triplet = J - _largest_root(J, epsilon, Omega)
    return np.minimum(triplet, -J)


def energy_functional(alpha, params: ModelParams):
    """w alpha^2 plus the lowest spin level at J = 2 g alpha; vectorised in alpha."""
    alpha = np.asarray(alpha, dtype=float)
    if not np.all(np.isfinite(alpha)):
        raise ParameterError("alpha must be finite")
    J = 2 * params.g * alpha
    value = params.omega * alpha * alpha + spin_ground_level(J, params.epsilon, params.Omega)
    return float(value) if value.ndim == 0 else value


def energy_gradient(alpha, params: ModelParams):
    """d/d alpha of the functional, from implicit differentiation of the cubic."""
    alpha = np.asarray(alpha, dtype=float)
    w, W, eps, g = params.omega, params.Omega, params.epsilon, params.g
    J = 2 * g * alpha
    u = _largest_root(J, eps, W)
    denom = 3 * u * u - 4 * J * u - 4 * (eps * eps + W * W)
    with np.errstate(invalid="ignore", divide="ignore"):
        du = np.where(denom != 0, (2 * u * u - 8 * eps * eps) / np.where(denom != 0, denom, 1.0), 0.0)
    dlam = 1 - du
    value = 2 * w * alpha + 2 * g * dlam
    return float(value) if value.ndim == 0 else value


def large_detuning_functional(alpha, params: ModelParams):
    """Comparison curve w alpha^2 + 2 g alpha - 2 eps valid for eps >> W, g."""
    alpha = np.asarray(alpha, dtype=float)
    value = params.omega * alpha * alpha + 2 * params.g * alpha - 2 * abs(params.epsilon)
    return float(value) if value.ndim == 0 else value


def resonant_alpha0(params: ModelParams) -> float:
    """sqrt(g^2/w^2 - W^2/g^2) above the critical coupling, else 0."""
    g, w, W = abs(params.g), params.omega, params.Omega
    if g == 0 or g <= params.g_c:
        return 0.0
    return math.sqrt(g * g / (w * w) - W * W / (g * g))


def _polish(alpha, params, width):
    """Refine a minimum by root-finding on the analytic gradient when bracketed."""
    lo, hi = alpha - width, alpha + width
    glo, ghi = _gradient_scalar(lo, params), _gradient_scalar(hi, params)
    if glo < 0 < ghi:
        return brentq(_gradient_scalar, lo, hi, args=(params,), xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return alpha


def minimize_alpha(params: ModelParams) -> MeanFieldResult:
    """Global minimum of the functional over real alpha.

    A scan with step 1e-2 over +-(2|g|/w + 2) brackets the minimum, golden
    section narrows it and the analytic gradient pins it.  At eps = 0 the
    two mirror minima +-alpha_0 are reported as the canonical +alpha_0 with
    ``degenerate`` set.
    """
    if not isinstance(params, ModelParams):
        raise ParameterError("params must be a ModelParams")
    w, g = params.omega, params.g
    span = 2 * abs(g) / w + 2
    grid = np.arange(-span, span + 0.5 * SCAN_STEP, SCAN_STEP)
    energies = energy_functional(grid, params)
    i = int(np.argmin(energies))
    i = min(max(i, 1), grid.size - 2)

    def f(x):
        return _energy_scalar(x, params)

    alpha = golden(f, brack=(grid[i - 1], grid[i], grid[i + 1]), tol=GOLDEN_TOL)
    alpha = _polish(alpha, params, 2 * SCAN_STEP)
    resonant = params.epsilon == 0
    degenerate = False
    if resonant:
        alpha0 = resonant_alpha0(params)
        if alpha0 == 0.0:
            branch = Branch.SUBRADIANT
            alpha = 0.0
        else:
            degenerate = True
            branch = Branch.SUPERRADIANT_PLUS
            alpha = _polish(abs(alpha), params, 2 * SCAN_STEP)
    else:
        branch = Branch.DETUNED_UNIQUE
    return MeanFieldResult(float(alpha), f(alpha), branch, degenerate, _gradient_scalar(alpha, params))


@dataclass(frozen=True)
class EnergyCurve:
    g: np.ndarray
    energy: np.ndarray
    first: np.ndarray
    second: np.ndarray
    transition_index: int
    transition_jump: float

    @property
    def transition_cell(self) -> tuple[float, float]:
        """Grid cell [g_i, g_i+1] across which d2E/dg2 jumps the most."""
        i = self.transition_index
        return float(self.g[i]), float(self.g[i + 1])

    def table(self) -> np.ndarray:
        return np.column_stack([self.g, self.energy, self.first, self.second])


def ground_energy_curve(params_base: ModelParams, g_grid) -> EnergyCurve:
    """Mean-field ground energy and its first two g-derivatives on a uniform grid.

    Derivatives are central differences (one-sided at the ends).  The cell
    with the largest jump in the second derivative marks the transition.
    """
    grid = np.asarray(g_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 4:
        raise ParameterError("g grid needs at least four points")
    h = np.diff(grid)
    if np.any(h <= 0) or np.max(np.abs(h - h.mean())) > 1e-9 * max(1.0, np.max(np.abs(grid))):
        raise ParameterError("g grid must be uniform and ascending")
    step = float(h.mean())
    energy = np.array([minimize_alpha(replace(params_base, g=float(g))).energy for g in grid])
    first = np.gradient(energy, step)
    second = np.empty_like(energy)
    second[1:-1] = (energy[2:] - 2 * energy[1:-1] + energy[:-2]) / (step * step)
    second[0], second[-1] = second[1], second[-2]
    jumps = np.abs(np.diff(second[1:-1]))
    i = int(np.argmax(jumps)) + 1
    return EnergyCurve(grid, energy, first, second, i, float(jumps[i - 1]))
