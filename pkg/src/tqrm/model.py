"""Operators, Hamiltonians and symmetry sectors of the tripartite Rabi model.

All operators are dense real matrices on a truncated Fock space. Composite
bases are ordered spin-major: index = spin_index * (n_max + 1) + n.  Two-spin
states are ordered |uu>, |ud>, |du>, |dd> with u the +1 eigenstate of the
single-spin operator diagonal in that frame (sigma^z in the original frame,
sigma^x in the rotated one).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SectorUnavailable

SYMMETRY_TOL = 1e-14


@dataclass(frozen=True)
class ModelParams:
    """Couplings of H = w a^+a + W(sx1+sx2) + eps(sz1+sz2) + g(a^+ + a) sz1 sz2."""

    omega: float = 1.0
    Omega: float = 0.0
    epsilon: float = 0.0
    g: float = 0.0

    def __post_init__(self):
        for name in ("omega", "Omega", "epsilon", "g"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
        if self.omega <= 0:
            raise ParameterError(f"omega must be positive, got {self.omega!r}")
        if self.Omega < 0:
            raise ParameterError(f"Omega must be non-negative, got {self.Omega!r}")

    @property
    def g_c(self) -> float:
        """Mean-field critical coupling sqrt(omega * Omega)."""
        return math.sqrt(self.omega * self.Omega)

    def scaled(self, s: float) -> "ModelParams":
        return ModelParams(s * self.omega, s * self.Omega, s * self.epsilon, s * self.g)


@dataclass(frozen=True)
class FockTruncation:
    n_max: int = 120
    growth_factor: int = 2
    tol: float = 1e-9
    cap: int = 4096

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ParameterError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        if int(self.growth_factor) != self.growth_factor or self.growth_factor < 2:
            raise ParameterError("growth_factor must be an integer >= 2")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")

    @property
    def dim(self) -> int:
        return self.n_max + 1

    def with_n_max(self, n_max: int) -> "FockTruncation":
        return FockTruncation(n_max, self.growth_factor, self.tol, self.cap)


def as_truncation(trunc) -> FockTruncation:
    if isinstance(trunc, FockTruncation):
        return trunc
    return FockTruncation(int(trunc))


class Frame(enum.Enum):
    ORIGINAL = "original"
    ROTATED = "rotated"


class Sector(enum.Enum):
    FULL = "full"
    TRIPLET_ROTATED = "triplet"
    SINGLET_ROTATED = "singlet"
    RESONANT_COLLECTIVE = "collective"
    RESONANT_PLUS = "plus"
    RESONANT_MINUS = "minus"

    @property
    def spin_dim(self) -> int:
        return _SPIN_DIM[self]

    @property
    def resonant_only(self) -> bool:
        return self in (Sector.RESONANT_COLLECTIVE, Sector.RESONANT_PLUS, Sector.RESONANT_MINUS)


_SPIN_DIM = {
    Sector.FULL: 4,
    Sector.TRIPLET_ROTATED: 3,
    Sector.SINGLET_ROTATED: 1,
    Sector.RESONANT_COLLECTIVE: 2,
    Sector.RESONANT_PLUS: 1,
    Sector.RESONANT_MINUS: 1,
}


# single-spin operators in the {up, down} basis
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
I2 = np.eye(2)

SX1, SX2 = np.kron(SX, I2), np.kron(I2, SX)
SZ1, SZ2 = np.kron(SZ, I2), np.kron(I2, SZ)
I4 = np.eye(4)


def annihilation(n_max: int) -> np.ndarray:
    """Truncated a with a|n> = sqrt(n)|n-1>; a^+|n_max> is dropped."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1)


def number(n_max: int) -> np.ndarray:
    return np.diag(np.arange(n_max + 1, dtype=float))


def position(n_max: int) -> np.ndarray:
    """a + a^+ on the truncated ladder."""
    a = annihilation(n_max)
    return a + a.T


def check_symmetric(H: np.ndarray, name: str = "matrix") -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ParameterError(f"{name} must be square, got shape {H.shape}")
    diff = np.abs(H - H.T)
    bound = SYMMETRY_TOL * np.maximum(np.abs(H), np.abs(H.T))
    bad = diff > np.maximum(bound, 1e-300)
    if np.any(bad & (diff > 0)):
        raise ParameterError(f"{name} is not symmetric (max asymmetry {diff.max():.3e})")
    return H


def _validate(params, trunc):
    if not isinstance(params, ModelParams):
        raise ParameterError("params must be a ModelParams")
    return as_truncation(trunc)


def spin_terms(params: ModelParams, sector: Sector = Sector.FULL, frame: Frame = Frame.ORIGINAL):
    """Spin matrices (A_n, A_1, A_x) with H = A_n x a^+a + A_1 x 1 + A_x x (a + a^+).

    ``frame`` only matters for ``Sector.FULL``; the other sectors are blocks of
    the rotated-frame Hamiltonian.  Resonant sectors need ``epsilon == 0``.
    """
    if not isinstance(params, ModelParams):
        raise ParameterError("params must be a ModelParams")
    w, W, eps, g = params.omega, params.Omega, params.epsilon, params.g
    if sector.resonant_only and eps != 0:
        raise SectorUnavailable(f"{sector.name} needs epsilon == 0 (got {eps!r})")
    if sector is Sector.FULL:
        if frame is Frame.ORIGINAL:
            return w * I4, W * (SX1 + SX2) + eps * (SZ1 + SZ2), g * (SZ1 @ SZ2)
        if frame is Frame.ROTATED:
            return w * I4, -W * (SZ1 + SZ2) + eps * (SX1 + SX2), g * (SX1 @ SX2)
        raise ParameterError(f"unknown frame {frame!r}")
    one = np.eye(1)
    if sector in (Sector.SINGLET_ROTATED, Sector.RESONANT_MINUS):
        return w * one, 0 * one, -g * one
    if sector is Sector.RESONANT_PLUS:
        return w * one, 0 * one, g * one
    if sector is Sector.RESONANT_COLLECTIVE:
        return w * I2, -2 * W * SZ, g * SX
    if sector is Sector.TRIPLET_ROTATED:
        t = math.sqrt(2.0) * eps
        field = np.array([[-2 * W, t, 0.0], [t, 0.0, t], [0.0, t, 2 * W]])
        flip = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
        return w * np.eye(3), field, g * flip
    raise ParameterError(f"unknown sector {sector!r}")


def assemble(terms, n_max: int) -> np.ndarray:
    """Dense spin-major matrix from the (A_n, A_1, A_x) decomposition."""
    A_n, A_1, A_x = terms
    H = np.kron(A_n, number(n_max))
    H += np.kron(A_1, np.eye(n_max + 1))
    H += np.kron(A_x, position(n_max))
    return H


def build_hamiltonian(params: ModelParams, trunc, frame: Frame = Frame.ORIGINAL) -> np.ndarray:
    """Dense Hamiltonian on 4 (n_max+1) states.

    Parameters
    ----------
    params : ModelParams
    trunc : FockTruncation or int
        Phonon cutoff; an int is taken as ``n_max``.
    frame : Frame
        ``ORIGINAL`` gives the model as written with sigma^z sigma^z coupling;
        ``ROTATED`` applies the pi/2 rotation about y on both spins, giving
        ``w a^+a - W(sz1+sz2) + eps(sx1+sx2) + g sx1 sx2 (a^+ + a)``.

    Returns
    -------
    ndarray, shape (4(n_max+1), 4(n_max+1))
    """
    trunc = _validate(params, trunc)
    return assemble(spin_terms(params, Sector.FULL, frame), trunc.n_max)


def build_sector_hamiltonian(params: ModelParams, trunc, sector: Sector) -> np.ndarray:
    """Hamiltonian restricted to one symmetry block.

    Rotated-frame sector bases:

    * ``TRIPLET_ROTATED``: |UU>, |+>, |DD> with |+> = (|DU> + |UD>)/sqrt2
    * ``SINGLET_ROTATED``: |-> = (|DU> - |UD>)/sqrt2, giving w a^+a - g(a + a^+)
    * ``RESONANT_COLLECTIVE``: |UU>, |DD>, giving w a^+a - 2W S^z + g S^x (a + a^+)
    * ``RESONANT_PLUS`` / ``RESONANT_MINUS``: w a^+a +/- g(a + a^+)

    ``FULL`` is the original-frame Hamiltonian.  The resonant sectors require
    ``epsilon == 0``.
    """
    trunc = _validate(params, trunc)
    return assemble(spin_terms(params, sector), trunc.n_max)


def sector_basis(sector: Sector) -> np.ndarray:
    """Rows are the sector spin states in the rotated-frame product basis."""
    r = 1 / math.sqrt(2.0)
    # product basis order: UU, UD, DU, DD
    states = {
        Sector.FULL: np.eye(4),
        Sector.TRIPLET_ROTATED: np.array([[1, 0, 0, 0], [0, r, r, 0], [0, 0, 0, 1]], float),
        Sector.SINGLET_ROTATED: np.array([[0, -r, r, 0]], float),
        Sector.RESONANT_COLLECTIVE: np.array([[1, 0, 0, 0], [0, 0, 0, 1]], float),
        Sector.RESONANT_PLUS: np.array([[0, r, r, 0]], float),
        Sector.RESONANT_MINUS: np.array([[0, -r, r, 0]], float),
    }
    return states[sector]


def parity_operator(trunc) -> np.ndarray:
    """Parity on the collective resonant block (|UU>, |DD>) x Fock.

    Diagonal (-1)**(n + (s - 1)/2) with s = +1 on |UU> and -1 on |DD>, so the
    |DD>, n = 0 entry is -1 and the operator commutes with the collective
    Hamiltonian.
    """
    n = np.arange(as_truncation(trunc).n_max + 1)
    upper = (-1.0) ** n
    lower = (-1.0) ** (n - 1)
    return np.diag(np.concatenate([upper, lower]))


def exchange_operator(trunc) -> np.ndarray:
    """Permutation swapping the two spins on the full 4 (n_max+1) space."""
    swap = np.zeros((4, 4))
    for i, j in ((0, 0), (1, 2), (2, 1), (3, 3)):
        swap[i, j] = 1.0
    return np.kron(swap, np.eye(as_truncation(trunc).n_max + 1))


def commutator_norm(A: np.ndarray, B: np.ndarray) -> float:
    return float(np.max(np.abs(A @ B - B @ A)))


def _fsum_terms(terms):
    """Elementwise correctly rounded sum of equally shaped matrices."""
    stack = np.stack([np.asarray(t, dtype=float) for t in terms]).reshape(len(terms), -1)
    out = np.fromiter((math.fsum(col) for col in stack.T), dtype=float, count=stack.shape[1])
    return out.reshape(np.shape(terms[0]))


def verify_tripartite_reduction(g_value: float, trunc=10) -> float:
    """Max-norm of (H_d + F_1 + F_2) - g sz1 sz2 (a + a^+).

    H_d = g (sz1 sz2 + sz1 + sz2 + 1)(a + a^+) is the linearised dipolar term
    and F_j = -g (sz_j + 1/2)(a + a^+) the Stark-shift forces.  Each operator
    is expanded into Pauli-string terms on the truncated space and the terms
    are summed with correctly rounded accumulation, so the residual does not
    depend on summation order.
    """
    if not math.isfinite(g_value):
        raise ParameterError("g_value must be finite")
    n_max = as_truncation(trunc).n_max
    gx = g_value * position(n_max)

    def op(spin, coef=1.0):
        return np.kron(spin, coef * gx)

    H_d = [op(SZ1 @ SZ2), op(SZ1), op(SZ2), op(I4)]
    F_1 = [op(SZ1, -1.0), op(I4, -0.5)]
    F_2 = [op(SZ2, -1.0), op(I4, -0.5)]
    target = op(SZ1 @ SZ2)
    return float(np.max(np.abs(_fsum_terms(H_d + F_1 + F_2 + [-target]))))


@dataclass(frozen=True)
class AppendixReport:
    breathing_residual: float
    cm_residual: float
    cm_symmetric_projection: float
    single_spin_residual: float
    printed_single_spin_residual: float
    printed_cm_residual: float
    constant_norm: float

    @property
    def residual(self) -> float:
        return max(self.breathing_residual, self.cm_residual, self.cm_symmetric_projection)


def appendix_assembly_report(g_value: float, eta: float, trunc=8, n_cm: int = 4) -> AppendixReport:
    """Assemble both ions' Stark-shift Hamiltonians and check their sum.

    The space is spins x breathing mode x c.m. mode.  Ion j contributes

        -g (a + a^+)(sz_j + 1/2) - g sx_j - g/(2 sqrt2 eta)(sz_j + 2)
        + s_j g 3**(1/4) (b + b^+)(sz_j + 1/2)

    with b the c.m. mode, s_1 = +1 and s_2 = -1: the second ion's standing
    wave phase is flipped, which reverses the sign of its c.m. displacement
    while keeping the breathing-mode sign.  ``printed_cm_residual`` records the
    mismatch if both ions carried s_j = +1 instead.
    """
    if not eta > 0:
        raise ParameterError("eta must be positive")
    if not math.isfinite(g_value):
        raise ParameterError("g_value must be finite")
    n_max = as_truncation(trunc).n_max
    g = g_value
    Xb = position(n_max)
    Xc = position(n_cm)
    Ib, Ic = np.eye(n_max + 1), np.eye(n_cm + 1)
    c4 = 3 ** 0.25
    const = g / (2 * math.sqrt(2.0) * eta)

    def full(spin, breathing=None, cm=None):
        return np.kron(np.kron(spin, Ib if breathing is None else breathing), Ic if cm is None else cm)

    ions = ((SZ1, SX1, +1.0), (SZ2, SX2, -1.0))
    breathing = sum(full(-g * (sz + 0.5 * I4), Xb) for sz, _, _ in ions)
    single = sum(full(-g * sx) for _, sx, _ in ions)
    constant = sum(full(-const * (sz + 2 * I4)) for sz, _, _ in ions)
    cm = sum(full(s * g * c4 * (sz + 0.5 * I4), None, Xc) for sz, _, s in ions)
    cm_printed = sum(full(g * c4 * (sz + 0.5 * I4), None, Xc) for sz, _, _ in ions)

    # (i) breathing-mode spin-dependent parts
    target_b = full(-g * (SZ1 + SZ2 + I4), Xb)
    breathing_residual = float(np.max(np.abs(breathing - target_b)))

    # (ii) c.m. coupling proportional to (sz2 - sz1)
    basis = full(SZ2 - SZ1, None, Xc)
    denom = float(np.sum(basis * basis))
    coef = float(np.sum(cm * basis)) / denom
    cm_residual = float(np.max(np.abs(cm - coef * basis)))
    printed_coef = float(np.sum(cm_printed * basis)) / denom
    printed_cm_residual = float(np.max(np.abs(cm_printed - printed_coef * basis)))

    # projection on exchange-symmetric spin states
    r = 1 / math.sqrt(2.0)
    sym = np.array([[1, 0, 0, 0], [0, r, r, 0], [0, 0, 0, 1]], float)
    P = np.kron(np.kron(sym, Ib), Ic)
    cm_symmetric_projection = float(np.max(np.abs(P @ cm @ P.T)))

    single_spin_residual = float(np.max(np.abs(single - full(-g * (SX1 + SX2)))))
    printed_single = float(np.max(np.abs(single - full(-g * (SZ1 + SX2)))))
    constant_norm = float(np.max(np.abs(constant)))
    return AppendixReport(
        breathing_residual,
        cm_residual,
        cm_symmetric_projection,
        single_spin_residual,
        printed_single,
        printed_cm_residual,
        constant_norm,
    )


def verify_appendix_assembly(g_value: float, eta: float, trunc=8) -> float:
    """Worst of the breathing-mode and c.m.-mode residuals of the assembly."""
    return appendix_assembly_report(g_value, eta, trunc).residual
