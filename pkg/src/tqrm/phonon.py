"""Phonon-state tomography on a truncated Fock space.

Quadratures are dimensionless: X = (a + a^+)/sqrt2 and P = i(a^+ - a)/sqrt2, so
the vacuum has variance 1/2 in both and Wigner function exp(-x^2 - p^2)/pi.
Density matrices are real symmetric ndarrays indexed by Fock number.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import NotAState, ParameterError, TruncationWarning

TRACE_TOL = 1e-10
EIG_TOL = 1e-10
TAIL_TOL = 1e-10
WIGNER_MAX_STEP = 0.2


def laguerre_functions(y, n_max: int, k_max: int) -> np.ndarray:
    """Normalised Laguerre functions u_n^k(y) = sqrt(n!/(n+k)!) y^(k/2) e^(-y/2) L_n^k(y).

    Returns shape ``(k_max + 1, n_max + 1) + shape(y)``.  Built by the upward
    three-term recurrence in n, which never forms factorials or powers that
    could overflow.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ParameterError("Laguerre argument must be non-negative")
    k = np.arange(k_max + 1).reshape((-1,) + (1,) * y.ndim)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_u0 = 0.5 * k * np.log(y) - 0.5 * y - 0.5 * gammaln(k + 1)
    u0 = np.exp(log_u0)
    u0 = np.where((y == 0) & (k == 0), 1.0, np.where(y == 0, 0.0, u0))
    out = np.zeros((k_max + 1, n_max + 1) + y.shape)
    out[:, 0] = u0
    if n_max >= 1:
        out[:, 1] = (1 + k - y) * u0 / np.sqrt(k + 1.0)
    for n in range(1, n_max):
        out[:, n + 1] = ((2 * n + 1 + k - y) * out[:, n] - np.sqrt(n * (n + k)) * out[:, n - 1]) / np.sqrt(
            (n + 1) * (n + k + 1.0)
        )
    return out


def displacement_matrix(beta: float, n_rows: int, n_cols: int | None = None) -> np.ndarray:
    """Matrix elements <j|D(beta)|m> of a real displacement, 0 <= j <= n_rows, 0 <= m <= n_cols."""
    n_cols = n_rows if n_cols is None else n_cols
    beta = float(beta)
    big, small = max(n_rows, n_cols), min(n_rows, n_cols)
    u = laguerre_functions(beta * beta, small, big)  # u[k, n]
    sgn = 1.0 if beta >= 0 else -1.0
    j = np.arange(n_rows + 1)[:, None]
    m = np.arange(n_cols + 1)[None, :]
    lower = np.minimum(j, m)
    diff = np.abs(j - m)
    values = u[diff, lower]
    sign = np.where(j >= m, sgn**diff, (-sgn) ** diff)
    return sign * values


def coherent_state(alpha: float, n_max: int) -> np.ndarray:
    """Normalised coherent state |alpha> for real alpha on n_max + 1 levels.

    Warns with ``TruncationWarning`` when the truncation drops more than
    1e-10 of the norm or covers fewer than |alpha|^2 + 6 sqrt(|alpha|^2 + 1)
    levels.
    """
    alpha = float(alpha)
    n_max = int(n_max)
    if n_max < 0:
        raise ParameterError("n_max must be non-negative")
    n = np.arange(n_max + 1)
    if alpha == 0:
        v = np.zeros(n_max + 1)
        v[0] = 1.0
        return v
    log_amp = -0.5 * alpha * alpha + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    v = np.exp(log_amp) * np.sign(alpha) ** n
    kept = float(np.dot(v, v))
    needed = alpha * alpha + 6 * math.sqrt(alpha * alpha + 1)
    if 1 - kept > TAIL_TOL or n_max < needed:
        warnings.warn(
            f"coherent state alpha={alpha} truncated at n_max={n_max}: lost norm {1 - kept:.2e}",
            TruncationWarning,
            stacklevel=2,
        )
    return v / math.sqrt(kept)


class RefKind(enum.Enum):
    VACUUM = "vacuum"
    COHERENT = "coherent"
    CAT_PLUS = "cat_plus"
    CAT_MINUS = "cat_minus"
    MIXTURE = "mixture"


@dataclass(frozen=True)
class ReferenceState:
    """A named phonon state; ``alpha`` is the amplitude (alpha_0 for cats and mixtures)."""

    kind: RefKind
    alpha: float = 0.0
    n_max: int = 60

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ParameterError("alpha must be finite")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ParameterError("n_max must be an integer >= 1")
        if self.kind is RefKind.CAT_MINUS and self.alpha == 0:
            raise ParameterError("the odd cat state needs alpha != 0")


def _cat(alpha: float, n_max: int, sign: float) -> np.ndarray:
    plus = coherent_state(alpha, n_max)
    minus = coherent_state(-alpha, n_max)
    norm = 1 / math.sqrt(2 * (1 + sign * math.exp(-2 * alpha * alpha)))
    v = norm * (plus + sign * minus)
    return v / np.linalg.norm(v)


def reference_density(ref: ReferenceState) -> np.ndarray:
    a, n = ref.alpha, ref.n_max
    kind = ref.kind
    if kind is RefKind.VACUUM:
        v = coherent_state(0.0, n)
    elif kind is RefKind.COHERENT:
        v = coherent_state(a, n)
    elif kind is RefKind.CAT_PLUS:
        v = _cat(a, n, 1.0)
    elif kind is RefKind.CAT_MINUS:
        v = _cat(a, n, -1.0)
    elif kind is RefKind.MIXTURE:
        p, m = coherent_state(a, n), coherent_state(-a, n)
        return 0.5 * (np.outer(p, p) + np.outer(m, m))
    else:
        raise ParameterError(f"unknown reference kind {kind!r}")
    return np.outer(v, v)


def _square(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ParameterError(f"density matrix must be square, got shape {rho.shape}")
    return rho


def check_state(rho) -> np.ndarray:
    """Return ``rho`` if it is symmetric, trace one and positive semidefinite."""
    rho = _square(rho)
    if not np.all(np.isfinite(rho)):
        raise NotAState("density matrix has non-finite entries")
    if np.max(np.abs(rho - rho.T), initial=0.0) > TRACE_TOL:
        raise NotAState("density matrix is not symmetric")
    tr = float(np.trace(rho))
    if abs(tr - 1) > TRACE_TOL:
        raise NotAState(f"trace is {tr!r}, not 1")
    low = float(np.linalg.eigvalsh(rho)[0])
    if low < -EIG_TOL:
        raise NotAState(f"density matrix has eigenvalue {low!r}")
    return rho


def effective_size(rho, tol: float = 1e-30) -> int:
    """Smallest dimension holding all but ``tol`` of the diagonal weight.

    Dropped rows carry amplitudes below sqrt(tol), so the default keeps
    everything that can matter at double precision.
    """
    diag = np.abs(np.diag(rho))
    tail = np.cumsum(diag[::-1])[::-1]
    keep = np.nonzero(tail > tol * max(diag.sum(), np.finfo(float).tiny))[0]
    return int(keep[-1]) + 1 if keep.size else 1


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Oscillator eigenfunctions psi_n(x), shape ``(n_max + 1,) + shape(x)``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max + 1,) + x.shape)
    out[0] = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def position_density(rho, x_grid) -> np.ndarray:
    """<x|rho|x> on a grid of dimensionless positions."""
    rho = _square(rho)
    size = effective_size(rho)
    psi = hermite_functions(size - 1, x_grid)
    r = rho[:size, :size]
    return np.einsum("m...,mn,n...->...", psi, r, psi)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    x_min: float = -8.0
    x_max: float = 8.0
    p_min: float = -8.0
    p_max: float = 8.0
    nx: int = 161
    np: int = 161

    def __post_init__(self):
        bounds = (self.x_min, self.x_max, self.p_min, self.p_max)
        if not all(math.isfinite(b) for b in bounds):
            raise ParameterError("grid bounds must be finite")
        if not (self.x_min < self.x_max and self.p_min < self.p_max):
            raise ParameterError("grid bounds must be ordered")
        if self.nx < 2 or self.np < 2:
            raise ParameterError("grids need at least two points per axis")

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def p(self):
        return np.linspace(self.p_min, self.p_max, self.np)


def wigner(rho, grid: PhaseSpaceGrid | None = None) -> np.ndarray:
    """Wigner function W[i, j] = W(x_i, p_j), normalised to unit integral.

    Uses the Fock-basis expansion

        W = sum_n rho_nn W_nn + 2 sum_{k>=1} sum_n rho_{n+k,n} Re W_{n+k,n},
        Re W_{n+k,n}(r, theta) = (-1)^n / pi * cos(k theta) u_n^k(2 r^2).
    """
    grid = PhaseSpaceGrid() if grid is None else grid
    rho = _square(rho)
    x, p = grid.x, grid.p
    if max(x[1] - x[0], p[1] - p[0]) > WIGNER_MAX_STEP:
        warnings.warn("phase-space grid spacing above 0.2 may under-resolve fringes", stacklevel=2)
    size = effective_size(rho)
    r = rho[:size, :size]
    X, P = np.meshgrid(x, p, indexing="ij")
    y = 2 * (X * X + P * P)
    theta = np.arctan2(P, X)
    W = np.zeros_like(X)
    sign = (-1.0) ** np.arange(size)
    u = laguerre_functions(y, size - 1, size - 1)
    for k in range(size):
        n = np.arange(size - k)
        coef = r[n + k, n] * sign[n]
        weight = 1.0 if k == 0 else 2.0
        W += weight * np.cos(k * theta) * np.tensordot(coef, u[k, : size - k], axes=1)
    return W / math.pi


def _psd_sqrt(rho):
    """Square root with eigenvalues under the rounding floor set to zero.

    Taking sqrt of a 1e-17 rounding residue would inject 3e-9 errors.
    """
    vals, vecs = np.linalg.eigh(rho)
    floor = rho.shape[0] * np.finfo(float).eps * max(float(vals[-1]), 0.0)
    keep = vals > floor
    return (vecs[:, keep] * np.sqrt(vals[keep])) @ vecs[:, keep].T


def _pad(rho, size):
    out = np.zeros((size, size))
    out[: rho.shape[0], : rho.shape[1]] = rho
    return out


def fidelity(rho, sigma) -> float:
    """Uhlmann-Jozsa fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Evaluated as the squared trace norm of sqrt(rho) sqrt(sigma), whose
    singular values are accurate to rounding even for rank-deficient states.
    Inputs of different cutoffs are compared on the larger space.
    Eigenvalues down to -1e-10 are treated as zero; anything more negative
    raises ``NotAState``.
    """
    rho, sigma = check_state(rho), check_state(sigma)
    size = max(rho.shape[0], sigma.shape[0])
    rho, sigma = _pad(rho, size), _pad(sigma, size)
    product = _psd_sqrt(0.5 * (rho + rho.T)) @ _psd_sqrt(0.5 * (sigma + sigma.T))
    return float(np.sum(np.linalg.svd(product, compute_uv=False)) ** 2)


def purity(rho) -> float:
    rho = _square(rho)
    return float(np.sum(rho * rho.T))


def mean_phonon_number(rho) -> float:
    rho = _square(rho)
    return float(np.dot(np.diag(rho), np.arange(rho.shape[0])))


def quadrature_variances(rho) -> tuple[float, float]:
    """(Var X, Var P) with X = (a + a^+)/sqrt2, P = i(a^+ - a)/sqrt2.

    <a a^+> is taken as <a^+ a> + 1, so the truncation edge does not bias the
    result.
    """
    rho = _square(rho)
    n = np.arange(rho.shape[0])
    a1 = float(np.sum(np.sqrt(n[1:]) * np.diagonal(rho, -1)))
    a2 = float(np.sum(np.sqrt(n[2:] * n[1:-1]) * np.diagonal(rho, -2)))
    nb = float(np.dot(np.diag(rho), n))
    x2 = a2 + nb + 0.5
    p2 = nb + 0.5 - a2
    mean_x = math.sqrt(2.0) * a1
    return x2 - mean_x * mean_x, p2
