"""Eigensolvers, convergence-controlled ground states, sweeps and partial traces."""

from __future__ import annotations

import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

from .errors import NonConvergence, ParameterError, SweepError, TruncationCeiling
from .model import (
    FockTruncation,
    ModelParams,
    Sector,
    as_truncation,
    assemble,
    check_symmetric,
    spin_terms,
)

NORM_TOL = 1e-8
# above this many rows the ground state is found on the banded Fock-major form
BANDED_MIN_DIM = 1600


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues with orthonormal eigenvectors as columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def ground_energy(self) -> float:
        return float(self.values[0])

    @property
    def ground_state(self) -> np.ndarray:
        return self.vectors[:, 0]


def _failing_block(err: Exception):
    match = re.search(r"(-?\d+)", str(err))
    return int(match.group(1)) if match else None


def eigensolve(H: np.ndarray, k: int | None = None) -> EigenSystem:
    """Full or lowest-``k`` eigensystem of a real symmetric matrix.

    Uses LAPACK's relatively robust representation driver; a LAPACK failure is
    reported as ``NonConvergence`` carrying the info index LAPACK returned.
    """
    H = check_symmetric(H, "H")
    n = H.shape[0]
    if k is not None:
        k = int(k)
        if k < 1:
            raise ParameterError("k must be >= 1")
        k = min(k, n)
    subset = None if k is None or k == n else (0, k - 1)
    try:
        values, vectors = sla.eigh(H, subset_by_index=subset, driver="evr", check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as err:
        raise NonConvergence(f"eigensolver failed: {err}", block=_failing_block(err)) from err
    return EigenSystem(values, vectors)


def sector_matrix(params: ModelParams, trunc, sector: Sector = Sector.FULL) -> np.ndarray:
    return assemble(spin_terms(params, sector), as_truncation(trunc).n_max)


def _banded_lower(terms, n_max: int) -> np.ndarray:
    """Lower banded storage of the Fock-major (n outer, spin inner) Hamiltonian."""
    A_n, A_1, A_x = terms
    s = A_n.shape[0]
    band = np.zeros((2 * s, s * (n_max + 1)))
    # Fock-major matrix is kron(N, A_n) + kron(1, A_1) + kron(X, A_x)
    sq = np.sqrt(np.arange(1, n_max + 1, dtype=float))
    for m in range(n_max + 1):
        blk = A_n * m + A_1
        base = m * s
        for i in range(s):
            for j in range(i + 1):
                band[i - j, base + j] = blk[i, j]
    for m in range(n_max):
        blk = A_x * sq[m]  # couples Fock m+1 (rows) with m (cols)
        row0, col0 = (m + 1) * s, m * s
        for i in range(s):
            for j in range(s):
                band[row0 + i - (col0 + j), col0 + j] = blk[i, j]
    return band


def _fock_to_spin_major(v: np.ndarray, s: int, n_max: int) -> np.ndarray:
    return v.reshape(n_max + 1, s).T.reshape(-1)


def banded_ground_state(params: ModelParams, trunc, sector: Sector = Sector.FULL):
    """Lowest eigenpair without forming the dense matrix.

    The eigenvalue comes from LAPACK's banded bisection; the vector from three
    steps of shifted inverse iteration on the banded LU factorisation.
    Returns ``(energy, spin-major state)``.
    """
    n_max = as_truncation(trunc).n_max
    terms = spin_terms(params, sector)
    s = terms[0].shape[0]
    band = _banded_lower(terms, n_max)
    try:
        value = sla.eig_banded(band, lower=True, eigvals_only=True, select="i", select_range=(0, 0))[0]
    except np.linalg.LinAlgError as err:
        raise NonConvergence(f"banded eigensolver failed: {err}", block=_failing_block(err)) from err
    width = band.shape[0] - 1
    dim = band.shape[1]
    # general banded storage for solve_banded
    full = np.zeros((2 * width + 1, dim))
    full[width:] = band
    for d in range(1, width + 1):
        full[width - d, d:] = band[d, : dim - d]
    scale = max(1.0, float(np.max(np.abs(band))))
    shift = value - 64 * np.finfo(float).eps * scale * max(1.0, math.sqrt(dim))
    full[width] -= shift
    rng = np.random.default_rng(0)
    v = rng.standard_normal(dim)
    for _ in range(3):
        v = sla.solve_banded((width, width), full, v, check_finite=False)
        v /= np.linalg.norm(v)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return float(value), _fock_to_spin_major(v, s, n_max)


def lowest(params: ModelParams, trunc, sector: Sector = Sector.FULL, k: int = 1) -> EigenSystem:
    """Lowest ``k`` eigenpairs of a sector Hamiltonian, dense or banded by size."""
    n_max = as_truncation(trunc).n_max
    dim = sector.spin_dim * (n_max + 1)
    if k == 1 and dim > BANDED_MIN_DIM:
        value, vec = banded_ground_state(params, n_max, sector)
        return EigenSystem(np.array([value]), vec[:, None])
    return eigensolve(sector_matrix(params, n_max, sector), k)


@dataclass(frozen=True)
class GroundState:
    energy: float
    state: np.ndarray
    n_max_used: int
    sector: Sector = Sector.FULL

    def __iter__(self):
        return iter((self.energy, self.state, self.n_max_used))


def converged_ground_state(params: ModelParams, trunc=None, sector: Sector = Sector.FULL) -> GroundState:
    """Ground state certified by growing the Fock cutoff.

    The cutoff is multiplied by ``trunc.growth_factor`` until two successive
    ground energies differ by less than ``trunc.tol * omega``.  The smaller
    cutoff of the converged pair is returned together with its state, so an
    already converged input comes back with ``n_max_used`` unchanged.
    """
    trunc = FockTruncation() if trunc is None else as_truncation(trunc)
    n = trunc.n_max
    if n > trunc.cap:
        raise TruncationCeiling(f"initial n_max={n} exceeds cap {trunc.cap}")
    current = lowest(params, n, sector)
    while True:
        nxt = n * trunc.growth_factor
        if nxt > trunc.cap:
            raise TruncationCeiling(
                f"ground energy not converged to {trunc.tol:g} omega before n_max cap {trunc.cap}"
            )
        following = lowest(params, nxt, sector)
        if abs(following.ground_energy - current.ground_energy) < trunc.tol * params.omega:
            return GroundState(current.ground_energy, current.ground_state, n, sector)
        n, current = nxt, following


def _check_grid(g_grid) -> np.ndarray:
    grid = np.asarray(g_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ParameterError("g grid must be a nonempty 1-D array")
    if not np.all(np.isfinite(grid)):
        raise ParameterError("g grid must be finite")
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("g grid must be strictly ascending")
    return grid


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: TQRM_THREADS wins over the argument, default 1."""
    env = os.environ.get("TQRM_THREADS")
    if env:
        try:
            threads = int(env)
        except ValueError as err:
            raise ParameterError(f"TQRM_THREADS must be an integer, got {env!r}") from err
    threads = 1 if threads is None else int(threads)
    if threads < 1:
        raise ParameterError("thread count must be >= 1")
    return threads


def ordered_map(func, items, threads: int | None = None) -> list:
    """Apply ``func`` to each item, possibly concurrently, keeping input order."""
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))


def spectrum_sweep(
    params_base: ModelParams,
    g_grid,
    trunc=None,
    sector: Sector = Sector.FULL,
    k: int = 8,
    threads: int | None = None,
) -> np.ndarray:
    """Rows ``(g, E_1, ..., E_k)`` of the lowest levels along a coupling grid."""
    grid = _check_grid(g_grid)
    trunc = FockTruncation() if trunc is None else as_truncation(trunc)
    k = int(k)
    if k < 1:
        raise ParameterError("k must be >= 1")

    def row(g):
        try:
            es = eigensolve(sector_matrix(replace(params_base, g=float(g)), trunc, sector), k)
        except Exception as err:
            raise SweepError(float(g), err) from err
        return np.concatenate([[g], es.values])

    return np.vstack(ordered_map(row, grid, threads))


def partial_trace_phonon(state_vector, trunc) -> np.ndarray:
    """Phonon reduced density matrix rho[m, n] = sum_s psi[s, m] psi[s, n].

    The spin dimension is inferred from the vector length, so sector states
    (expressed in any orthonormal spin basis) work as well as full ones.
    """
    psi = np.asarray(state_vector, dtype=float).reshape(-1)
    dim = as_truncation(trunc).dim
    if psi.size % dim:
        raise ParameterError(f"state length {psi.size} is not a multiple of {dim}")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1) > NORM_TOL:
        raise ParameterError(f"state is not normalised (norm {norm!r})")
    block = psi.reshape(-1, dim)
    rho = block.T @ block
    return 0.5 * (rho + rho.T)

