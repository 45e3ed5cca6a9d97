"""Bogoliubov-operator recursions and the G-function of the detuned triplet block.

The triplet block is written in the original-frame basis |uu>, |+>, |dd> with
|+> = (|ud> + |du>)/sqrt2.  An eigenstate is expanded twice:

    |Psi_A> = sum_m sqrt(m!) (c_m |uu> + d_m |+> + e_m |dd>) |m_A>,   A = a + g/w
    |Psi_B> = sum_m (-1)^m sqrt(m!) (c'_m |uu> + d'_m |+> + e'_m |dd>) |m_B>,   B = a - g/w

and the two expansions agree exactly at eigenvalues, which are the zeros of

    G(E) = S[c] S[e'] - S[c'] S[e],   S[x] = sum_m x_m (g/w)^m.

The B-side seeds c'_0, e'_0 are projections of |Psi_A> on <0_B|.  Those
overlap series decay only algebraically, like m^-(2 + g^2/w^2 + E/w); their
tails are summed in closed form from a least-squares fit of the asymptotic
expansion, which also continues them analytically where they diverge.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .errors import (
    NonConvergentSeries,
    ParameterError,
    PoleProximity,
    ResonantCase,
    SeedUnderflow,
    ZeroCoupling,
)
from .model import ModelParams, Sector
from .phonon import displacement_matrix
from .spectra import eigensolve, sector_matrix

POLE_GUARD = 1e-4
SCAN_STEP = 1e-3
ROOT_TOL = 1e-9
TERM_TOL = 1e-12
STABILITY_TOL = 1e-11
M_START = 64
M_CAP = 400
RESCALE_EVERY = 16
RESCALE_LIMIT = 1e100
TAIL_ORDER = 8
MATCH_TOL = 1e-6
DIP_LEVEL = 1e-2
CHUNK = 512

SQRT2 = math.sqrt(2.0)
# B_2j for the Euler-Maclaurin tail of sum n^-s
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6)


@dataclass(frozen=True)
class SeriesCoefficients:
    """Recursion arrays; true coefficients are ``array * exp(log_scale)``.

    For a batch of trial energies the arrays have shape ``(n_E, M + 1)`` and
    ``log_scale`` shape ``(n_E,)``.
    """

    c: np.ndarray
    d: np.ndarray
    e: np.ndarray
    log_scale: float | np.ndarray

    def scaled(self, s: float) -> "SeriesCoefficients":
        return SeriesCoefficients(self.c * s, self.d * s, self.e * s, self.log_scale)


@dataclass(frozen=True)
class GEvaluation:
    E: float
    value: float
    nearest_pole_distance: float
    M_used: int
    scale: float
    valid: bool = True

    @property
    def normalized(self) -> float:
        """|G| relative to the size of its two products; about 1 near poles."""
        return abs(self.value) / self.scale if self.scale > 0 else math.inf


class RootKind(enum.Enum):
    REGULAR = "regular"
    EXCEPTIONAL_CANDIDATE = "exceptional_candidate"
    # G vanishes but the two expansions differ by a factor K != 1
    SPURIOUS = "spurious"


@dataclass(frozen=True)
class RootRecord:
    E: float
    sector: Sector
    residual_G: float
    ed_match: float | None = None
    kind: RootKind = RootKind.REGULAR


def _check_params(params: ModelParams):
    if not isinstance(params, ModelParams):
        raise ParameterError("params must be a ModelParams")
    if params.g == 0:
        raise ZeroCoupling("g = 0: the recursions divide by g; use exact diagonalization")


def _as_batch(E):
    E = np.atleast_1d(np.asarray(E, dtype=float))
    if E.ndim != 1 or not np.all(np.isfinite(E)):
        raise ParameterError("trial energies must be finite")
    return E


def pole_positions(params: ModelParams, M: int):
    """Pole energies of the recursions up to index M.

    Returns ``(coupled, plus)``: ``coupled`` are w m - g^2/w +/- 2 eps from the
    c and e denominators, ``plus`` are w m - g^2/w from the d' denominators.
    """
    w, eps, g = params.omega, params.epsilon, params.g
    base = w * np.arange(M + 1) - g * g / w
    return np.concatenate([base - 2 * eps, base + 2 * eps]), base


def nearest_pole_distance(E, params: ModelParams, M: int) -> np.ndarray:
    coupled, plus = pole_positions(params, M)
    poles = np.concatenate([coupled, plus])
    E = np.atleast_1d(np.asarray(E, dtype=float))
    return np.min(np.abs(E[:, None] - poles[None, :]), axis=1)


def _guard(E, params, M, pole_guard):
    dist = nearest_pole_distance(E, params, M)
    bad = dist <= pole_guard * params.omega
    if np.any(bad):
        i = int(np.argmax(bad))
        coupled, plus = pole_positions(params, M)
        poles = np.concatenate([coupled, plus])
        j = int(np.argmin(np.abs(poles - E[i])))
        m = j % (M + 1)
        raise PoleProximity(f"E={E[i]!r} lies within {dist[i]:.3g} of the pole at m={m}", m=m, E=float(E[i]))
    return dist


def _fold(arrays, k, log_scale):
    """Divide columns 0..k of every array by the size of the latest entries."""
    ref = arrays[0]
    big = np.maximum(np.abs(ref[:, k]), np.abs(ref[:, k - 1]))
    for extra in arrays[1:]:
        big = np.maximum(big, np.maximum(np.abs(extra[:, k]), np.abs(extra[:, k - 1])))
    rows = big > RESCALE_LIMIT
    if np.any(rows):
        for arr in arrays:
            arr[rows, : k + 1] /= big[rows, None]
        log_scale[rows] += np.log(big[rows])


def _a_side(E: np.ndarray, params: ModelParams, M: int) -> SeriesCoefficients:
    w, W, eps, g = params.omega, params.Omega, params.epsilon, params.g
    m = np.arange(M + 1)
    D = E[:, None] - w * m + g * g / w
    C = (w * m + 3 * g * g / w - E[:, None] + 2 * W * W * (1 / (D + 2 * eps) + 1 / (D - 2 * eps))) / (2 * g)
    d = np.zeros((E.size, M + 1))
    log_scale = np.zeros(E.size)
    d[:, 0] = 1.0
    d[:, 1] = C[:, 0]
    for k in range(2, M + 1):
        d[:, k] = (C[:, k - 1] * d[:, k - 1] - d[:, k - 2]) / k
        if k % RESCALE_EVERY == 0:
            _fold([d], k, log_scale)
    c = SQRT2 * W * d / (D - 2 * eps)
    e = SQRT2 * W * d / (D + 2 * eps)
    return SeriesCoefficients(c, d, e, log_scale)


def _check_M(M: int) -> int:
    M = int(M)
    if M < 2 * TAIL_ORDER + 2:
        raise ParameterError(f"M must be at least {2 * TAIL_ORDER + 2}")
    return M


def a_side_coefficients(E: float, params: ModelParams, M: int, pole_guard: float = POLE_GUARD) -> SeriesCoefficients:
    """A-side arrays with d_0 = 1 for one trial energy.

    ``d`` follows m d_m = C_{m-1} d_{m-1} - d_{m-2}; ``c`` and ``e`` are the
    closures sqrt2 W d_m / (D_m -/+ 2 eps), D_m = E - w m + g^2/w.
    """
    _check_params(params)
    M = _check_M(M)
    E = _as_batch(E)
    _guard(E, params, M, pole_guard)
    s = _a_side(E, params, M)
    return SeriesCoefficients(s.c[0], s.d[0], s.e[0], float(s.log_scale[0]))


def hurwitz_tail(s, a: float):
    """sum_{n >= a} n^-s by Euler-Maclaurin, analytically continued in s."""
    s = np.asarray(s, dtype=float)
    out = a ** (1 - s) / (s - 1) + 0.5 * a ** (-s)
    rising = s.copy()
    power = a ** (-s - 1)
    for j, b in enumerate(_BERNOULLI, 1):
        out = out + b / math.factorial(2 * j) * rising * power
        rising = rising * (s + 2 * j - 1) * (s + 2 * j)
        power = power / (a * a)
    return out


def _tail_fit_matrix(N: int):
    n = np.arange(N // 2, N + 1, dtype=float)
    A = np.stack([(N / n) ** k for k in range(TAIL_ORDER)], axis=1)
    return n, np.linalg.pinv(A)


def completed_sum(terms: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Sum of each row of ``terms`` plus its fitted algebraic tail.

    Each row t_n is assumed to behave like n^-sigma (b_0 + b_1 N/n + ...) for
    large n; the coefficients come from a least-squares fit on the upper half
    of the row and the remainder sum_{n > N} is evaluated in closed form.
    """
    N = terms.shape[1] - 1
    n, pinv = _tail_fit_matrix(N)
    window = terms[:, N // 2 :] * np.exp(sigma[:, None] * np.log(n)[None, :])
    b = window @ pinv.T
    tail = np.zeros(terms.shape[0])
    for k in range(TAIL_ORDER):
        tail += b[:, k] * float(N) ** k * hurwitz_tail(sigma + k, N + 1.0)
    return terms.sum(axis=1) + tail


def _seed_exponent(E, params):
    w, g = params.omega, params.g
    return 2 + g * g / (w * w) + E / w


def _b_side(E: np.ndarray, params: ModelParams, M: int, a: SeriesCoefficients) -> SeriesCoefficients:
    w, W, eps, g = params.omega, params.Omega, params.epsilon, params.g
    m = np.arange(M + 1)
    z = 2 * g / w
    zpow = np.exp(m * math.log(abs(z))) * np.sign(z) ** m
    sigma = _seed_exponent(E, params)
    overlap = math.exp(-2 * g * g / (w * w))
    c0 = overlap * completed_sum(a.c * zpow, sigma)
    e0 = overlap * completed_sum(a.e * zpow, sigma)
    if W != 0 and np.any((c0 == 0) & (e0 == 0)):
        raise SeedUnderflow("both B-side seeds underflowed after rescaling")
    Cp = (w * m + 3 * g * g / w + 2 * eps - E[:, None]) / (2 * g)
    Cm = (w * m + 3 * g * g / w - 2 * eps - E[:, None]) / (2 * g)
    Dd = E[:, None] + g * g / w - w * m
    cross = W / (SQRT2 * g)
    cp = np.zeros((E.size, M + 1))
    ep = np.zeros_like(cp)
    dp = np.zeros_like(cp)
    log_scale = np.array(a.log_scale, dtype=float, copy=True).reshape(E.size)
    cp[:, 0], ep[:, 0] = c0, e0
    dp[:, 0] = SQRT2 * W * (c0 + e0) / Dd[:, 0]
    for k in range(1, M + 1):
        cm2 = cp[:, k - 2] if k >= 2 else 0.0
        em2 = ep[:, k - 2] if k >= 2 else 0.0
        cp[:, k] = (cross * dp[:, k - 1] + Cp[:, k - 1] * cp[:, k - 1] - cm2) / k
        ep[:, k] = (cross * dp[:, k - 1] + Cm[:, k - 1] * ep[:, k - 1] - em2) / k
        dp[:, k] = SQRT2 * W * (cp[:, k] + ep[:, k]) / Dd[:, k]
        if k % RESCALE_EVERY == 0:
            _fold([cp, ep, dp], k, log_scale)
    return SeriesCoefficients(cp, dp, ep, log_scale)


def b_side_coefficients(
    E: float,
    params: ModelParams,
    M: int,
    a_side: SeriesCoefficients,
    pole_guard: float = POLE_GUARD,
) -> SeriesCoefficients:
    """B-side arrays seeded by projecting the A-side expansion on <0_B|.

    c'_0 = exp(-2 g^2/w^2) sum_n c_n (2g/w)^n and likewise e'_0, with the
    series tails completed analytically; then

        m c'_m = C+_{m-1} c'_{m-1} + (W / sqrt2 g) d'_{m-1} - c'_{m-2}
        m e'_m = C-_{m-1} e'_{m-1} + (W / sqrt2 g) d'_{m-1} - e'_{m-2}
        d'_m = sqrt2 W (c'_m + e'_m) / (E + g^2/w - w m)

    with C+-_m = (w m + 3 g^2/w +- 2 eps - E) / 2g.  The result shares the
    A-side ``log_scale`` (plus any further folding of its own).
    """
    _check_params(params)
    M = _check_M(M)
    E = _as_batch(E)
    _guard(E, params, M, pole_guard)
    a = SeriesCoefficients(
        np.atleast_2d(a_side.c)[:, : M + 1],
        np.atleast_2d(a_side.d)[:, : M + 1],
        np.atleast_2d(a_side.e)[:, : M + 1],
        np.atleast_1d(a_side.log_scale),
    )
    if a.c.shape[1] != M + 1:
        raise ParameterError("A-side arrays are shorter than M + 1")
    b = _b_side(E, params, M, a)
    return SeriesCoefficients(b.c[0], b.d[0], b.e[0], float(b.log_scale[0]))


def _weighted_sums(s: SeriesCoefficients, params: ModelParams):
    M = s.c.shape[-1] - 1
    r = params.g / params.omega
    weight = np.exp(np.arange(M + 1) * math.log(abs(r))) * np.sign(r) ** np.arange(M + 1)
    return s.c * weight, s.e * weight


def g_from_sides(a: SeriesCoefficients, b: SeriesCoefficients, params: ModelParams):
    """G and its normaliser |S_c S_e'| + |S_c' S_e| from both sides' arrays."""
    ca, ea = _weighted_sums(a, params)
    cb, eb = _weighted_sums(b, params)
    Sc, Se = ca.sum(axis=-1), ea.sum(axis=-1)
    Scp, Sep = cb.sum(axis=-1), eb.sum(axis=-1)
    factor = np.exp(np.asarray(a.log_scale) + np.asarray(b.log_scale))
    value = factor * (Sc * Sep - Scp * Se)
    scale = factor * (np.abs(Sc * Sep) + np.abs(Scp * Se))
    terms = (ca, ea, cb, eb)
    sums = (Sc, Se, Scp, Sep)
    return value, scale, terms, sums


def _tail_small(terms, sums) -> np.ndarray:
    ok = np.ones(terms[0].shape[0], dtype=bool)
    for t, s in zip(terms, sums):
        last = np.max(np.abs(t[:, -5:]), axis=1)
        ok &= last <= TERM_TOL * np.maximum(np.abs(s), np.finfo(float).tiny)
    return ok


def _evaluate_batch(E: np.ndarray, params: ModelParams, M: int):
    a = _a_side(E, params, M)
    b = _b_side(E, params, M, a)
    return g_from_sides(a, b, params)


def _check_g_params(params: ModelParams):
    _check_params(params)
    if params.epsilon == 0:
        raise ResonantCase("epsilon = 0: G vanishes identically; use the resonant sector solvers")
    if params.Omega == 0:
        raise ParameterError("Omega = 0: G vanishes identically; the triplet block is diagonal in the spins")


def g_values(E, params: ModelParams, M_start: int = M_START, M_cap: int = M_CAP, strict: bool = True):
    """Vectorised G with adaptive truncation.

    The cutoff doubles (capped at ``M_cap``) until the last five terms of all
    four weighted sums are below 1e-12 of their sums and G moved by less than
    1e-11 of its normaliser since the previous cutoff.  Returns
    ``(value, scale, M_used, settled)``.  Rows that never settle raise
    ``NonConvergentSeries`` when ``strict``; otherwise they keep their value
    at the cap and ``settled`` is False.  No pole guard is applied here.
    """
    _check_g_params(params)
    E = _as_batch(E)
    if E.size > CHUNK:
        parts = [g_values(E[i : i + CHUNK], params, M_start, M_cap, strict) for i in range(0, E.size, CHUNK)]
        return tuple(np.concatenate(col) for col in zip(*parts))
    value = np.full(E.size, np.nan)
    scale = np.full(E.size, np.nan)
    M_used = np.zeros(E.size, dtype=int)
    settled_mask = np.zeros(E.size, dtype=bool)
    todo = np.arange(E.size)
    M = _check_M(M_start)
    prev_value, prev_scale = _evaluate_batch(E, params, M)[:2]
    while todo.size:
        M_next = min(2 * M, M_cap)
        if M_next == M:
            if strict:
                i = int(todo[0])
                raise NonConvergentSeries(
                    f"G series did not settle at E={E[i]!r} with M={M_cap}", E=float(E[i]), M=M_cap
                )
            value[todo], scale[todo], M_used[todo] = prev_value, prev_scale, M
            break
        v, s, terms, sums = _evaluate_batch(E[todo], params, M_next)
        settled = _tail_small(terms, sums)
        settled &= np.abs(v - prev_value) <= STABILITY_TOL * np.maximum(s, prev_scale)
        settled &= np.isfinite(v)
        done = todo[settled]
        value[done], scale[done], M_used[done] = v[settled], s[settled], M_next
        settled_mask[done] = True
        prev_value, prev_scale = v[~settled], s[~settled]
        todo = todo[~settled]
        M = M_next
    return value, scale, M_used, settled_mask


def g_function(
    E: float,
    params: ModelParams,
    M_start: int = M_START,
    M_cap: int = M_CAP,
    pole_guard: float = POLE_GUARD,
) -> GEvaluation:
    """G(E) for the triplet block with adaptive series length."""
    _check_g_params(params)
    E_arr = _as_batch(E)
    if E_arr.size != 1:
        raise ParameterError("g_function takes a single energy; use g_values for batches")
    dist = _guard(E_arr, params, M_cap, pole_guard)
    value, scale, M_used, _ = g_values(E_arr, params, M_start, M_cap)
    return GEvaluation(float(E_arr[0]), float(value[0]), float(dist[0]), int(M_used[0]), float(scale[0]))


def matching_mismatch(E: float, params: ModelParams, M: int = M_CAP) -> float:
    """How far the expansions are from |Psi_A> = |Psi_B> at energy E.

    The B-side seeds are projections of |Psi_A>, so at an eigenvalue the
    proportionality constant between the expansions is exactly 1 and
    S[c] = S[c'], S[e] = S[e'].  G also vanishes wherever the two pairs are
    merely parallel; this relative mismatch tells the cases apart.
    """
    _check_g_params(params)
    E_arr = _as_batch(E)
    a = _a_side(E_arr, params, M)
    b = _b_side(E_arr, params, M, a)
    ca, ea = _weighted_sums(a, params)
    cb, eb = _weighted_sums(b, params)
    ratio = np.exp(np.asarray(b.log_scale) - np.asarray(a.log_scale))
    Sc, Se = ca.sum(axis=-1), ea.sum(axis=-1)
    Scp, Sep = ratio * cb.sum(axis=-1), ratio * eb.sum(axis=-1)
    mis_c = np.abs(Sc - Scp) / (np.abs(Sc) + np.abs(Scp))
    mis_e = np.abs(Se - Sep) / (np.abs(Se) + np.abs(Sep))
    return float(np.max(np.maximum(mis_c, mis_e)))


def singlet_energies(params: ModelParams, n_count: int) -> np.ndarray:
    """Displaced-oscillator levels n w - g^2/w, n = 0 .. n_count-1."""
    n_count = int(n_count)
    if n_count < 1:
        raise ParameterError("n_count must be >= 1")
    return params.omega * np.arange(n_count) - params.g**2 / params.omega


def triplet_levels(params: ModelParams, n_max: int = 240) -> np.ndarray:
    """Exact-diagonalization spectrum of the triplet block."""
    return eigensolve(sector_matrix(params, n_max, Sector.TRIPLET_ROTATED)).values


def _guard_bands(params, lo, hi, guard):
    """Merged exclusion intervals with the pole order they contain."""
    w, eps, g = params.omega, params.epsilon, params.g
    m_hi = max(0, int(math.ceil((hi + g * g / w + 2 * abs(eps)) / w)) + 1)
    coupled, plus = pole_positions(params, m_hi)
    poles = sorted([(p, 2) for p in coupled] + [(p, 1) for p in plus])
    bands = []
    for p, order in poles:
        a, b = p - guard, p + guard
        if b < lo or a > hi:
            continue
        if bands and a <= bands[-1][1]:
            bands[-1][1] = b
            bands[-1][2] += order
            bands[-1][3].append(p)
        else:
            bands.append([a, b, order, [p]])
    return bands


def excluded_fraction(params: ModelParams, E_range, pole_guard: float = POLE_GUARD) -> float:
    """Share of an energy interval removed by the pole guard bands."""
    lo, hi = map(float, E_range)
    guard = pole_guard * params.omega
    total = sum(min(b, hi) - max(a, lo) for a, b, _, _ in _guard_bands(params, lo, hi, guard))
    return total / (hi - lo)


def _refined_samples(samples, params, bands, levels: int = 2, points: int = 64):
    """Evaluate G on the samples and zoom in on dips that show no sign change.

    Two zeros closer than the scan step (a level next to a spurious zero)
    cancel in the sign test; such cells show up as local minima of |G| over
    its normaliser and are resampled on a finer grid.
    """
    values, scales, _, _ = g_values(samples, params, strict=False)
    keep = np.isfinite(values)
    samples, values, scales = samples[keep], values[keep], scales[keep]
    edges = np.array([(a, b) for a, b, _, _ in bands]).reshape(-1, 2)
    for _ in range(levels):
        size = np.abs(values) / scales
        dip = (size[1:-1] <= size[:-2]) & (size[1:-1] <= size[2:]) & (size[1:-1] < DIP_LEVEL)
        same = (np.sign(values[:-2]) == np.sign(values[1:-1])) & (np.sign(values[1:-1]) == np.sign(values[2:]))
        centre = np.nonzero(dip & same)[0] + 1
        fresh = []
        for i in centre:
            lo, hi = samples[i - 1], samples[i + 1]
            if np.any((edges[:, 1] > lo) & (edges[:, 0] < hi)):
                continue
            fresh.append(np.linspace(lo, hi, points + 1)[1:-1])
        if not fresh:
            break
        new = np.setdiff1d(np.concatenate(fresh), samples)
        v, sc, _, _ = g_values(new, params, strict=False)
        ok = np.isfinite(v)
        samples = np.concatenate([samples, new[ok]])
        values = np.concatenate([values, v[ok]])
        scales = np.concatenate([scales, sc[ok]])
        order = np.argsort(samples)
        samples, values, scales = samples[order], values[order], scales[order]
    return samples, values


def find_roots(
    params: ModelParams,
    E_range=(-1.0, 3.0),
    scan_step: float = SCAN_STEP,
    root_tol: float = ROOT_TOL,
    trunc_for_oracle: int | None = None,
    pole_guard: float = POLE_GUARD,
    keep_spurious: bool = False,
) -> list[RootRecord]:
    """Zeros of G in an energy window.

    G is sampled on a uniform grid plus the edges of every pole guard band.
    Sign changes between neighbouring samples are refined by Brent's method.
    Across a band, G must flip sign exactly when the enclosed pole order is
    odd; a violation marks a level hiding in the band, reported as an
    exceptional candidate at the pole position.  A zero where the two
    expansions are parallel but not equal (see ``matching_mismatch``) is not an
    eigenvalue; such zeros are dropped unless ``keep_spurious`` is set, in
    which case they are returned with kind ``SPURIOUS``.  With ``trunc_for_oracle`` set,
    each record carries its distance to the nearest triplet level from exact
    diagonalization at that cutoff.
    """
    _check_g_params(params)
    lo, hi = map(float, E_range)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ParameterError("E_range must be a finite increasing interval")
    if not scan_step > 0:
        raise ParameterError("scan_step must be positive")
    w = params.omega
    step, guard = scan_step * w, pole_guard * w
    bands = _guard_bands(params, lo, hi, guard)
    grid = np.arange(lo, hi + 0.5 * step, step)
    edge = guard * 1e-6
    extra = [x for a, b, _, _ in bands for x in (a - edge, b + edge) if lo <= x <= hi]
    samples = np.unique(np.concatenate([grid, extra]))
    inside = np.zeros(samples.size, dtype=bool)
    for a, b, _, _ in bands:
        inside |= (samples >= a) & (samples <= b)
    samples = samples[~inside]
    samples, values = _refined_samples(samples, params, bands)
    signs = np.sign(values)

    def scalar(x):
        return float(g_values(np.array([x]), params, strict=False)[0][0])

    levels = triplet_levels(params, trunc_for_oracle) if trunc_for_oracle else None

    def match(x):
        if levels is None:
            return None
        return float(np.min(np.abs(levels - x)))

    records = []

    def accept(x, residual):
        if matching_mismatch(x, params) <= MATCH_TOL:
            records.append(RootRecord(x, Sector.TRIPLET_ROTATED, residual, match(x)))
        elif keep_spurious:
            records.append(RootRecord(x, Sector.TRIPLET_ROTATED, residual, match(x), RootKind.SPURIOUS))

    band_iter = 0
    for i in range(samples.size - 1):
        x0, x1 = samples[i], samples[i + 1]
        while band_iter < len(bands) and bands[band_iter][1] < x0:
            band_iter += 1
        crossing = band_iter < len(bands) and x0 < bands[band_iter][0] and bands[band_iter][1] < x1
        flip = signs[i] * signs[i + 1] < 0
        if signs[i] == 0:
            accept(float(x0), 0.0)
            continue
        if crossing:
            a, b, order, poles = bands[band_iter]
            if flip != bool(order % 2):
                p = float(np.mean(poles))
                records.append(
                    RootRecord(p, Sector.TRIPLET_ROTATED, math.nan, match(p), RootKind.EXCEPTIONAL_CANDIDATE)
                )
            continue
        if flip:
            root = brentq(scalar, x0, x1, xtol=0.01 * root_tol * w, rtol=4 * np.finfo(float).eps)
            v, s, _, _ = g_values(np.array([root]), params, strict=False)
            accept(float(root), float(abs(v[0]) / s[0]))
    if samples.size and signs[-1] == 0:
        accept(float(samples[-1]), 0.0)
    return records


def _truncate_growth(vectors: np.ndarray, log_scale: float) -> np.ndarray:
    """Fock amplitudes sqrt(m!) x_m, cut where their combined size is smallest."""
    M = vectors.shape[1] - 1
    with np.errstate(divide="ignore"):
        log_size = 0.5 * np.log(np.sum(vectors**2, axis=0)) + 0.5 * gammaln(np.arange(M + 1) + 1)
    cut = int(np.argmin(np.where(np.isfinite(log_size), log_size, np.inf)))
    amp = vectors[:, : cut + 1] * np.exp(0.5 * gammaln(np.arange(cut + 1) + 1) + log_scale)
    return amp


def reconstruct_wavefunctions(E: float, params: ModelParams, n_fock: int = 240, M: int = 200):
    """Both Bogoliubov expansions of the triplet state at energy E.

    Returns ``(psi_A, psi_B)`` on the original-frame triplet basis
    (|uu>, |+>, |dd>) x Fock, spin-major with ``n_fock + 1`` phonon levels.
    Each expansion is cut where its amplitudes stop decreasing, which is
    where the growing solution of the recursion takes over away from an
    exact eigenvalue.
    """
    _check_g_params(params)
    E_arr = _as_batch(E)
    _guard(E_arr, params, M, POLE_GUARD)
    a = _a_side(E_arr, params, M)
    b = _b_side(E_arr, params, M, a)
    amp_a = _truncate_growth(np.stack([a.c[0], a.d[0], a.e[0]]), float(a.log_scale[0]))
    amp_b = _truncate_growth(np.stack([b.c[0], b.d[0], b.e[0]]), float(b.log_scale[0]))
    amp_b = amp_b * (-1.0) ** np.arange(amp_b.shape[1])
    shift = params.g / params.omega
    DA = displacement_matrix(-shift, n_fock, amp_a.shape[1] - 1)
    DB = displacement_matrix(shift, n_fock, amp_b.shape[1] - 1)
    psi_a = (amp_a @ DA.T).reshape(-1)
    psi_b = (amp_b @ DB.T).reshape(-1)
    return psi_a, psi_b


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))


def wavefunction_agreement(E: float, params: ModelParams, n_fock: int = 240, M: int = 200) -> float:
    """Cosine similarity of the A- and B-side reconstructions at energy E."""
    return cosine_similarity(*reconstruct_wavefunctions(E, params, n_fock, M))
