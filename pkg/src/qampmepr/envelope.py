"""OFDM envelope synthesis, peak envelope power (PEP) and PMEPR of codes.

With carriers at ``f0 + i*delta_f`` the envelope ``|S_a(t)|`` depends on t only
through ``u = delta_f * t mod 1``, so every computation below works on one
period of ``u``. In that variable the instantaneous power

    P(u) = ||a||^2 + 2 * sum_{tau>=1} Re(C_a(tau) * exp(-2j*pi*tau*u))

is a real trigonometric polynomial of degree N-1, which gives cheap global
bounds on its first and second derivatives:

    |P'|  <= 4*pi   * sum tau   |C_a(tau)|
    |P''| <= 8*pi^2 * sum tau^2 |C_a(tau)|

The PEP estimator samples P on an oversampled grid and then runs a
branch-and-bound over grid cells using those bounds, so the reported
``error_bound`` is a certified bound on ``sup P - value``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from qampmepr.errors import ArgumentError, DimensionError
from qampmepr.seqcore import SequenceLike, as_complex_array

DEFAULT_OVERSAMPLING = 16
REFINE_XTOL = 1e-12
# branch-and-bound stops once every cell is within this fraction of the peak
_BNB_REL_GAP = 1e-11
_BNB_MAX_DEPTH = 64
_EVAL_CHUNK = 4096


@dataclass(frozen=True)
class CarrierConfig:
    """Carrier grid ``f_i = f0 + i*delta_f`` over a symbol period ``T``."""

    f0: float = 0.0
    delta_f: float = 1.0
    T: float = 1.0

    def __post_init__(self) -> None:
        if not self.delta_f > 0 or not self.T > 0:
            raise ArgumentError("delta_f and T must be positive")
        prod = self.T * self.delta_f
        if prod < 0.5 or abs(prod - round(prod)) > 1e-9 * max(1.0, prod):
            raise ArgumentError(f"T*delta_f must be a positive integer, got {prod!r}")

    @property
    def periods(self) -> int:
        """Number of envelope periods inside one symbol."""
        return int(round(self.T * self.delta_f))


@dataclass(frozen=True)
class PepEstimate:
    value: float
    grid_points: int
    refinement_tolerance: float
    error_bound: float
    t_peak: float = 0.0

    @property
    def upper(self) -> float:
        return self.value + self.error_bound


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """A finite code: codewords as rows of ``matrix`` with selection probabilities."""

    matrix: np.ndarray
    probabilities: np.ndarray

    def __init__(self, sequences, probabilities=None):
        if isinstance(sequences, np.ndarray) and sequences.ndim == 2:
            mat = sequences.astype(np.complex128, copy=True)
        else:
            rows = [as_complex_array(s) for s in sequences]
            if not rows:
                raise ArgumentError("a code needs at least one codeword")
            lengths = {r.size for r in rows}
            if len(lengths) != 1:
                raise DimensionError(f"codewords have mixed lengths {sorted(lengths)}")
            mat = np.vstack(rows)
        if mat.shape[0] == 0:
            raise ArgumentError("a code needs at least one codeword")
        if probabilities is None:
            probs = np.full(mat.shape[0], 1.0 / mat.shape[0])
        else:
            probs = np.asarray(probabilities, dtype=float).reshape(-1)
            if probs.size != mat.shape[0]:
                raise DimensionError("one probability per codeword is required")
            if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
                raise ArgumentError("probabilities must be nonnegative and sum to 1")
        mat.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "probabilities", probs)

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @property
    def length(self) -> int:
        return self.matrix.shape[1]

    def average_power(self) -> float:
        """``P_av = sum_a p(a) ||a||^2``."""
        return float(self.probabilities @ np.sum(np.abs(self.matrix) ** 2, axis=1))


def _check_time(t, cfg: CarrierConfig) -> np.ndarray:
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0) or np.any(tt > cfg.T):
        raise ArgumentError(f"t must lie in [0, T={cfg.T}]")
    return tt


def _baseband(arr: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``sum_k a_k exp(2j*pi*k*u)`` for each u (any shape)."""
    flat = u.reshape(-1)
    k = np.arange(arr.size)
    out = np.empty(flat.size, dtype=np.complex128)
    for start in range(0, flat.size, _EVAL_CHUNK):
        chunk = flat[start : start + _EVAL_CHUNK]
        out[start : start + chunk.size] = np.exp(2j * np.pi * np.outer(chunk, k)) @ arr
    return out.reshape(u.shape)


def synthesize_signal(a: SequenceLike, cfg: CarrierConfig | None = None, t=0.0):
    """Complex OFDM signal ``S_a(t) = sum_i a_i exp(2j*pi*(f0 + i*delta_f)*t)``."""
    cfg = cfg or CarrierConfig()
    arr = as_complex_array(a)
    tt = _check_time(t, cfg)
    s = np.exp(2j * np.pi * cfg.f0 * tt) * _baseband(arr, cfg.delta_f * tt)
    return complex(s) if s.ndim == 0 else s


def instantaneous_power(a: SequenceLike, cfg: CarrierConfig | None = None, t=0.0):
    """``P_a(t) = |S_a(t)|^2``."""
    cfg = cfg or CarrierConfig()
    arr = as_complex_array(a)
    tt = _check_time(t, cfg)
    p = np.abs(_baseband(arr, cfg.delta_f * tt)) ** 2
    return float(p) if p.ndim == 0 else p


def autocorrelations(arr: np.ndarray) -> np.ndarray:
    """``C_a(tau)`` for tau = 0..N-1 (floating point)."""
    n = arr.size
    return np.array([np.sum(arr[: n - tau] * np.conj(arr[tau:])) for tau in range(n)])


def power_via_autocorrelation(a: SequenceLike, cfg: CarrierConfig | None = None, t=0.0):
    """Instantaneous power from the correlation form ``||a||^2 + 2 sum Re(e^{-2j pi tau df t} C(tau))``."""
    cfg = cfg or CarrierConfig()
    arr = as_complex_array(a)
    tt = _check_time(t, cfg)
    corr = autocorrelations(arr)
    taus = np.arange(1, arr.size)
    phase = np.exp(-2j * np.pi * np.multiply.outer(cfg.delta_f * tt, taus))
    p = corr[0].real + 2.0 * np.real(phase @ corr[1:])
    return float(p) if np.ndim(p) == 0 else p


def mean_power(a: SequenceLike) -> float:
    """Time-averaged envelope power over one symbol, ``||a||^2``."""
    return float(np.sum(np.abs(as_complex_array(a)) ** 2))


def _grid_power(mat: np.ndarray, size: int) -> np.ndarray:
    """``P`` at ``u = l/size`` for each row of ``mat``; needs size >= N."""
    return np.abs(np.fft.ifft(mat, n=size, axis=-1) * size) ** 2


def _derivative_bounds(mat: np.ndarray, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bounds on |P'| and |P''| per row, from correlations recovered off the grid.

    The grid has at least 2N-1 points so its DFT returns the correlation
    coefficients without aliasing.
    """
    n = mat.shape[-1]
    size = grid.shape[-1]
    coef = np.fft.fft(grid, axis=-1) / size
    mags = np.abs(coef[..., 1:n])
    # guard against DFT rounding: correlations are bounded by sum|a|^2 anyway
    mags = mags + 1e-12 * np.sum(np.abs(mat) ** 2, axis=-1, keepdims=True)
    taus = np.arange(1, n)
    return 4 * np.pi * (mags @ taus), 8 * np.pi**2 * (mags @ taus.astype(float) ** 2)


def _cell_slack(width: float, d1, d2):
    # sup over a cell exceeds its larger endpoint by at most this much
    return np.minimum(d1 * width / 2.0, d2 * width * width / 8.0)


def _polish(arr: np.ndarray, u0: float, half_width: float) -> tuple[float, float]:
    res = minimize_scalar(
        lambda u: -float(np.abs(_baseband(arr, np.array(u))) ** 2),
        bounds=(u0 - half_width, u0 + half_width),
        method="bounded",
        options={"xatol": REFINE_XTOL},
    )
    return -float(res.fun), float(res.x) % 1.0


def _refine(arr: np.ndarray, grid: np.ndarray, d1: float, d2: float) -> tuple[float, float, float]:
    """Certified sup of P: returns (value, u at value, error bound)."""
    size = grid.size
    h = 1.0 / size
    k = int(np.argmax(grid))
    best, best_u = float(grid[k]), k * h
    val, u = _polish(arr, best_u, h)
    if val > best:
        best, best_u = val, u
    gap = _BNB_REL_GAP * max(best, 1e-300)

    left = np.arange(size) * h
    lo = grid
    hi = np.roll(grid, -1)
    width = h
    worst_pruned = -np.inf
    depth = 0
    while True:
        upper = np.maximum(lo, hi) + _cell_slack(width, d1, d2)
        keep = upper > best + gap
        if np.any(~keep):
            worst_pruned = max(worst_pruned, float(upper[~keep].max()))
        if not np.any(keep) or depth >= _BNB_MAX_DEPTH:
            if np.any(keep):
                worst_pruned = max(worst_pruned, float(upper[keep].max()))
            break
        left, lo, hi = left[keep], lo[keep], hi[keep]
        width /= 2.0
        mid = left + width
        pm = np.abs(_baseband(arr, mid)) ** 2
        j = int(np.argmax(pm))
        if pm[j] > best:
            best, best_u = float(pm[j]), float(mid[j])
            val, u = _polish(arr, best_u, width)
            if val > best:
                best, best_u = val, u
            gap = _BNB_REL_GAP * best
        left = np.concatenate([left, mid])
        lo, hi = np.concatenate([lo, pm]), np.concatenate([pm, hi])
        depth += 1
    return best, best_u % 1.0, max(0.0, worst_pruned - best)


def pep(
    a: SequenceLike,
    cfg: CarrierConfig | None = None,
    oversampling: int = DEFAULT_OVERSAMPLING,
    refine: bool = True,
) -> PepEstimate:
    """Peak envelope power ``sup_t |S_a(t)|^2`` over the symbol period.

    Parameters
    ----------
    a : sequence
        Quaternary or complex codeword.
    cfg : CarrierConfig, optional
        Carrier grid; the default is ``f0=0, delta_f=1, T=1``.
    oversampling : int
        Grid points per subcarrier (at least 4).
    refine : bool
        If true, polish the best grid point and certify the global maximum by
        branch-and-bound; otherwise return the grid maximum.

    Returns
    -------
    PepEstimate
        ``value`` is attained by the signal; ``value + error_bound`` bounds the
        true supremum from above.
    """
    cfg = cfg or CarrierConfig()
    if oversampling < 4:
        raise ArgumentError(f"oversampling must be >= 4, got {oversampling}")
    arr = as_complex_array(a)
    size = oversampling * arr.size
    grid = _grid_power(arr, size)
    d1, d2 = _derivative_bounds(arr, grid)
    d1, d2 = float(d1), float(d2)
    if refine:
        value, u, err = _refine(arr, grid, d1, d2)
    else:
        k = int(np.argmax(grid))
        value, u, err = float(grid[k]), k / size, float(_cell_slack(1.0 / size, d1, d2))
    return PepEstimate(
        value=value,
        grid_points=size,
        refinement_tolerance=REFINE_XTOL if refine else 1.0 / size,
        error_bound=err,
        t_peak=u / cfg.delta_f,
    )


@dataclass(frozen=True)
class PeakSearch:
    """Largest PEP among many codewords."""

    value: float
    error_bound: float
    index: int
    refined: int


def max_pep(
    matrix: np.ndarray, oversampling: int = DEFAULT_OVERSAMPLING, refine: bool = True, chunk: int = 8192
) -> PeakSearch:
    """Certified maximum PEP over the rows of ``matrix``.

    All rows are sampled on the grid; only rows whose grid upper bound could
    still beat the running maximum are refined.
    """
    if oversampling < 4:
        raise ArgumentError(f"oversampling must be >= 4, got {oversampling}")
    mat = np.asarray(matrix, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] == 0:
        raise ArgumentError("expected a non-empty (codewords, N) matrix")
    size = oversampling * mat.shape[1]
    lower = np.empty(mat.shape[0])
    upper = np.empty(mat.shape[0])
    for start in range(0, mat.shape[0], chunk):
        block = mat[start : start + chunk]
        grid = _grid_power(block, size)
        d1, d2 = _derivative_bounds(block, grid)
        lower[start : start + block.shape[0]] = grid.max(axis=1)
        upper[start : start + block.shape[0]] = grid.max(axis=1) + _cell_slack(1.0 / size, d1, d2)
    if not refine:
        idx = int(np.argmax(lower))
        return PeakSearch(float(lower[idx]), float(upper.max() - lower[idx]), idx, 0)

    best, best_idx, certified, refined = float(lower.max()), int(np.argmax(lower)), -np.inf, 0
    for idx in np.argsort(-upper, kind="stable"):
        if upper[idx] <= best:
            # every remaining row is dominated
            certified = max(certified, float(upper[idx]))
            break
        est = pep(mat[idx], oversampling=oversampling, refine=True)
        refined += 1
        certified = max(certified, est.upper)
        if est.value > best or (est.value == best and idx < best_idx):
            best, best_idx = est.value, int(idx)
    return PeakSearch(best, max(0.0, certified - best), best_idx, refined)


def pmepr_code(
    code: CodeSpec,
    cfg: CarrierConfig | None = None,
    oversampling: int = DEFAULT_OVERSAMPLING,
    refine: bool = True,
) -> float:
    """``max_a PEP(a) / P_av`` for a finite code."""
    if len(code) == 0:
        raise ArgumentError("empty code")
    peak = max_pep(code.matrix, oversampling=oversampling, refine=refine)
    return peak.value / code.average_power()


def dense_grid_pep(a: SequenceLike, points: int = 4096) -> float:
    """Plain maximum of P on a uniform grid; an independent lower estimate of the PEP."""
    arr = as_complex_array(a)
    u = np.arange(points) / points
    k = np.arange(arr.size)
    return float(np.max(np.abs(np.exp(2j * np.pi * np.outer(u, k)) @ arr) ** 2))
