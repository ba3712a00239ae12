"""Scale decomposition of a series driven by estimated innovations.

The innovation sequence is filtered into Haar "detail" shocks with dyadic
persistence 2^j; the MA coefficients are aggregated into scale-specific
responses; their products, evaluated at each observation's own rescaled
time, are the orthogonal persistence components of the series.  A low-pass
residual collects everything beyond the coarsest retained scale, so that on
a fully supported time range the components and residual add back up to the
MA-implied series exactly.

Positions whose Haar window reaches before the first available innovation
are marked NaN (unavailable), never zero-filled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DomainError
from .wold import MaRepresentation

__all__ = [
    "ScaleDecomposition",
    "PersistenceRatios",
    "haar_detail_shocks",
    "haar_lowpass_shocks",
    "scale_betas",
    "lowpass_gammas",
    "scale_components",
    "residual_component",
    "persistence_ratios",
    "decompose",
    "default_n_shifts",
]


@dataclass(frozen=True)
class ScaleDecomposition:
    """All pieces of a truncated scale decomposition.

    Arrays are indexed as ``beta[grid point, scale-1, shift]``,
    ``detail_shocks[scale-1, t]`` and ``components[scale-1, t]`` where ``t``
    runs over the innovation sample; NaN marks unavailable positions.
    """

    n_scales: int
    n_shifts: int
    grid: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    detail_shocks: np.ndarray
    lowpass_shocks: np.ndarray
    components: np.ndarray
    residual: np.ndarray
    innovations: np.ndarray
    innovation_times: np.ndarray

    def reconstruction(self) -> np.ndarray:
        """Sum of scale components plus the low-pass residual (NaN where any
        piece is unavailable)."""
        return self.components.sum(axis=0) + self.residual

    @property
    def supported(self) -> np.ndarray:
        """Boolean mask of positions where every piece is available."""
        return np.isfinite(self.reconstruction())


@dataclass(frozen=True)
class PersistenceRatios:
    """Share of each scale in the total response magnitude at shift ``k_ref``."""

    grid: np.ndarray
    ratios: np.ndarray
    k_ref: int

    def __post_init__(self):
        defined = np.all(np.isfinite(self.ratios), axis=1)
        if defined.any():
            sums = self.ratios[defined].sum(axis=1)
            if not np.allclose(sums, 1.0, atol=1e-10):
                raise DomainError("persistence ratios must sum to one per time slice")
            if np.any(self.ratios[defined] < 0):
                raise DomainError("persistence ratios must be nonnegative")


def _block_sums(x: np.ndarray, width: int) -> np.ndarray:
    """sums[s] = x[s] + ... + x[s+width-1] by direct convolution."""
    return np.convolve(x, np.ones(width), mode="valid")


def haar_detail_shocks(innovations: np.ndarray, n_scales: int) -> np.ndarray:
    """Haar-filtered detail shocks for scales 1..n_scales.

    ``out[j-1, t]`` is the normalised difference of the two adjacent blocks
    of 2^(j-1) innovations ending at ``t``; positions without a full window
    are NaN.
    """
    eps = np.asarray(innovations, dtype=float)
    n = len(eps)
    if n_scales < 1:
        raise DomainError(f"n_scales must be >= 1, got {n_scales}")
    if n < 2 ** n_scales:
        raise DomainError(
            f"need at least 2^{n_scales} = {2 ** n_scales} innovations, got {n}"
        )
    out = np.full((n_scales, n), np.nan)
    for j in range(1, n_scales + 1):
        half = 2 ** (j - 1)
        sums = _block_sums(eps, half)  # sums[s] covers eps[s .. s+half-1]
        t = np.arange(2 ** j - 1, n)
        out[j - 1, t] = (sums[t - half + 1] - sums[t - 2 * half + 1]) / np.sqrt(2 ** j)
    return out


def haar_lowpass_shocks(innovations: np.ndarray, n_scales: int) -> np.ndarray:
    """All-positive Haar aggregate over 2^n_scales innovations ending at t."""
    eps = np.asarray(innovations, dtype=float)
    n = len(eps)
    width = 2 ** n_scales
    if n < width:
        raise DomainError(f"need at least {width} innovations, got {n}")
    out = np.full(n, np.nan)
    sums = _block_sums(eps, width)
    t = np.arange(width - 1, n)
    out[t] = sums[t - width + 1] / np.sqrt(width)
    return out


def default_n_shifts(truncation: int, n_scales: int) -> int:
    """Largest shift count fully supported by the MA truncation."""
    k = truncation // 2 ** n_scales
    if k < 1:
        raise DomainError(
            f"truncation {truncation} supports no shift at scale {n_scales}; "
            f"need at least {2 ** n_scales}"
        )
    return k


def _check_truncation(truncation, n_scales, n_shifts):
    need = n_shifts * 2 ** n_scales
    if truncation < need:
        raise DomainError(
            f"MA truncation {truncation} too small for n_scales={n_scales}, "
            f"n_shifts={n_shifts}: need at least {need}"
        )


def scale_betas(ma: MaRepresentation, n_scales: int, n_shifts: int) -> np.ndarray:
    """Scale-specific response coefficients ``beta[g, j-1, k]``.

    Each entry aggregates the MA coefficients over the two halves of the
    Haar window starting at lag ``k * 2^j``.
    """
    if n_scales < 1:
        raise DomainError(f"n_scales must be >= 1, got {n_scales}")
    if n_shifts < 1:
        raise DomainError(f"n_shifts must be >= 1, got {n_shifts}")
    _check_truncation(ma.truncation, n_scales, n_shifts)
    alpha = ma.ma_coeffs
    G = alpha.shape[0]
    beta = np.empty((G, n_scales, n_shifts))
    for j in range(1, n_scales + 1):
        half = 2 ** (j - 1)
        norm = 1.0 / np.sqrt(2 ** j)
        for k in range(n_shifts):
            s = k * 2 ** j
            beta[:, j - 1, k] = norm * (
                alpha[:, s : s + half].sum(axis=1)
                - alpha[:, s + half : s + 2 * half].sum(axis=1)
            )
    return beta


def lowpass_gammas(ma: MaRepresentation, n_scales: int, n_shifts: int) -> np.ndarray:
    """Low-pass aggregate coefficients ``gamma[g, k]`` at the coarsest scale."""
    _check_truncation(ma.truncation, n_scales, n_shifts)
    alpha = ma.ma_coeffs
    width = 2 ** n_scales
    norm = 1.0 / np.sqrt(width)
    G = alpha.shape[0]
    gamma = np.empty((G, n_shifts))
    for k in range(n_shifts):
        s = k * width
        gamma[:, k] = norm * alpha[:, s : s + width].sum(axis=1)
    return gamma


def _coeffs_at_times(grid, coeffs, times):
    """Linear interpolation of (G, ...) coefficient arrays along the grid."""
    times = np.asarray(times, dtype=float)
    if len(grid) == len(times) and np.array_equal(grid, times):
        return coeffs
    pos = np.clip(np.searchsorted(grid, times, side="left"), 1, len(grid) - 1)
    lam = np.clip((times - grid[pos - 1]) / (grid[pos] - grid[pos - 1]), 0.0, 1.0)
    shape = (len(times),) + (1,) * (coeffs.ndim - 1)
    lam = lam.reshape(shape)
    return (1 - lam) * coeffs[pos - 1] + lam * coeffs[pos]


def _lagged(values: np.ndarray, lag: int) -> np.ndarray:
    if lag == 0:
        return values
    return np.concatenate([np.full(lag, np.nan), values[:-lag]])


def scale_components(
    beta: np.ndarray,
    detail_shocks: np.ndarray,
    grid: np.ndarray,
    innovation_times: np.ndarray,
) -> np.ndarray:
    """Orthogonal persistence components ``x[scale-1, t]``.

    The responses are evaluated at each observation's own rescaled time; a
    component is NaN wherever any of its shifted detail shocks is
    unavailable.
    """
    G, n_scales, n_shifts = beta.shape
    n = detail_shocks.shape[1]
    beta_t = _coeffs_at_times(np.asarray(grid, float), beta, innovation_times)
    comps = np.zeros((n_scales, n))
    for j in range(1, n_scales + 1):
        for k in range(n_shifts):
            comps[j - 1] += beta_t[:, j - 1, k] * _lagged(detail_shocks[j - 1], k * 2 ** j)
    return comps


def residual_component(
    ma: MaRepresentation,
    innovations: np.ndarray,
    n_scales: int,
    n_shifts: int,
    innovation_times: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Low-pass aggregate coefficients and the residual series they drive.

    The residual collects everything coarser than the last retained scale;
    it is reported alongside the components but excluded from forecasting
    by the anchored combination mode.
    """
    eps = np.asarray(innovations, dtype=float)
    if innovation_times is None:
        innovation_times = ma.grid[len(ma.grid) - len(eps):]
    gamma = lowpass_gammas(ma, n_scales, n_shifts)
    low = haar_lowpass_shocks(eps, n_scales)
    series = _assemble_residual(gamma, low, ma.grid, innovation_times, n_scales)
    return gamma, series


def _assemble_residual(gamma, lowpass_shocks, grid, innovation_times, n_scales):
    G, n_shifts = gamma.shape
    gamma_t = _coeffs_at_times(np.asarray(grid, float), gamma, innovation_times)
    out = np.zeros(len(lowpass_shocks))
    for k in range(n_shifts):
        out += gamma_t[:, k] * _lagged(lowpass_shocks, k * 2 ** n_scales)
    return out


def persistence_ratios(
    beta: np.ndarray,
    grid: np.ndarray,
    k_ref: int = 1,
) -> PersistenceRatios:
    """Normalised magnitude share of each scale at shift ``k_ref``.

    Magnitudes are taken in absolute value so shares live in [0, 1]; a
    time slice whose responses are all zero is emitted as NaN.
    """
    G, n_scales, n_shifts = beta.shape
    if not 0 <= k_ref < n_shifts:
        raise DomainError(f"k_ref={k_ref} out of range [0, {n_shifts})")
    mags = np.abs(beta[:, :, k_ref])
    denom = mags.sum(axis=1)
    ratios = np.full((G, n_scales), np.nan)
    ok = denom > 0
    ratios[ok] = mags[ok] / denom[ok, None]
    return PersistenceRatios(grid=np.asarray(grid, float), ratios=ratios, k_ref=k_ref)


def decompose(
    ma: MaRepresentation,
    innovations: np.ndarray,
    n_scales: int,
    n_shifts: Optional[int] = None,
    innovation_times: Optional[np.ndarray] = None,
) -> ScaleDecomposition:
    """Run the full decomposition against an MA representation.

    ``innovation_times`` defaults to the trailing grid points, which is the
    correct alignment when the grid holds every observation's rescaled time
    and the innovations start after the AR warm-up.
    """
    eps = np.asarray(innovations, dtype=float)
    if n_shifts is None:
        n_shifts = default_n_shifts(ma.truncation, n_scales)
    if innovation_times is None:
        if len(eps) > len(ma.grid):
            raise DomainError(
                "innovation_times must be given when innovations outnumber grid points"
            )
        innovation_times = ma.grid[len(ma.grid) - len(eps):]
    beta = scale_betas(ma, n_scales, n_shifts)
    details = haar_detail_shocks(eps, n_scales)
    low = haar_lowpass_shocks(eps, n_scales)
    comps = scale_components(beta, details, ma.grid, innovation_times)
    gamma, resid = residual_component(ma, eps, n_scales, n_shifts,
                                      innovation_times)
    return ScaleDecomposition(
        n_scales=n_scales,
        n_shifts=n_shifts,
        grid=ma.grid,
        beta=beta,
        gamma=gamma,
        detail_shocks=details,
        lowpass_shocks=low,
        components=comps,
        residual=resid,
        innovations=eps,
        innovation_times=np.asarray(innovation_times, dtype=float),
    )
