"""Dyadic cutoffs, band projections, paraproducts, Bernstein ratios, Besov sums.

The radial profile chi is built from the standard exp(-1/x) glue: identically
1 on [0, 1+delta], identically 0 on [2-delta, infinity), smoothly decreasing
in between (delta = glue width).  phi(r) = chi(r) - chi(2r) is supported in
[(1+delta)/2, 2-delta] and the dyadic sums telescope exactly, so the partition
of unity holds to round-off inside the truncation range.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from math import ceil, floor, log2

import numpy as np

from .grid import Grid, fourier_forward, fourier_inverse

__all__ = [
    "CutoffPair",
    "BandDecomposition",
    "build_cutoffs",
    "band_range",
    "representable_bands",
    "project_band",
    "project_leq",
    "project_below",
    "project_fat",
    "paraproduct_split",
    "bernstein_ratio",
    "mixed_bernstein_ratio",
    "besov_l2_norm",
    "sequence_bound_check",
    "spectral_gradient",
]

_DEFAULT_GLUE = 0.125


def _glue(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _smoothstep(x: np.ndarray) -> np.ndarray:
    """C^infinity monotone step: 0 for x<=0, 1 for x>=1."""
    x = np.asarray(x, dtype=float)
    g = _glue(x)
    return g / (g + _glue(1.0 - x))


@dataclass(frozen=True)
class CutoffPair:
    """Radial profile chi and its dyadic difference phi(r)=chi(r)-chi(2r)."""

    glue_width: float = _DEFAULT_GLUE

    def __post_init__(self):
        if not (0 < self.glue_width <= 0.25):
            raise ValueError("glue width must lie in (0, 1/4]")

    def chi(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        d = self.glue_width
        return 1.0 - _smoothstep((r - 1.0 - d) / (1.0 - 2.0 * d))

    def phi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.chi(r) - self.chi(2.0 * r)

    def plateau_bump(self, r, lo_support, lo_one, hi_one, hi_support) -> np.ndarray:
        """Bump that is 0 outside (lo_support, hi_support), 1 on [lo_one, hi_one]."""
        r = np.asarray(r, dtype=float)
        up = _smoothstep((r - lo_support) / (lo_one - lo_support))
        down = 1.0 - _smoothstep((r - hi_one) / (hi_support - hi_one))
        return up * down


def build_cutoffs(glue_width: float = _DEFAULT_GLUE) -> CutoffPair:
    return CutoffPair(glue_width=glue_width)


# -- band bookkeeping ---------------------------------------------------------


def band_range(grid: Grid) -> tuple[int, int]:
    """Conservative dyadic window [log2(4/L), log2(Nyquist/4)]."""
    return ceil(log2(4.0 / grid.L)), floor(log2(grid.nyquist / 4.0))


def representable_bands(grid: Grid, cutoffs: CutoffPair | None = None) -> tuple[int, int]:
    """Widest band window whose masks are nonempty and inside Nyquist."""
    c = cutoffs or CutoffPair()
    hi = 2.0 - c.glue_width
    k_min = ceil(log2(1.0 / (grid.L * hi)))
    k_max = floor(log2(grid.nyquist / hi))
    return k_min, k_max


def _check_band(grid: Grid, k: int, cutoffs: CutoffPair):
    k_min, k_max = representable_bands(grid, cutoffs)
    if not (k_min <= k <= k_max):
        raise ValueError(
            f"band k={k} outside representable range [{k_min}, {k_max}] "
            f"for N={grid.N}, L={grid.L}"
        )


@lru_cache(maxsize=256)
def _band_mask_cached(grid: Grid, k: int, glue_width: float) -> np.ndarray:
    c = CutoffPair(glue_width)
    return c.phi(grid.xi_norm * 2.0**-k)


def band_mask(grid: Grid, k: int, cutoffs: CutoffPair | None = None) -> np.ndarray:
    c = cutoffs or CutoffPair()
    return _band_mask_cached(grid, k, c.glue_width)


@lru_cache(maxsize=256)
def _leq_mask_cached(grid: Grid, k: int, glue_width: float) -> np.ndarray:
    c = CutoffPair(glue_width)
    return c.chi(grid.xi_norm * 2.0**-k)


def _apply_mask(grid: Grid, values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return fourier_inverse(grid, fourier_forward(grid, values) * mask)


def project_band(grid: Grid, values: np.ndarray, k: int, cutoffs: CutoffPair | None = None) -> np.ndarray:
    """P_k: multiplier phi(2^-k |xi|).  Rejects k outside the representable range."""
    c = cutoffs or CutoffPair()
    _check_band(grid, k, c)
    return _apply_mask(grid, values, band_mask(grid, k, c))


def project_leq(grid: Grid, values: np.ndarray, k: int, cutoffs: CutoffPair | None = None) -> np.ndarray:
    """P_{<=k}: multiplier chi(2^-k |xi|) (includes the mean)."""
    c = cutoffs or CutoffPair()
    return _apply_mask(grid, values, _leq_mask_cached(grid, k, c.glue_width))


def project_below(grid: Grid, values: np.ndarray, k: int, cutoffs: CutoffPair | None = None) -> np.ndarray:
    """P_{<k} = P_{<=k-1}."""
    return project_leq(grid, values, k - 1, cutoffs)


def project_fat(grid: Grid, values: np.ndarray, k: int, cutoffs: CutoffPair | None = None) -> np.ndarray:
    """P~_k = P_{k-1} + P_k + P_{k+1}; identity on the support of P_k's mask."""
    c = cutoffs or CutoffPair()
    mask = (
        band_mask(grid, k - 1, c) + band_mask(grid, k, c) + band_mask(grid, k + 1, c)
    )
    return _apply_mask(grid, values, mask)


@dataclass
class BandDecomposition:
    """Band pieces P_k f over [k_min, k_max] plus the low/high residuals."""

    grid: Grid
    source: np.ndarray
    k_min: int
    k_max: int
    pieces: dict[int, np.ndarray]
    low_residual: np.ndarray
    high_residual: np.ndarray

    @classmethod
    def compute(
        cls,
        grid: Grid,
        values: np.ndarray,
        k_range: tuple[int, int] | None = None,
        cutoffs: CutoffPair | None = None,
    ) -> "BandDecomposition":
        c = cutoffs or CutoffPair()
        k_min, k_max = k_range if k_range is not None else band_range(grid)
        pieces = {k: _apply_mask(grid, values, band_mask(grid, k, c)) for k in range(k_min, k_max + 1)}
        low = project_below(grid, values, k_min, c)
        high = values - project_leq(grid, values, k_max, c)
        return cls(grid, values, k_min, k_max, pieces, low, high)

    def reconstruct(self) -> np.ndarray:
        out = self.low_residual + self.high_residual
        for p in self.pieces.values():
            out = out + p
        return out


# -- paraproducts -------------------------------------------------------------


def paraproduct_split(
    grid: Grid,
    f: np.ndarray,
    g: np.ndarray,
    k: int,
    cutoffs: CutoffPair | None = None,
) -> dict[str, np.ndarray]:
    """Exact four-group tiling of P_k(fg) by frequency interaction type.

    low_high   = f_{<=k-4} g_k
    commutator = [P_k, f_{<=k-4}] g  (= P_k(f_{<=k-4} g) - f_{<=k-4} P_k g)
    high_high  = P_k(f_{>k-4} g_{>k-4})
    high_low   = P_k(f_{>k-4} g_{<=k-4})

    The groups sum to P_k(fg) identically (up to FFT round-off).
    """
    c = cutoffs or CutoffPair()
    f_low = project_leq(grid, f, k - 4, c)
    f_high = f - f_low
    g_low = project_leq(grid, g, k - 4, c)
    g_high = g - g_low
    g_k = project_band(grid, g, k, c)
    low_high = f_low * g_k
    commutator = project_band(grid, f_low * g, k, c) - low_high
    high_high = project_band(grid, f_high * g_high, k, c)
    high_low = project_band(grid, f_high * g_low, k, c)
    return {
        "low_high": low_high,
        "commutator": commutator,
        "high_high": high_high,
        "high_low": high_low,
    }


# -- Bernstein ratios ---------------------------------------------------------


def _lp_norm(grid: Grid, values: np.ndarray, p: float) -> float:
    a = np.abs(values)
    if np.isinf(p):
        return float(np.max(a))
    return float((np.sum(a**p) * grid.dx**grid.n) ** (1.0 / p))


def bernstein_ratio(
    grid: Grid,
    f: np.ndarray,
    Q: list[tuple[float, float]],
    p: float,
    q: float,
) -> float:
    """||f||_q / (|Q|^{1/p-1/q} ||f||_p) for f Fourier-supported in the box Q.

    Q is a list of per-axis frequency intervals.  Rejects spectrum leakage
    outside Q above 1e-8 (relative L^2 mass).
    """
    if not p <= q:
        raise ValueError("need p <= q")
    spec = fourier_forward(grid, f)
    inside = np.ones(grid.shape, dtype=bool)
    for axis, (lo, hi) in enumerate(Q):
        xi_axis = grid.xi[axis]
        inside &= (xi_axis >= lo) & (xi_axis <= hi)
    total = np.sum(np.abs(spec) ** 2)
    leak = np.sum(np.abs(spec) ** 2 * ~inside) / total if total > 0 else 0.0
    if leak > 1e-8:
        raise ValueError(f"spectrum leaks outside Q: relative mass {leak:.2e}")
    vol = float(np.prod([hi - lo for lo, hi in Q]))
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    inv_q = 0.0 if np.isinf(q) else 1.0 / q
    return _lp_norm(grid, f, q) / (vol ** (inv_p - inv_q) * _lp_norm(grid, f, p))


def _mixed_spatial_norm(grid: Grid, values: np.ndarray, p_outer: float, r_inner: float) -> float:
    """L^{p_outer}_{x_2..x_n} L^{r_inner}_{x_1} of a spatial array."""
    a = np.abs(values)
    if np.isinf(r_inner):
        inner = np.max(a, axis=0)
    else:
        inner = (np.sum(a**r_inner, axis=0) * grid.dx) ** (1.0 / r_inner)
    if grid.n == 1:
        return float(inner)
    if np.isinf(p_outer):
        return float(np.max(inner))
    return float((np.sum(inner**p_outer) * grid.dx ** (grid.n - 1)) ** (1.0 / p_outer))


def mixed_bernstein_ratio(
    grid: Grid,
    f: np.ndarray,
    k: int,
    p1: float,
    p2: float,
    r: float,
) -> float:
    """Annulus Bernstein ratio in mixed norms, normalized by 2^{k(n-1)(1/p2-1/p1)}.

    Requires p1 > p2 >= r and f supported in the band-k annulus.
    """
    if not (p1 > p2 >= r):
        raise ValueError("need p1 > p2 >= r")
    spec = fourier_forward(grid, f)
    c = CutoffPair()
    hi = 2.0 - c.glue_width
    annulus = (grid.xi_norm >= (1.0 + c.glue_width) * 2.0 ** (k - 1)) & (
        grid.xi_norm <= hi * 2.0**k
    )
    total = np.sum(np.abs(spec) ** 2)
    leak = np.sum(np.abs(spec) ** 2 * ~annulus) / total if total > 0 else 0.0
    if leak > 1e-8:
        raise ValueError(f"spectrum leaks outside annulus 2^{k}: {leak:.2e}")
    inv1 = 0.0 if np.isinf(p1) else 1.0 / p1
    inv2 = 0.0 if np.isinf(p2) else 1.0 / p2
    weight = 2.0 ** (k * (grid.n - 1) * (inv2 - inv1))
    num = _mixed_spatial_norm(grid, f, p1, r)
    den = _mixed_spatial_norm(grid, f, p2, r)
    return num / (weight * den)


# -- Besov sums ---------------------------------------------------------------


def besov_l2_norm(
    grid: Grid,
    field,
    s: float,
    norm_functional,
    k_range: tuple[int, int] | None = None,
    cutoffs: CutoffPair | None = None,
    residual_warn: float = 0.01,
) -> float:
    """(sum_k 2^{2ks} ||P_k field||^2)^{1/2} for a supplied per-band functional.

    ``field`` is any array with trailing spatial axes; ``norm_functional``
    maps a band piece to a nonnegative scalar.  Warns when the below-range
    residual carries more than ``residual_warn`` of the chosen norm.
    """
    c = cutoffs or CutoffPair()
    k_min, k_max = k_range if k_range is not None else representable_bands(grid, c)
    band_values = {}
    for k in range(k_min, k_max + 1):
        piece = _apply_mask(grid, field, band_mask(grid, k, c))
        band_values[k] = float(norm_functional(piece))
    total = sum(2.0 ** (2 * k * s) * v**2 for k, v in band_values.items())
    residual = project_below(grid, field, k_min, c)
    res_norm = float(norm_functional(residual))
    ref = float(norm_functional(field))
    if ref > 0 and res_norm > residual_warn * ref:
        warnings.warn(
            f"besov_l2_norm: residual band P_<{k_min} carries {res_norm:.3e} "
            f"of the field norm {ref:.3e}",
            stacklevel=2,
        )
    return float(np.sqrt(total))


# -- sequence lemma -----------------------------------------------------------


def sequence_bound_check(a: np.ndarray, b: np.ndarray, h: float) -> tuple[float, float]:
    """lhs = (sum_k 2^{2hk} (sum_{l>=k-2} 2^{-hl} a_l b_l)^2)^{1/2} and its ratio
    to ||a||_inf ||b||_2.

    Sequences are indexed l = 0..m-1; the k-sum is truncated once the
    geometric weight is below 1e-16 relative.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = len(a)
    if len(b) != m:
        raise ValueError("sequences must share length")
    pad = ceil(27.0 / h)
    ks = np.arange(-pad, m + 3)
    terms = 2.0 ** (-h * np.arange(m)) * a * b
    inner = np.array([terms[max(kk - 2, 0):].sum() for kk in ks])
    lhs = float(np.sqrt(np.sum(2.0 ** (2 * h * ks) * inner**2)))
    denom = float(np.max(np.abs(a)) * np.sqrt(np.sum(b**2)))
    ratio = lhs / denom if denom > 0 else 0.0
    return lhs, ratio


# -- spectral derivatives -----------------------------------------------------


def spectral_gradient(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Gradient via multipliers 2*pi*i*xi_j; output gains a leading axis of size n."""
    spec = fourier_forward(grid, values)
    out = np.empty((grid.n,) + values.shape, dtype=complex)
    for j in range(grid.n):
        out[j] = fourier_inverse(grid, 2j * np.pi * grid.xi[j] * spec)
    return out
