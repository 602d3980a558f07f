"""Vector potentials: presets, dyadic smallness functionals, scaling action.

A potential is sampled as real values of shape (n_t+1, n, N, ..., N).  Presets
carry analytic evaluators so solvers can query half-steps and time derivatives
without finite differences; sampled-only potentials fall back to centered
differences in time (one-sided at the endpoints).

The smallness functionals:

  Y0 = ||grad A||_{L1 Linf} + ||A||_{L2 Linf}
       + (sum_l 2^{2l(1+h)} ||A_l||^2_{L1 L^{n/h}})^{1/2}
  Y1 = sum_k 2^{k(n-1)} ||A_k||_{Linf_t L1_x}
  Y1~ = sum_k 2^{k(n-1)/p0} sup_U ||A_k(t, x+Uz)||_{Linf_t L^{p0}_{zbar} L1_{z1}}
  Y2 = sum_k 2^{k(n-1)/2} sup_U ||A_k(t, x+Uz)||_{Linf_t L2_{zbar} L1_{z1}}
       + sum_k 2^{k(n-5)/2} sup_U ||(|d2 A_k| + |dt A_k|)(t, x+Uz)||_{Linf_t L2 L1}
  Y3 = like Y2 with L1_t outer norms and weights 2^{k(n+3)/2}, 2^{k(n-1)/2}

plus the dominating sum

  sum_k [ 2^{k(n-1)} ||A_k||_{Linf L1} + 2^{k(n-3)} ||dt A_k||_{Linf L1}
        + 2^{k(n+1)} ||A_k||_{L1 L1}  + 2^{k(n-1)} ||dt A_k||_{L1 L1} ].

sup over base points and measurable paths is exact at base 0 by translation
invariance of the full-torus mixed norms (see norms module); sup over
rotations is sampled and locally refined.  |d2 A_k| defaults to the Frobenius
norm of the full Hessian tensor ("operator" switches to the spectral norm of
the per-component Hessian, maximized over components).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, SpaceTimeField, fourier_forward, fourier_inverse
from .lp import CutoffPair, band_mask, representable_bands
from .norms import PathMode, time_lq
from .rotate import RotationSampler, rotate_field

__all__ = [
    "VectorPotential",
    "YNormParams",
    "make_potential",
    "y0_norm",
    "y0_components",
    "y1_norm",
    "y1_tilde_norm",
    "y2_norm",
    "y3_norm",
    "y23_report",
    "corollary_norm",
    "rescale_potential",
    "rescale_field",
]

_REALITY_TOL = 1e-12


@dataclass
class VectorPotential:
    """Real vector-valued space-time field with dyadic band caches."""

    grid: Grid
    values: np.ndarray  # (n_t+1, n, N, ..., N) float
    evaluator: object = None  # callable t -> (n, N, ..., N)
    dt_evaluator: object = None
    divergence_free: bool = False
    band_limit: int | None = None  # all spectral mass in bands <= band_limit
    cutoffs: CutoffPair = field(default_factory=CutoffPair)
    _bands: dict = field(default_factory=dict, repr=False)
    _dt_values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        expected = (self.grid.n_steps + 1, self.grid.n) + self.grid.shape
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != {expected}")
        if np.iscomplexobj(self.values):
            if np.max(np.abs(self.values.imag)) > _REALITY_TOL * max(
                np.max(np.abs(self.values.real)), 1.0
            ):
                raise ValueError("potential must be real-valued")
            self.values = np.ascontiguousarray(self.values.real)
        if self.divergence_free:
            div = self.divergence()
            if np.max(np.abs(div)) > 1e-10 * max(np.max(np.abs(self.values)), 1e-30):
                raise ValueError("divergence_free flag set but div A is not ~0")

    # -- evaluation -----------------------------------------------------------

    def at(self, t: float) -> np.ndarray:
        if self.evaluator is not None:
            return self.evaluator(t)
        return self._interp_samples(self.values, t)

    def dt_at(self, t: float) -> np.ndarray:
        if self.dt_evaluator is not None:
            return self.dt_evaluator(t)
        dt = self.grid.dt
        return (self.at(t + dt / 2) - self.at(t - dt / 2)) / dt

    def _interp_samples(self, samples: np.ndarray, t: float) -> np.ndarray:
        """4-point Lagrange interpolation on the uniform time grid."""
        times = self.grid.times
        if t <= times[0]:
            base = 0
        elif t >= times[-1]:
            base = len(times) - 4
        else:
            base = min(max(int(np.floor((t - times[0]) / self.grid.dt)) - 1, 0), len(times) - 4)
        if len(times) < 4:
            idx = min(range(len(times)), key=lambda i: abs(times[i] - t))
            return samples[idx]
        ts = times[base : base + 4]
        out = np.zeros_like(samples[0])
        for i in range(4):
            w = 1.0
            for j in range(4):
                if i != j:
                    w *= (t - ts[j]) / (ts[i] - ts[j])
            out = out + w * samples[base + i]
        return out

    # -- derived fields -------------------------------------------------------

    def time_derivative(self) -> np.ndarray:
        """Sampled dt A, analytic when available, else centered differences."""
        if self._dt_values is not None:
            return self._dt_values
        if self.dt_evaluator is not None:
            out = np.stack([self.dt_evaluator(t) for t in self.grid.times])
        else:
            v, dt = self.values, self.grid.dt
            out = np.empty_like(v)
            out[1:-1] = (v[2:] - v[:-2]) / (2 * dt)
            out[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * dt)
            out[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * dt)
        self._dt_values = out
        return out

    def band(self, k: int) -> np.ndarray:
        """P_k A, real part enforced (round-off imaginary checked)."""
        if k not in self._bands:
            mask = band_mask(self.grid, k, self.cutoffs)
            spec = fourier_forward(self.grid, self.values)
            piece = fourier_inverse(self.grid, spec * mask)
            imag = np.max(np.abs(piece.imag))
            if imag > _REALITY_TOL * max(np.max(np.abs(piece.real)), 1.0):
                raise AssertionError("band projection lost reality")
            self._bands[k] = piece.real
        return self._bands[k]

    def divergence(self) -> np.ndarray:
        spec = fourier_forward(self.grid, self.values)
        div_spec = sum(2j * np.pi * self.grid.xi[j] * spec[:, j] for j in range(self.grid.n))
        return fourier_inverse(self.grid, div_spec).real

    def jacobian(self) -> np.ndarray:
        """(n_t+1, n_deriv, n_comp, spatial) array of d_i A_j."""
        spec = fourier_forward(self.grid, self.values)
        n = self.grid.n
        out = np.empty((self.values.shape[0], n, n) + self.grid.shape)
        for i in range(n):
            d = fourier_inverse(self.grid, 2j * np.pi * self.grid.xi[i] * spec)
            out[:, i] = d.real
        return out

    def hessian_of(self, sampled: np.ndarray) -> np.ndarray:
        """(n_t+1, n, n, n_comp, spatial) of d_i d_j applied to a (t, comp, x) array."""
        spec = fourier_forward(self.grid, sampled)
        n = self.grid.n
        out = np.empty((sampled.shape[0], n, n, n) + self.grid.shape)
        for i in range(n):
            for j in range(n):
                mult = -4 * np.pi**2 * self.grid.xi[i] * self.grid.xi[j]
                out[:, i, j] = fourier_inverse(self.grid, mult * spec).real
        return out

    def band_range(self) -> tuple[int, int]:
        k_min, k_max = representable_bands(self.grid, self.cutoffs)
        if self.band_limit is not None:
            k_max = min(k_max, self.band_limit)
        return k_min, k_max

    def out_of_range_mass(self) -> float:
        """Relative spectral L2 mass outside the representable band window."""
        k_min, k_max = representable_bands(self.grid, self.cutoffs)
        spec = fourier_forward(self.grid, self.values)
        covered = sum(band_mask(self.grid, k, self.cutoffs) for k in range(k_min, k_max + 1))
        total = np.sum(np.abs(spec) ** 2)
        if total == 0:
            return 0.0
        # mean mode belongs to the low residual by convention
        mean_mass = np.sum(np.abs(spec[(Ellipsis,) + (0,) * self.grid.n]) ** 2)
        rest = np.sum(np.abs(spec) ** 2 * (1.0 - covered) ** 2)
        return float(max(rest - mean_mass, 0.0) / total)


@dataclass(frozen=True)
class YNormParams:
    """Exponents and sampling for the smallness functionals.

    h in (0, 1/4); p0 < (n-1)/2 (below n=4 the theorem does not cover Y1~,
    evaluated as a flagged diagnostic).
    """

    h: float = 0.125
    p0: float | None = None
    sampler: RotationSampler | None = None
    path_mode: PathMode = PathMode.PER_TIME_SUP
    hessian_mode: str = "frobenius"

    def __post_init__(self):
        if not (0 < self.h < 0.25):
            raise ValueError("h must lie in (0, 1/4)")
        if self.hessian_mode not in ("frobenius", "operator"):
            raise ValueError("hessian_mode must be 'frobenius' or 'operator'")

    def resolve_p0(self, n: int) -> float:
        p0 = self.p0 if self.p0 is not None else (n - 1) / 2.0 - 0.25
        if p0 >= (n - 1) / 2.0:
            raise ValueError(f"p0 must be < (n-1)/2 = {(n-1)/2}")
        if n < 4:
            warnings.warn(
                f"Y1~ evaluated at n={n}: outside the n>=4 regime, diagnostic only",
                stacklevel=3,
            )
        return p0

    def resolve_sampler(self, n: int) -> RotationSampler:
        return self.sampler if self.sampler is not None else RotationSampler(n, count=12)


# -- presets -------------------------------------------------------------------


def _envelope(T: float):
    """Smooth 1-periodic-in-T profile, 1 at t=0, 0 at T/2; analytic derivative."""

    def env(t):
        return 0.5 * (1.0 + np.cos(2 * np.pi * t / T))

    def denv(t):
        return -np.pi / T * np.sin(2 * np.pi * t / T)

    return env, denv


def make_potential(
    preset: str,
    eps: float,
    grid: Grid,
    seed: int = 0,
    width: float | None = None,
    center: tuple | None = None,
    speed: tuple | None = None,
    k_cap: int | None = None,
    single_band: int | None = None,
    divergence_free: bool = False,
) -> VectorPotential:
    """Construct a test potential; all presets are analytic in time.

    presets: 'gauss_bump', 'traveling_bump', 'divfree_curl', 'low_band'.
    eps scales the amplitude (every functional is 1-homogeneous in it).
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    n = grid.n
    w = width if width is not None else grid.L / 12.0
    if w < 4 * grid.dx:
        raise ValueError(f"preset width {w} unresolvable: need >= 4*dx = {4*grid.dx}")
    c = np.asarray(center if center is not None else (grid.L / 2.0,) * n, dtype=float)
    env, denv = _envelope(grid.T)
    meshes = grid.spatial_meshes()

    if preset == "gauss_bump":
        rng = np.random.default_rng(np.random.SeedSequence((seed, 101)))
        v = rng.normal(size=n)
        v /= np.linalg.norm(v)
        bump = np.exp(-sum((m - ci) ** 2 for m, ci in zip(meshes, c)) / w**2)

        def evaluator(t, _b=bump, _v=v):
            return eps * env(t) * _v[(slice(None),) + (None,) * n] * _b[None]

        def dt_evaluator(t, _b=bump, _v=v):
            return eps * denv(t) * _v[(slice(None),) + (None,) * n] * _b[None]

    elif preset == "traveling_bump":
        rng = np.random.default_rng(np.random.SeedSequence((seed, 102)))
        v = rng.normal(size=n)
        v /= np.linalg.norm(v)
        s = np.asarray(speed if speed is not None else (grid.L / (8 * grid.T),) * n, dtype=float)

        def evaluator(t, _v=v, _s=s):
            r2 = sum((m - ci - si * t) ** 2 for m, ci, si in zip(meshes, c, _s))
            return eps * _v[(slice(None),) + (None,) * n] * np.exp(-r2 / w**2)[None]

        def dt_evaluator(t, _v=v, _s=s):
            r2 = sum((m - ci - si * t) ** 2 for m, ci, si in zip(meshes, c, _s))
            drift = sum(
                2.0 * si * (m - ci - si * t) for m, ci, si in zip(meshes, c, _s)
            )
            return eps * _v[(slice(None),) + (None,) * n] * (np.exp(-r2 / w**2) * drift / w**2)[None]

    elif preset == "divfree_curl":
        if n == 1:
            raise ValueError("curl preset needs n >= 2")
        r2 = sum((m - ci) ** 2 for m, ci in zip(meshes, c))
        psi = np.exp(-r2 / w**2)
        dpsi = [-2.0 * (m - ci) / w**2 * psi for m, ci in zip(meshes, c)]
        if n == 2:
            comps = np.stack([-dpsi[1], dpsi[0]])
        else:
            comps = np.stack([dpsi[1], -dpsi[0], np.zeros_like(psi)])

        def evaluator(t, _c=comps):
            return eps * env(t) * _c

        def dt_evaluator(t, _c=comps):
            return eps * denv(t) * _c

        divergence_free = True

    elif preset == "low_band":
        if k_cap is None and single_band is None:
            raise ValueError("low_band preset needs k_cap or single_band")
        cpair = CutoffPair()
        rng = np.random.default_rng(np.random.SeedSequence((seed, 103)))
        if single_band is not None:
            # strictly inside the plateau of phi(2^-k .): the piece IS the band
            lo = (2.0 - cpair.glue_width) * 2.0 ** (single_band - 1)
            hi = (1.0 + cpair.glue_width) * 2.0**single_band
            sel = (grid.xi_norm > lo) & (grid.xi_norm < hi)
            cap = single_band
        else:
            sel = (grid.xi_norm <= (1.0 + cpair.glue_width) * 2.0**k_cap) & (grid.xi_norm > 0)
            cap = k_cap
        if not np.any(sel):
            raise ValueError("no lattice modes in the requested band window")
        spec = np.zeros((n,) + grid.shape, dtype=complex)
        coeffs = rng.normal(size=(n, int(sel.sum()))) + 1j * rng.normal(size=(n, int(sel.sum())))
        spec[:, sel] = coeffs
        if divergence_free and n >= 2:
            xi = grid.xi
            dot = sum(xi[j] * spec[j] for j in range(n))
            xi2 = np.where(grid.xi_norm > 0, grid.xi_norm**2, 1.0)
            for j in range(n):
                spec[j] -= xi[j] * dot / xi2
        # Hermitian symmetrization for a real field
        half = fourier_inverse(grid, spec)
        static = half.real + half.imag
        static /= max(np.max(np.abs(static)), 1e-30)

        def evaluator(t, _s=static):
            return eps * env(t) * _s

        def dt_evaluator(t, _s=static):
            return eps * denv(t) * _s

        pot = VectorPotential(
            grid,
            np.stack([evaluator(t) for t in grid.times]),
            evaluator=evaluator,
            dt_evaluator=dt_evaluator,
            divergence_free=False,
            band_limit=cap,
        )
        if divergence_free:
            pot.divergence_free = True
        return pot

    else:
        raise ValueError(f"unknown preset '{preset}'")

    values = np.stack([evaluator(t) for t in grid.times])
    return VectorPotential(
        grid,
        values,
        evaluator=evaluator,
        dt_evaluator=dt_evaluator,
        divergence_free=divergence_free,
    )


# -- scalar reductions ---------------------------------------------------------


def _linf_x(grid: Grid, arr: np.ndarray) -> np.ndarray:
    axes = tuple(range(-grid.n, 0))
    return np.max(np.abs(arr), axis=axes)


def _l1_x(grid: Grid, arr: np.ndarray) -> np.ndarray:
    axes = tuple(range(-grid.n, 0))
    return np.sum(np.abs(arr), axis=axes) * grid.dx**grid.n


def _lp_x(grid: Grid, arr: np.ndarray, p: float) -> np.ndarray:
    axes = tuple(range(-grid.n, 0))
    return (np.sum(np.abs(arr) ** p, axis=axes) * grid.dx**grid.n) ** (1.0 / p)


def _vec_mag(arr: np.ndarray) -> np.ndarray:
    """Euclidean magnitude over the component axis (axis 1 of (t, comp, x))."""
    return np.sqrt(np.sum(arr**2, axis=1))


def _mixed_zbar_z1(grid: Grid, slices: np.ndarray, p_outer: float) -> np.ndarray:
    """Per-slice L^{p_outer}_{z_2..z_n} L^1_{z_1} of a (t, spatial) array."""
    inner = np.sum(np.abs(slices), axis=-grid.n) * grid.dx
    if grid.n == 1:
        return inner
    axes = tuple(range(-(grid.n - 1), 0))
    if np.isinf(p_outer):
        return np.max(inner, axis=axes)
    return (np.sum(inner**p_outer, axis=axes) * grid.dx ** (grid.n - 1)) ** (1.0 / p_outer)


def _band_mass_warn(A: VectorPotential, label: str):
    mass = A.out_of_range_mass()
    if mass > 0.01:
        warnings.warn(
            f"{label}: {mass:.2%} of spectral mass outside the representable band window",
            stacklevel=3,
        )


# -- Y0, Y1 --------------------------------------------------------------------


def y0_components(A: VectorPotential, params: YNormParams | None = None) -> dict:
    params = params or YNormParams()
    grid = A.grid
    _band_mass_warn(A, "y0_norm")
    jac = A.jacobian()
    grad_mag = np.sqrt(np.sum(jac**2, axis=(1, 2)))
    grad_term = time_lq(grid.times, _linf_x(grid, grad_mag), 1.0)
    a_term = time_lq(grid.times, _linf_x(grid, _vec_mag(A.values)), 2.0)
    k_min, k_max = A.band_range()
    p = grid.n / params.h
    dyadic_sq = 0.0
    per_band = {}
    for k in range(k_min, k_max + 1):
        piece = _vec_mag(A.band(k))
        v = time_lq(grid.times, _lp_x(grid, piece, p), 1.0)
        per_band[k] = v
        dyadic_sq += 2.0 ** (2 * k * (1 + params.h)) * v**2
    return {
        "grad_l1_linf": grad_term,
        "a_l2_linf": a_term,
        "dyadic_l1_lnh": float(np.sqrt(dyadic_sq)),
        "dyadic_per_band": per_band,
    }


def y0_norm(A: VectorPotential, params: YNormParams | None = None) -> float:
    c = y0_components(A, params)
    return c["grad_l1_linf"] + c["a_l2_linf"] + c["dyadic_l1_lnh"]


def y1_norm(A: VectorPotential) -> float:
    grid = A.grid
    _band_mass_warn(A, "y1_norm")
    k_min, k_max = A.band_range()
    total = 0.0
    for k in range(k_min, k_max + 1):
        piece = _vec_mag(A.band(k))
        total += 2.0 ** (k * (grid.n - 1)) * float(np.max(_l1_x(grid, piece)))
    return total


def y1_tilde_norm(A: VectorPotential, params: YNormParams | None = None) -> float:
    params = params or YNormParams()
    grid = A.grid
    p0 = params.resolve_p0(grid.n)
    sampler = params.resolve_sampler(grid.n)
    _band_mass_warn(A, "y1_tilde_norm")
    k_min, k_max = A.band_range()
    total = 0.0
    for k in range(k_min, k_max + 1):
        comps = A.band(k)
        best = 0.0
        for U in sampler.samples():
            rot = rotate_field(grid, comps, U)
            mag = np.sqrt(np.sum(np.abs(rot) ** 2, axis=1))
            val = float(np.max(_mixed_zbar_z1(grid, mag, p0)))
            best = max(best, val)
        total += 2.0 ** (k * (grid.n - 1) / p0) * best
    return total


# -- Y2 / Y3 -------------------------------------------------------------------


def _derivative_magnitude(A: VectorPotential, k: int, mode: str) -> np.ndarray:
    """|d2 A_k| + |dt A_k| sampled on (t, x)."""
    band = A.band(k)
    hess = A.hessian_of(band)  # (t, i, j, comp, x)
    if mode == "frobenius":
        h_mag = np.sqrt(np.sum(hess**2, axis=(1, 2, 3)))
    else:
        # spectral norm of the per-component Hessian, max over components
        t_ax, n = hess.shape[0], A.grid.n
        mats = np.moveaxis(hess, (1, 2, 3), (-2, -1, 1))  # (t, comp, x..., i, j)
        sv = np.linalg.svd(mats, compute_uv=False)[..., 0]
        h_mag = np.max(sv, axis=1)
        assert h_mag.shape == (t_ax,) + A.grid.shape
    dt_band = fourier_inverse(
        A.grid, fourier_forward(A.grid, A.time_derivative()) * band_mask(A.grid, k, A.cutoffs)
    ).real
    return h_mag + _vec_mag(dt_band)


def _rotated_stats(A: VectorPotential, k: int, U: np.ndarray, mode: str) -> dict:
    """The four mixed-norm statistics of band k under one rotation."""
    grid = A.grid
    band = A.band(k)
    rot = rotate_field(grid, band, U)
    mag = np.sqrt(np.sum(np.abs(rot) ** 2, axis=1))
    a_series = _mixed_zbar_z1(grid, mag, 2.0)
    d_field = _derivative_magnitude(A, k, mode)
    d_rot = np.abs(rotate_field(grid, d_field, U))
    d_series = _mixed_zbar_z1(grid, d_rot, 2.0)
    return {
        "a_linf_t": float(np.max(a_series)),
        "a_l1_t": time_lq(grid.times, a_series, 1.0),
        "d_linf_t": float(np.max(d_series)),
        "d_l1_t": time_lq(grid.times, d_series, 1.0),
    }


def y23_report(A: VectorPotential, params: YNormParams | None = None) -> dict:
    """Per-band rotation-maximized statistics feeding both Y2 and Y3."""
    params = params or YNormParams()
    grid = A.grid
    sampler = params.resolve_sampler(grid.n)
    _band_mass_warn(A, "y2/y3")
    if grid.dt > 0.25 * grid.T:
        warnings.warn("time grid very coarse for dt A: finite-difference error may exceed 5%",
                      stacklevel=3)
    k_min, k_max = A.band_range()
    report = {}
    for k in range(k_min, k_max + 1):
        best = None
        for U in sampler.samples():
            stats = _rotated_stats(A, k, U, params.hessian_mode)
            if best is None:
                best = {key: val for key, val in stats.items()}
            else:
                for key, val in stats.items():
                    best[key] = max(best[key], val)
        report[k] = best
    return report


def y2_norm(A: VectorPotential, params: YNormParams | None = None) -> float:
    rep = y23_report(A, params)
    n = A.grid.n
    return sum(
        2.0 ** (k * (n - 1) / 2.0) * s["a_linf_t"] + 2.0 ** (k * (n - 5) / 2.0) * s["d_linf_t"]
        for k, s in rep.items()
    )


def y3_norm(A: VectorPotential, params: YNormParams | None = None) -> float:
    rep = y23_report(A, params)
    n = A.grid.n
    return sum(
        2.0 ** (k * (n + 3) / 2.0) * s["a_l1_t"] + 2.0 ** (k * (n - 1) / 2.0) * s["d_l1_t"]
        for k, s in rep.items()
    )


def corollary_norm(A: VectorPotential) -> float:
    """Bernstein-dominating sum controlling Y0 .. Y3 up to a constant."""
    grid = A.grid
    n = grid.n
    _band_mass_warn(A, "corollary_norm")
    dt_A = A.time_derivative()
    k_min, k_max = A.band_range()
    total = 0.0
    for k in range(k_min, k_max + 1):
        a_mag = _vec_mag(A.band(k))
        dt_band = fourier_inverse(
            grid, fourier_forward(grid, dt_A) * band_mask(grid, k, A.cutoffs)
        ).real
        d_mag = _vec_mag(dt_band)
        a_l1 = _l1_x(grid, a_mag)
        d_l1 = _l1_x(grid, d_mag)
        total += (
            2.0 ** (k * (n - 1)) * float(np.max(a_l1))
            + 2.0 ** (k * (n - 3)) * float(np.max(d_l1))
            + 2.0 ** (k * (n + 1)) * time_lq(grid.times, a_l1, 1.0)
            + 2.0 ** (k * (n - 1)) * time_lq(grid.times, d_l1, 1.0)
        )
    return total


# -- scaling action -------------------------------------------------------------


def _check_pow2(lam: float) -> None:
    l2 = np.log2(lam)
    if abs(l2 - round(l2)) > 1e-12:
        raise ValueError("scaling factor must be a power of two for lattice compatibility")


def rescale_potential(A: VectorPotential, lam: float) -> VectorPotential:
    """A -> lam A(lam^2 t, lam x) on the compatible grid (L/lam, dt/lam^2, T/lam^2).

    Exact on the lattice: rescaled sample (i, j) equals lam * original (i, j).
    """
    _check_pow2(lam)
    g = A.grid
    new_grid = Grid(g.n, g.N, g.L / lam, g.dt / lam**2, g.T / lam**2)
    ev = None
    dtev = None
    if A.evaluator is not None:
        ev = lambda t, _e=A.evaluator: lam * _e(lam**2 * t)
    if A.dt_evaluator is not None:
        dtev = lambda t, _e=A.dt_evaluator: lam**3 * _e(lam**2 * t)
    new_limit = None
    if A.band_limit is not None:
        new_limit = A.band_limit + int(round(np.log2(lam)))
    return VectorPotential(
        new_grid,
        lam * A.values,
        evaluator=ev,
        dt_evaluator=dtev,
        divergence_free=A.divergence_free,
        band_limit=new_limit,
        cutoffs=A.cutoffs,
    )


def rescale_field(u: SpaceTimeField, lam: float, power: float = 0.0) -> SpaceTimeField:
    """u -> lam^power u(lam^2 t, lam x); power=2 is the forcing-term action."""
    _check_pow2(lam)
    g = u.grid
    new_grid = Grid(g.n, g.N, g.L / lam, g.dt / lam**2, g.T / lam**2)
    return SpaceTimeField(new_grid, lam**power * u.values)
