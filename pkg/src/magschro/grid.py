"""Periodic box discretization, Fourier transforms, and the exact free propagator.

The box [0, L)^n with N points per axis stands in for R^n; fields of interest
decay below ~1e-10 at the boundary so torus wrap-around is negligible.  The
transform convention is

    fhat(xi) = integral f(x) exp(-2*pi*i x.xi) dx,

discretized as a Riemann sum with weight dx^n, so discrete norms approximate
continuum integrals with no extra factors.  Frequencies live on the dual
lattice (1/L)*{-N/2, ..., N/2-1}^n and are stored unshifted (FFT order);
``Grid.freq_physical`` gives the sorted physical-order view.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "SpaceTimeField",
    "make_grid",
    "fourier_forward",
    "fourier_inverse",
    "free_propagate",
    "free_evolution",
    "gaussian_wavepacket",
    "l2_norm",
]


def _is_power_of_two(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid in n spatial dimensions plus a uniform time grid."""

    n: int
    N: int
    L: float
    dt: float
    T: float

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.n}")
        if not _is_power_of_two(self.N) or self.N < 8:
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if self.L <= 0:
            raise ValueError("box side L must be positive")
        if self.dt <= 0:
            raise ValueError("time step dt must be positive")
        if self.dt > self.T:
            raise ValueError(f"dt={self.dt} exceeds final time T={self.T}")
        nt = self.T / self.dt
        if abs(nt - round(nt)) > 1e-9 * max(1.0, nt):
            raise ValueError("T must be an integer multiple of dt")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @cached_property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def nyquist(self) -> float:
        """Largest representable frequency magnitude per axis, N/(2L)."""
        return self.N / (2.0 * self.L)

    @cached_property
    def x1d(self) -> np.ndarray:
        return np.arange(self.N) * self.dx

    @cached_property
    def freq1d(self) -> np.ndarray:
        """Per-axis frequencies in FFT order (spacing 1/L)."""
        return np.fft.fftfreq(self.N, d=self.dx)

    @cached_property
    def freq_physical(self) -> np.ndarray:
        """Per-axis frequencies sorted to physical order -N/2 .. N/2-1."""
        return np.fft.fftshift(self.freq1d)

    @cached_property
    def xi(self) -> np.ndarray:
        """Frequency vectors, shape (n,) + spatial shape, FFT order."""
        grids = np.meshgrid(*([self.freq1d] * self.n), indexing="ij")
        return np.stack(grids)

    @cached_property
    def xi_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.xi**2, axis=0))

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode vectors xi*L, shape (n,) + spatial shape, FFT order."""
        return np.rint(self.xi * self.L).astype(np.int64)

    def spatial_meshes(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.x1d] * self.n), indexing="ij")

    def compatible(self, other: "Grid") -> bool:
        return (self.n, self.N) == (other.n, other.N) and np.isclose(self.L, other.L)


def make_grid(n: int, N: int, L: float, dt: float, T: float) -> Grid:
    """Build a grid; rejects non-power-of-two N and dt > T."""
    return Grid(n=n, N=N, L=float(L), dt=float(dt), T=float(T))


def fourier_forward(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Riemann-sum discretization of the forward transform (weight dx^n).

    Works on any array whose trailing n axes are the spatial axes.
    """
    axes = tuple(range(-grid.n, 0))
    return np.fft.fftn(values, axes=axes) * grid.dx**grid.n


def fourier_inverse(grid: Grid, spectrum: np.ndarray) -> np.ndarray:
    axes = tuple(range(-grid.n, 0))
    return np.fft.ifftn(spectrum, axes=axes) / grid.dx**grid.n


def l2_norm(grid: Grid, values: np.ndarray) -> float:
    """Discrete L^2 norm over the trailing n spatial axes (all axes for a slice)."""
    axes = tuple(range(-grid.n, 0))
    return float(np.sqrt(np.sum(np.abs(values) ** 2, axis=axes) * grid.dx**grid.n))


def _nyquist_leak_fraction(grid: Grid, spectrum: np.ndarray) -> float:
    total = np.sum(np.abs(spectrum) ** 2)
    if total == 0:
        return 0.0
    near = grid.xi_norm >= 0.9 * grid.nyquist
    return float(np.sum(np.abs(spectrum) ** 2 * near) / total)


def free_propagate(grid: Grid, f: np.ndarray, t: float) -> np.ndarray:
    """Apply the free flow: multiplier exp(-4*pi^2*i*t*|xi|^2) in frequency.

    Unitary in L^2 and a one-parameter group; warns when the input carries
    more than 1e-6 of its spectral mass within 10% of the Nyquist frequency.
    """
    spec = fourier_forward(grid, f)
    leak = _nyquist_leak_fraction(grid, spec)
    if leak > 1e-6:
        warnings.warn(
            f"free_propagate: {leak:.2e} of spectral mass within 10% of Nyquist",
            stacklevel=2,
        )
    phase = np.exp(-4.0 * np.pi**2 * 1j * t * grid.xi_norm**2)
    return fourier_inverse(grid, spec * phase)


@dataclass
class SpaceTimeField:
    """Complex samples u(t_i, x_j) on the grid's uniform time grid.

    values has shape (n_steps+1,) + grid.shape.  The spectral cache holds the
    per-slice transform; treat instances as immutable.
    """

    grid: Grid
    values: np.ndarray
    _spectrum: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        expected = (self.grid.n_steps + 1,) + self.grid.shape
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != {expected}")

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            object.__setattr__(self, "_spectrum", fourier_forward(self.grid, self.values))
        return self._spectrum

    def slice_l2(self) -> np.ndarray:
        """L^2 norm of every time slice."""
        axes = tuple(range(-self.grid.n, 0))
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=axes) * self.grid.dx**self.grid.n)


def free_evolution(grid: Grid, f: np.ndarray) -> SpaceTimeField:
    """Sample the free flow of f on the grid's time grid."""
    spec = fourier_forward(grid, f)
    phases = np.exp(
        -4.0 * np.pi**2 * 1j * grid.times[(...,) + (None,) * grid.n] * grid.xi_norm**2
    )
    values = fourier_inverse(grid, spec * phases)
    return SpaceTimeField(grid, values)


def gaussian_wavepacket(
    grid: Grid,
    center: np.ndarray | tuple | float,
    width: float,
    momentum: np.ndarray | tuple | float = 0.0,
) -> np.ndarray:
    """Unit-L^2 packet exp(-pi|x-c|^2/w^2) * exp(2*pi*i p.(x-c)).

    Rejects widths under 4*dx (under-resolved) and momenta beyond half the
    Nyquist frequency.
    """
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.n,))
    momentum = np.broadcast_to(np.asarray(momentum, dtype=float), (grid.n,))
    if width < 4 * grid.dx:
        raise ValueError(f"width {width} under-resolved: need >= 4*dx = {4*grid.dx}")
    if np.max(np.abs(momentum)) > 0.5 * grid.nyquist:
        raise ValueError("momentum beyond half-Nyquist")
    meshes = grid.spatial_meshes()
    r2 = sum((m - c) ** 2 for m, c in zip(meshes, center))
    phase = sum(2.0 * np.pi * p * (m - c) for m, p, c in zip(meshes, momentum, center))
    f = np.exp(-np.pi * r2 / width**2) * np.exp(1j * phase)
    return f / l2_norm(grid, f)
