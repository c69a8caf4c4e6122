"""Periodic sampled fields on the box [-L, L]^N and their spectral transforms."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridSpec",
    "Field",
    "SpectralField",
    "SubBox",
    "make_grid",
    "dft_forward",
    "dft_inverse",
    "l2_norm_on_box",
    "hs_norm",
]

# relative slack for closed-interval membership of sample centres
_EDGE_SLACK = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic lattice with ``points`` samples per axis on [-L, L)^N.

    Sample ``j`` sits at ``-L + j*dx``; the point ``+L`` is identified with ``-L``.
    """

    ndim: int
    half_width: float
    points: int

    def __post_init__(self):
        if self.ndim not in (1, 2):
            raise ValueError(f"only 1 or 2 dimensions are supported, got ndim={self.ndim}")
        if self.points < 8 or self.points % 2:
            raise ValueError(f"points per axis must be even and >= 8, got {self.points}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.ndim

    @property
    def kmax(self) -> float:
        """Largest resolvable wavenumber, pi/dx."""
        return np.pi / self.dx

    @property
    def cell_volume(self) -> float:
        return self.dx**self.ndim

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers pi*j/L in FFT order."""
        return 2.0 * np.pi * sfft.fftfreq(self.points, d=self.dx)

    def mesh(self) -> tuple[np.ndarray, ...]:
        return np.meshgrid(*([self.axis] * self.ndim), indexing="ij", sparse=True)

    def kmesh(self) -> tuple[np.ndarray, ...]:
        return np.meshgrid(*([self.wavenumbers] * self.ndim), indexing="ij", sparse=True)

    def k_squared(self) -> np.ndarray:
        return sum(k**2 for k in self.kmesh())

    def radius_squared(self) -> np.ndarray:
        return sum(x**2 for x in self.mesh())

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.shape, dtype=complex))

    def field(self, values) -> "Field":
        return Field(self, np.asarray(values, dtype=complex).reshape(self.shape))

    def index_of(self, x: float) -> int:
        """Index of the sample nearest to coordinate ``x`` (periodic)."""
        return int(np.rint((x + self.half_width) / self.dx)) % self.points


def make_grid(ndim: int, half_width: float, points_per_axis: int) -> GridSpec:
    return GridSpec(int(ndim), float(half_width), int(points_per_axis))


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a function on ``grid``; ``values`` has shape ``grid.shape``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.size != self.grid.points**self.grid.ndim:
            raise ValueError(
                f"field has {values.size} samples, grid expects {self.grid.points ** self.grid.ndim}"
            )
        values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", values)

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values + _values_on(other, self.grid))

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values - _values_on(other, self.grid))

    def __mul__(self, scalar) -> "Field":
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))


def _values_on(other: Field, grid: GridSpec) -> np.ndarray:
    if other.grid != grid:
        raise ValueError("fields live on different grids")
    return other.values


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Unitary DFT coefficients of a field, stored in FFT (unshifted) order."""

    grid: GridSpec
    values: np.ndarray

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))


@dataclass(frozen=True)
class SubBox:
    """Closed axis-aligned box ``[lo_i, hi_i]``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have the same length")
        if any(l > h for l, h in zip(lo, hi)):
            raise ValueError(f"empty box: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, half_width: float, ndim: int) -> "SubBox":
        return cls((-half_width,) * ndim, (half_width,) * ndim)

    @property
    def ndim(self) -> int:
        return len(self.lo)

    def mask(self, grid: GridSpec) -> np.ndarray:
        """Boolean mask of the samples whose centres lie in the box."""
        if self.ndim != grid.ndim:
            raise ValueError(f"box has {self.ndim} axes, grid has {grid.ndim}")
        slack = _EDGE_SLACK * grid.dx
        for lo, hi in zip(self.lo, self.hi):
            if lo < -grid.half_width - slack or hi > grid.half_width + slack:
                raise ValueError(
                    f"box [{lo}, {hi}] is not contained in the grid box "
                    f"[{-grid.half_width}, {grid.half_width}]"
                )
        masks = []
        for ax, lo, hi in zip(grid.mesh(), self.lo, self.hi):
            masks.append((ax >= lo - slack) & (ax <= hi + slack))
        out = masks[0]
        for m in masks[1:]:
            out = out & m
        return np.broadcast_to(out, grid.shape)


def dft_forward(f: Field) -> SpectralField:
    return SpectralField(f.grid, sfft.fftn(f.values, norm="ortho"))


def dft_inverse(F: SpectralField) -> Field:
    return Field(F.grid, sfft.ifftn(F.values, norm="ortho"))


def l2_norm_on_box(f: Field, box: SubBox) -> float:
    mask = box.mask(f.grid)
    return float(np.sqrt(np.sum(np.abs(f.values[mask]) ** 2) * f.grid.cell_volume))


def hs_norm(f: Field, s: float) -> float:
    """Sobolev norm ``||(1+|k|^2)^{s/2} f_hat||`` on the full periodic box."""
    if s < 0:
        raise ValueError(f"Sobolev index must be non-negative, got {s}")
    spec = sfft.fftn(f.values, norm="ortho")
    weight = (1.0 + f.grid.k_squared()) ** s
    return float(np.sqrt(np.sum(weight * np.abs(spec) ** 2) * f.grid.cell_volume))
