"""Argument checks shared by the estimator-style classes."""

from __future__ import annotations

from .lattice import Field, GridSpec


def check_grid(grid) -> GridSpec:
    if not isinstance(grid, GridSpec):
        raise TypeError(f"expected a GridSpec, got {type(grid).__name__}")
    return grid


def check_field(f, grid: GridSpec | None = None) -> Field:
    if not isinstance(f, Field):
        raise TypeError(f"expected a Field, got {type(f).__name__}")
    if grid is not None and f.grid != grid:
        raise ValueError(f"field lives on {f.grid}, expected {grid}")
    return f


def check_positive(name: str, value: float) -> float:
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value
