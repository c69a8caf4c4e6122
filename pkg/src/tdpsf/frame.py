"""Gaussian windowed Fourier (Gabor) frames on periodic lattices.

A framelet is ``g_ab(x) = g(x - a*xs) exp(i b*ks.(x - a*xs))`` with the
unit-norm Gaussian window ``g``.  Coefficients are taken against the canonical
dual window ``gamma = S^{-1} g``, so that ``f = sum_ab <f, gamma_ab> g_ab``.

All transforms act axis by axis.  Along one axis the analysis at a lattice
position is: multiply by the shifted (truncated) dual window, fold the product
onto ``P = q*p`` bins and take a ``P``-point FFT; with ``xs = p*dx`` this
yields exactly the frequency lattice ``ks = 2*pi/(P*dx)`` even when the window
is wider than ``2*pi/ks``.  Both gather and overlap-add are stored as sparse
matrices so a transform is one sparse product plus a batched FFT per axis.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_field, check_grid
from .lattice import Field, GridSpec

__all__ = [
    "FrameParams",
    "DualWindow",
    "DualWindowError",
    "FrameletIndex",
    "PhaseSpaceLayout",
    "CoefficientSet",
    "FrameletSet",
    "WFTOperator",
    "GaborFrame",
    "gaussian_window",
    "compute_dual_window",
    "dual_decay_slope",
    "frame_operator_bounds",
    "analyze_wft",
    "synthesize",
    "project_phase_space",
]

log = logging.getLogger(__name__)

# the synthesis window is cut where g < _WINDOW_CUT * max g
_WINDOW_CUT = 1e-18


class DualWindowError(RuntimeError):
    pass


@dataclass(frozen=True)
class FrameParams:
    """Window width ``sigma`` and lattice spacings with ``xs*ks = 2*pi/q``."""

    sigma: float
    xs: float
    ks: float
    q: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.q <= 0 or self.q % 2:
            raise ValueError(f"oversampling q must be a positive even integer, got {self.q}")
        if not (self.xs > 0 and self.ks > 0):
            raise ValueError(f"lattice spacings must be positive, got xs={self.xs}, ks={self.ks}")
        if self.xs * self.ks >= 2 * np.pi:
            raise ValueError(f"frame condition xs*ks < 2*pi violated (xs*ks={self.xs * self.ks})")
        if not math.isclose(self.xs * self.ks * self.q, 2 * np.pi, rel_tol=1e-9):
            raise ValueError(
                f"xs*ks must equal 2*pi/q: xs={self.xs}, ks={self.ks}, q={self.q} "
                f"(xs*ks*q = {self.xs * self.ks * self.q})"
            )

    @classmethod
    def from_spacing(cls, sigma: float, xs: float | None = None, ks: float | None = None,
                     q: int | None = None) -> "FrameParams":
        """Build parameters from any two of ``xs``, ``ks``, ``q``."""
        given = sum(v is not None for v in (xs, ks, q))
        if given < 2:
            raise ValueError("need two of xs, ks, q")
        if q is None:
            q_real = 2 * np.pi / (xs * ks)
            q = int(round(q_real))
            if not math.isclose(q_real, q, rel_tol=1e-6) or q % 2:
                raise ValueError(f"xs*ks = {xs * ks} does not give an even integer q (2*pi/(xs*ks) = {q_real})")
            ks = 2 * np.pi / (q * xs)
        elif xs is None:
            xs = 2 * np.pi / (q * ks)
        elif ks is None:
            ks = 2 * np.pi / (q * xs)
        return cls(float(sigma), float(xs), float(ks), int(q))

    def snapped(self, grid: GridSpec) -> "FrameParams":
        """Commensurate copy: ``ks = 2*pi/(q*p*dx)`` and ``xs = p*dx`` for integer ``p``."""
        dx = grid.dx
        p = max(1, int(round(2 * np.pi / (self.ks * dx * self.q))))
        if grid.points % p:
            raise ValueError(
                f"position step of {p} samples (xs={p * dx}) does not divide the {grid.points}-point grid"
            )
        return replace(self, xs=p * dx, ks=2 * np.pi / (self.q * p * dx))

    def steps(self, grid: GridSpec) -> tuple[int, int]:
        """(position step p, bins P) in samples; requires a commensurate lattice."""
        p = self.xs / grid.dx
        P = 2 * np.pi / (self.ks * grid.dx)
        if not (math.isclose(p, round(p), rel_tol=1e-9) and math.isclose(P, round(P), rel_tol=1e-9)):
            raise ValueError(
                f"frame lattice (xs={self.xs}, ks={self.ks}) is not commensurate with dx={grid.dx}; "
                "use FrameParams.snapped(grid)"
            )
        return int(round(p)), int(round(P))

    @property
    def decay_rate(self) -> float:
        """Dual-window decay rate ``xs*q/(8*pi*sigma)``."""
        return self.xs * self.q / (8 * np.pi * self.sigma)


def _window_profile(sigma: float, dx: float, cut: float = _WINDOW_CUT) -> tuple[np.ndarray, np.ndarray]:
    radius = int(math.ceil(sigma * math.sqrt(2 * math.log(1 / cut)) / dx))
    offsets = np.arange(-radius, radius + 1)
    values = np.pi**-0.25 * sigma**-0.5 * np.exp(-((offsets * dx) ** 2) / (2 * sigma**2))
    return offsets, values


def gaussian_window(params: FrameParams, grid: GridSpec) -> Field:
    """Unit-norm Gaussian ``pi^{-N/4} sigma^{-N/2} exp(-|x|^2/(2 sigma^2))`` sampled on ``grid``."""
    check_grid(grid)
    if params.sigma < 2 * grid.dx:
        raise ValueError(f"window sigma={params.sigma} is not resolved by dx={grid.dx} (need sigma >= 2 dx)")
    n = grid.ndim
    r2 = grid.radius_squared()
    values = np.pi ** (-n / 4) * params.sigma ** (-n / 2) * np.exp(-r2 / (2 * params.sigma**2))
    return Field(grid, np.broadcast_to(values, grid.shape))


@dataclass(frozen=True, eq=False)
class DualWindow:
    """Truncated 1-D dual window profile; N-D duals are tensor products of it.

    ``values[i]`` is gamma at ``offsets[i]*dx``.  ``window_offsets`` and
    ``window_values`` hold the truncated Gaussian used for synthesis.
    """

    params: FrameParams
    dx: float
    ndim: int
    offsets: np.ndarray
    values: np.ndarray
    window_offsets: np.ndarray
    window_values: np.ndarray
    truncation_radius: float
    residual: float
    iterations: int

    def sample(self, grid: GridSpec) -> Field:
        """The N-D dual window centred at the origin of ``grid``."""
        profile = np.zeros(grid.points)
        centre = grid.points // 2
        np.add.at(profile, (centre + self.offsets) % grid.points, self.values)
        out = profile
        for _ in range(grid.ndim - 1):
            out = np.multiply.outer(out, profile)
        return Field(grid, out)


def _centres(grid_points: int, step: int, positions: np.ndarray) -> np.ndarray:
    return (grid_points // 2 + positions * step) % grid_points


def all_positions(points: int, step: int) -> np.ndarray:
    """Lattice indices ``a`` whose sites ``a*xs`` lie in [-L, L)."""
    count = points // step
    first = -((points // 2) // step)
    return np.arange(first, first + count)


class _AxisOperator:
    """Sparse gather (analysis) or overlap-add (synthesis) along one axis."""

    def __init__(self, points: int, step: int, bins: int, dx: float, positions: np.ndarray,
                 offsets: np.ndarray, window: np.ndarray):
        positions = np.asarray(positions, dtype=int)
        centres = _centres(points, step, positions)
        A, W = len(positions), len(offsets)
        rows = (np.arange(A)[:, None] * bins + (offsets % bins)[None, :]).ravel()
        cols = ((centres[:, None] + offsets[None, :]) % points).ravel()
        vals = np.broadcast_to(window, (A, W)).ravel()
        self.bins = bins
        self.count = A
        self.gather = sp.csr_matrix((np.conj(vals) * dx, (rows, cols)), shape=(A * bins, points))
        self.scatter = sp.csr_matrix((vals, (cols, rows)), shape=(points, A * bins))

    def analyze_front(self, arr: np.ndarray) -> np.ndarray:
        """Axis 0 of ``arr`` (length ``points``) -> axes (A, P)."""
        rest = arr.shape[1:]
        h = self.gather @ arr.reshape(arr.shape[0], -1)
        h = h.reshape((self.count, self.bins) + rest)
        return sfft.fft(h, axis=1)

    def synthesize_front(self, coef: np.ndarray) -> np.ndarray:
        """Axes (A, P) at the front of ``coef`` -> one axis of length ``points``."""
        rest = coef.shape[2:]
        h = sfft.ifft(coef, axis=1) * self.bins
        out = self.scatter @ h.reshape(self.count * self.bins, -1)
        return out.reshape((self.scatter.shape[0],) + rest)


class FrameletIndex(NamedTuple):
    a: tuple[int, ...]
    b: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class PhaseSpaceLayout:
    """Product lattice of positions (per axis) times all ``bins`` frequencies.

    Coefficient arrays have shape ``(A_1, ..., A_N, P, ..., P)`` with the
    frequency axes in FFT order (bin ``j`` is ``b = j`` for ``j < P/2`` and
    ``j - P`` otherwise).
    """

    positions: tuple[np.ndarray, ...]
    bins: int
    xs: float
    ks: float

    @property
    def ndim(self) -> int:
        return len(self.positions)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.positions) + (self.bins,) * self.ndim

    @cached_property
    def signed_bins(self) -> np.ndarray:
        return np.rint(sfft.fftfreq(self.bins) * self.bins).astype(int)

    @cached_property
    def _lookup(self) -> tuple[dict, ...]:
        return tuple({int(a): i for i, a in enumerate(p)} for p in self.positions)

    def locate(self, idx) -> tuple[int, ...] | None:
        idx = FrameletIndex(*idx)
        try:
            ai = tuple(lk[int(a)] for lk, a in zip(self._lookup, idx.a))
        except KeyError:
            return None
        bi = tuple(int(b) % self.bins for b in idx.b)
        return ai + bi

    def grids(self):
        """Broadcastable arrays (a_1..a_N, b_1..b_N) over the coefficient shape."""
        n = self.ndim
        out = []
        for i, p in enumerate(self.positions):
            shape = [1] * (2 * n)
            shape[i] = len(p)
            out.append(np.asarray(p).reshape(shape))
        for i in range(n):
            shape = [1] * (2 * n)
            shape[n + i] = self.bins
            out.append(self.signed_bins.reshape(shape))
        return out

    def index_at(self, flat: tuple[int, ...]) -> FrameletIndex:
        n = self.ndim
        a = tuple(int(self.positions[i][flat[i]]) for i in range(n))
        b = tuple(int(self.signed_bins[flat[n + i]]) for i in range(n))
        return FrameletIndex(a, b)


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Map from framelet index to complex coefficient, stored densely on a layout."""

    layout: PhaseSpaceLayout
    values: np.ndarray

    def __getitem__(self, idx) -> complex:
        loc = self.layout.locate(FrameletIndex(*idx))
        if loc is None:
            raise KeyError(idx)
        return complex(self.values[loc])

    def __len__(self) -> int:
        return int(self.values.size)

    def items(self):
        for flat in np.ndindex(*self.values.shape):
            yield self.layout.index_at(flat), complex(self.values[flat])

    def norm(self) -> float:
        return float(np.linalg.norm(self.values.ravel()))

    def restricted(self, framelets: "FrameletSet") -> "CoefficientSet":
        return CoefficientSet(self.layout, np.where(framelets.mask_on(self.layout), self.values, 0))

    def to_csv(self, path) -> Path:
        """Write columns a_1..a_N, b_1..b_N, re, im."""
        path = Path(path)
        n = self.layout.ndim
        header = [f"a{i}" for i in range(n)] + [f"b{i}" for i in range(n)] + ["re", "im"]
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for idx, c in self.items():
                writer.writerow(list(idx.a) + list(idx.b) + [repr(c.real), repr(c.imag)])
        return path


@dataclass(frozen=True, eq=False)
class FrameletSet:
    """A set of framelets given as a boolean mask over a layout."""

    layout: PhaseSpaceLayout
    mask: np.ndarray

    @classmethod
    def from_indices(cls, indices: Iterable, params: FrameParams, grid: GridSpec) -> "FrameletSet":
        indices = [FrameletIndex(tuple(i[0]), tuple(i[1])) for i in indices]
        _, P = params.steps(grid)
        n = grid.ndim
        if indices:
            positions = tuple(np.unique([ix.a[k] for ix in indices]) for k in range(n))
        else:
            positions = tuple(np.zeros(0, dtype=int) for _ in range(n))
        layout = PhaseSpaceLayout(positions, P, params.xs, params.ks)
        mask = np.zeros(layout.shape, dtype=bool)
        for ix in indices:
            mask[layout.locate(ix)] = True
        return cls(layout, mask)

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __contains__(self, idx) -> bool:
        loc = self.layout.locate(FrameletIndex(*idx))
        return loc is not None and bool(self.mask[loc])

    def __iter__(self):
        for flat in zip(*np.nonzero(self.mask)):
            yield self.layout.index_at(tuple(int(v) for v in flat))

    def mask_on(self, layout: PhaseSpaceLayout) -> np.ndarray:
        """This set's mask re-expressed on another layout (same bins)."""
        if layout is self.layout:
            return self.mask
        if layout.bins != self.layout.bins:
            raise ValueError("layouts have different frequency bins")
        out = np.zeros(layout.shape, dtype=bool)
        n = layout.ndim
        src, dst = [], []
        for mine, theirs in zip(self.layout.positions, layout.positions):
            common, i_mine, i_theirs = np.intersect1d(mine, theirs, return_indices=True)
            src.append(i_mine)
            dst.append(i_theirs)
        sel_src = np.ix_(*src, *([np.arange(layout.bins)] * n))
        sel_dst = np.ix_(*dst, *([np.arange(layout.bins)] * n))
        out[sel_dst] = self.mask[sel_src]
        return out

    def union(self, other: "FrameletSet") -> "FrameletSet":
        if other.layout is not self.layout:
            raise ValueError("union needs a shared layout")
        return FrameletSet(self.layout, self.mask | other.mask)

    def isdisjoint(self, other: "FrameletSet") -> bool:
        return not np.any(self.mask & other.mask_on(self.layout))


class WFTOperator:
    """Precomputed analysis (dual window) and synthesis (Gaussian) on one grid.

    Only the lattice positions in ``positions`` (per axis; the product set is
    used) are analysed.  Windows wrap periodically at the grid edges.
    """

    def __init__(self, grid: GridSpec, dual: DualWindow, positions=None):
        check_grid(grid)
        if not math.isclose(dual.dx, grid.dx, rel_tol=1e-12):
            raise ValueError(f"dual window sampled at dx={dual.dx}, grid has dx={grid.dx}")
        self.grid = grid
        self.dual = dual
        params = dual.params
        p, P = params.steps(grid)
        if grid.points % p:
            raise ValueError(f"position step {p} does not divide {grid.points} grid points")
        if positions is None:
            positions = all_positions(grid.points, p)
        if isinstance(positions, np.ndarray) and positions.ndim == 1:
            positions = (positions,) * grid.ndim
        positions = tuple(np.unique(np.asarray(pp, dtype=int)) for pp in positions)
        if len(positions) != grid.ndim:
            raise ValueError(f"need positions for {grid.ndim} axes")
        self.layout = PhaseSpaceLayout(positions, P, params.xs, params.ks)
        self._analysis = [
            _AxisOperator(grid.points, p, P, grid.dx, pos, dual.offsets, dual.values) for pos in positions
        ]
        self._synthesis = [
            _AxisOperator(grid.points, p, P, grid.dx, pos, dual.window_offsets, dual.window_values)
            for pos in positions
        ]

    def analyze(self, values: np.ndarray) -> np.ndarray:
        if self.grid.ndim == 1:
            return self._analysis[0].analyze_front(values)
        ax0, ax1 = self._analysis
        t = ax0.analyze_front(values)  # (A0, P, M)
        A0, P, M = t.shape
        u = ax1.analyze_front(t.reshape(A0 * P, M).T)  # (A1, P, A0*P)
        u = u.reshape(ax1.count, P, A0, P)
        return u.transpose(2, 0, 3, 1)

    def synthesize(self, coef: np.ndarray) -> np.ndarray:
        if self.grid.ndim == 1:
            return self._synthesis[0].synthesize_front(coef)
        ax0, ax1 = self._synthesis
        A0, A1, P, _ = coef.shape
        u = coef.transpose(1, 3, 0, 2).reshape(A1, P, A0 * P)
        t = ax1.synthesize_front(u)  # (M, A0*P)
        t = t.T.reshape(A0, P, self.grid.points)
        return ax0.synthesize_front(t)

    def coefficients(self, f: Field) -> CoefficientSet:
        return CoefficientSet(self.layout, self.analyze(check_field(f, self.grid).values))

    def field(self, coef: CoefficientSet) -> Field:
        values = coef.values
        if coef.layout is not self.layout:
            values = _relayout(coef, self.layout)
        return Field(self.grid, self.synthesize(values))


def _relayout(coef: CoefficientSet, layout: PhaseSpaceLayout) -> np.ndarray:
    if coef.layout.bins != layout.bins:
        raise ValueError("coefficient set and operator use different frequency bins")
    n = layout.ndim
    out = np.zeros(layout.shape, dtype=complex)
    src, dst = [], []
    for mine, theirs in zip(coef.layout.positions, layout.positions):
        common, i_mine, i_theirs = np.intersect1d(mine, theirs, return_indices=True)
        if len(common) != len(mine):
            raise ValueError("coefficient positions are not covered by the operator layout")
        src.append(i_mine)
        dst.append(i_theirs)
    out[np.ix_(*dst, *([np.arange(layout.bins)] * n))] = coef.values[np.ix_(*src, *([np.arange(layout.bins)] * n))]
    return out


def _frame_operator_1d(points: int, step: int, bins: int, dx: float, offsets, window):
    op = _AxisOperator(points, step, bins, dx, all_positions(points, step), offsets, window)

    def apply(v):
        c = op.analyze_front(np.asarray(v, dtype=complex).reshape(points, 1))
        return op.synthesize_front(c).ravel()

    return apply


def compute_dual_window(params: FrameParams, grid: GridSpec, tol: float = 1e-13,
                        trunc: float = 1e-12, max_iter: int = 2000) -> DualWindow:
    """Solve ``S gamma = g`` by conjugate gradients and truncate the result.

    The frame operator is applied on an auxiliary periodic 1-D lattice, wide
    enough that gamma has decayed below ``trunc * max|gamma|`` well before its
    edge; the N-D dual is the tensor power of this profile.

    Raises:
        DualWindowError: if CG does not reach ``tol`` within ``max_iter``.
    """
    check_grid(grid)
    p, P = params.steps(grid)
    dx = grid.dx
    w_off, w_val = _window_profile(params.sigma, dx)
    R = int(w_off[-1])
    half = R + max(int(math.ceil(40.0 / params.decay_rate / dx)), 4 * R, P)
    for _attempt in range(6):
        n = 2 * int(math.ceil(half / p)) * p
        apply = _frame_operator_1d(n, p, P, dx, w_off, w_val)
        S = LinearOperator((n, n), matvec=lambda v: apply(v).real, dtype=float)
        rhs = np.zeros(n)
        rhs[(n // 2 + w_off) % n] = w_val
        iterations = 0

        def _count(_xk):
            nonlocal iterations
            iterations += 1

        gamma, info = cg(S, rhs, rtol=tol, atol=0.0, maxiter=max_iter, callback=_count)
        if info != 0:
            raise DualWindowError(
                f"dual window CG did not converge in {max_iter} iterations for sigma={params.sigma}, "
                f"xs={params.xs}, ks={params.ks}, q={params.q}"
            )
        offsets = np.arange(n) - n // 2
        peak = np.max(np.abs(gamma))
        edge = np.abs(offsets) > 0.8 * (n // 2)
        if np.max(np.abs(gamma[edge])) <= trunc * peak:
            break
        half *= 2
    else:
        raise DualWindowError(f"dual window for {params} does not decay below {trunc} on the auxiliary lattice")

    residual = float(np.linalg.norm(S.matvec(gamma) - rhs) / np.linalg.norm(rhs))
    keep = np.abs(gamma) >= trunc * peak
    m_eps = int(np.max(np.abs(offsets[keep])))
    sel = np.abs(offsets) <= m_eps
    log.debug("dual window: sigma=%g xs=%g ks=%g q=%d L_eps=%g residual=%.2e iters=%d",
              params.sigma, params.xs, params.ks, params.q, m_eps * dx, residual, iterations)
    return DualWindow(
        params=params,
        dx=dx,
        ndim=grid.ndim,
        offsets=offsets[sel].copy(),
        values=gamma[sel].copy(),
        window_offsets=w_off,
        window_values=w_val,
        truncation_radius=m_eps * dx,
        residual=residual,
        iterations=iterations,
    )


def frame_operator_bounds(dual: DualWindow, n_iter: int = 3000, seed: int = 0) -> tuple[float, float]:
    """Extreme eigenvalues (lo, hi) of the 1-D frame operator, by power iteration."""
    params = dual.params
    dx = dual.dx
    p = int(round(params.xs / dx))
    P = int(round(2 * np.pi / (params.ks * dx)))
    R = int(dual.window_offsets[-1])
    n = 2 * int(math.ceil((4 * R + P) / p)) * p
    apply = _frame_operator_1d(n, p, P, dx, dual.window_offsets, dual.window_values)
    rng = np.random.default_rng(seed)

    def power(op, v):
        lam = 0.0
        for _ in range(n_iter):
            w = op(v)
            new = float(np.vdot(v, w).real)
            v = w / np.linalg.norm(w)
            if abs(new - lam) <= 1e-13 * abs(new):
                lam = new
                break
            lam = new
        return lam

    v0 = rng.standard_normal(n)
    hi = power(lambda v: apply(v).real, v0 / np.linalg.norm(v0))
    shift = 1.01 * hi
    top = power(lambda v: shift * v - apply(v).real, v0 / np.linalg.norm(v0))
    lo = shift - top
    return lo, hi


def dual_decay_slope(dual: DualWindow, floor: float = 1e-13) -> float:
    """Slope of ``log|gamma|`` against ``|x|`` beyond ``3*sigma``.

    The fit uses the upper envelope (maximum over windows one frequency
    period ``2*pi/ks`` long, or shorter for a short tail) down to ``floor`` times the peak, since the dual
    oscillates in sign.  A negative number; compare ``-slope`` with
    ``params.decay_rate``.
    """
    params = dual.params
    r = np.abs(dual.offsets * dual.dx)
    mag = np.abs(dual.values)
    keep = (r >= 3 * params.sigma) & (mag > floor * mag.max())
    if not np.any(keep):
        raise ValueError("dual window too short beyond 3*sigma to fit a decay slope")
    span = r[keep].max() - 3 * params.sigma
    period = min(2 * np.pi / params.ks, span / 4)
    bins = np.floor((r[keep] - 3 * params.sigma) / period).astype(int) if period > 0 else np.zeros(1, int)
    if bins.max() < 2:
        raise ValueError("dual window too short beyond 3*sigma to fit a decay slope")
    centres, logs = [], []
    for b in range(bins.max()):  # the last bin may be cut by the floor
        sel = bins == b
        if np.any(sel):
            i = np.argmax(mag[keep][sel])
            centres.append(r[keep][sel][i])
            logs.append(np.log(mag[keep][sel][i]))
    slope, _ = np.polyfit(centres, logs, 1)
    return float(slope)


def _operator_for(f_grid: GridSpec, dual: DualWindow, positions=None) -> WFTOperator:
    return WFTOperator(f_grid, dual, positions)


def analyze_wft(f: Field, params: FrameParams, dual: DualWindow, positions=None) -> CoefficientSet:
    """Coefficients ``<f, gamma_ab>`` for lattice positions ``a`` in ``positions``.

    ``positions`` is an iterable of integer ``a``-vectors (the per-axis
    product of their components is analysed) or ``None`` for the full lattice.
    """
    if dual.params != params:
        raise ValueError("dual window was computed for different frame parameters")
    f = check_field(f)
    return _operator_for(f.grid, dual, _positions_arg(positions, f.grid.ndim)).coefficients(f)


def _positions_arg(positions, ndim: int):
    if positions is None:
        return None
    arr = np.asarray(list(positions), dtype=int).reshape(-1, ndim)
    return tuple(np.unique(arr[:, k]) for k in range(ndim))


def synthesize(c: CoefficientSet, dual: DualWindow, grid: GridSpec) -> Field:
    """``sum_ab c_ab g_ab`` accumulated on ``grid``."""
    if c.layout.ndim != grid.ndim:
        raise ValueError("coefficient set and grid have different dimension")
    if sum(len(p) for p in c.layout.positions) == 0 or c.values.size == 0:
        return grid.zeros()
    op = WFTOperator(grid, dual, c.layout.positions)
    return op.field(c)


def project_phase_space(f: Field, framelets, dual: DualWindow) -> Field:
    """``sum_{(a,b) in F} <f, gamma_ab> g_ab``: analyse on the positions of F, zero the rest, synthesize."""
    f = check_field(f)
    if not isinstance(framelets, FrameletSet):
        framelets = FrameletSet.from_indices(list(framelets), dual.params, f.grid)
    if len(framelets) == 0:
        return f.grid.zeros()
    op = WFTOperator(f.grid, dual, framelets.layout.positions)
    coef = op.analyze(f.values)
    return Field(f.grid, op.synthesize(np.where(framelets.mask_on(op.layout), coef, 0)))


class GaborFrame(TransformerMixin, BaseEstimator):
    """Gaussian Gabor frame as a transformer: ``fit`` builds the dual window for a grid.

    Parameters
    ----------
    sigma : float
        Window width.
    xs, ks, q : optional
        Any two of position spacing, frequency spacing and oversampling.  The
        lattice is snapped to the grid at ``fit`` time.
    tol : float
        Relative residual for the CG solve of the dual window.
    trunc : float
        Dual window is cut where ``|gamma| < trunc * max|gamma|``.
    """

    def __init__(self, sigma=1.0, xs=None, ks=None, q=16, tol=1e-13, trunc=1e-12, max_iter=2000):
        self.sigma = sigma
        self.xs = xs
        self.ks = ks
        self.q = q
        self.tol = tol
        self.trunc = trunc
        self.max_iter = max_iter

    def fit(self, X, y=None):
        grid = X.grid if isinstance(X, Field) else check_grid(X)
        params = FrameParams.from_spacing(self.sigma, self.xs, self.ks, self.q).snapped(grid)
        self.grid_ = grid
        self.params_ = params
        self.dual_ = compute_dual_window(params, grid, tol=self.tol, trunc=self.trunc, max_iter=self.max_iter)
        self.operator_ = WFTOperator(grid, self.dual_)
        return self

    def transform(self, X, positions=None) -> CoefficientSet:
        check_is_fitted(self, "dual_")
        X = check_field(X, self.grid_)
        if positions is None:
            return self.operator_.coefficients(X)
        return analyze_wft(X, self.params_, self.dual_, positions)

    def inverse_transform(self, X: CoefficientSet) -> Field:
        check_is_fitted(self, "dual_")
        return synthesize(X, self.dual_, self.grid_)

    def project(self, X, framelets) -> Field:
        check_is_fitted(self, "dual_")
        return project_phase_space(check_field(X, self.grid_), framelets, self.dual_)

    def frame_bounds(self) -> tuple[float, float]:
        """Bounds (A, B) with ``A||f|| <= ||coefficients|| <= B||f||``."""
        check_is_fitted(self, "dual_")
        lo, hi = frame_operator_bounds(self.dual_)
        n = self.grid_.ndim
        return float(hi ** (-n / 2)), float(lo ** (-n / 2))
