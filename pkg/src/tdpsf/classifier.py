"""Free-flow classification of framelets as outgoing, incoming or ambiguous.

Under the free flow a framelet ``g_ab`` keeps all but ``eps`` of its mass (in
L2 or H1) inside the ball ``B(t)`` of radius ``R_b(t)`` about
``a*xs + nu*b*ks*t``.  A buffer framelet whose ball never meets the interior
box before ``Tmax`` is outgoing; one whose ball meets the interior and also
leaves the computational box within the exit horizon is ambiguous.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .frame import FrameletIndex, FrameletSet, FrameParams, PhaseSpaceLayout, all_positions
from .lattice import GridSpec
from .special import GammaDomainError, inverse_upper_incomplete_gamma

__all__ = [
    "Verdict",
    "ClassifierConfig",
    "Classification",
    "FilterSets",
    "ConfigurationError",
    "sphere_area",
    "spread_factor",
    "spread_radius",
    "classify_framelet",
    "build_filter_sets",
]


class ConfigurationError(ValueError):
    """Invalid configuration; ``problems`` lists every violated constraint."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class Verdict(str, enum.Enum):
    OUTGOING = "Outgoing"
    INCOMING = "Incoming"
    AMBIGUOUS = "Ambiguous"


def sphere_area(ndim: int) -> float:
    """Surface measure of the unit sphere in R^ndim."""
    return 2 * math.pi ** (ndim / 2) / math.gamma(ndim / 2)


@dataclass(frozen=True)
class ClassifierConfig:
    """Geometry and tolerances for the framelet classification.

    ``exit_horizon`` is how far ahead a ball leaving the computational box
    counts as ambiguous (defaults to ``Tstep``).  ``dx`` sets the finest time
    sampling of the intersection search; ``kmin`` enables the buffer-width
    rule ``sigma >= |ln eps| / kmin``.
    """

    eps: float
    Lb: float
    wb: float
    Tstep: float
    Tmax: float
    frame: FrameParams
    kmax: float
    ndim: int = 1
    norm: str = "H1"
    velocity_factor: float = 2.0
    kmin: float | None = None
    exit_horizon: float | None = None
    dx: float | None = None

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigurationError(problems)

    def problems(self) -> list[str]:
        out = []
        if not 0 < self.eps < 1:
            out.append(f"eps must lie in (0, 1), got {self.eps}")
        if not self.Lb > 0:
            out.append(f"Lb must be positive, got {self.Lb}")
        if not self.wb > 0:
            out.append(f"wb must be positive, got {self.wb}")
        if not self.Tstep > 0:
            out.append(f"Tstep must be positive, got {self.Tstep}")
        if self.Tmax < self.Tstep:
            out.append(f"Tmax={self.Tmax} is shorter than Tstep={self.Tstep}")
        if self.norm not in ("L2", "H1"):
            out.append(f"norm must be 'L2' or 'H1', got {self.norm!r}")
        if not self.velocity_factor > 0:
            out.append(f"velocity factor must be positive, got {self.velocity_factor}")
        if not self.kmax > 0:
            out.append(f"kmax must be positive, got {self.kmax}")
        if self.ndim not in (1, 2):
            out.append(f"ndim must be 1 or 2, got {self.ndim}")
        if self.wb > 0 and self.kmax > 0 and self.velocity_factor > 0:
            limit = self.wb / (3 * self.kmax * self.velocity_factor)
            if self.Tstep > limit * (1 + 1e-12):
                out.append(
                    f"Tstep={self.Tstep} exceeds wb/(3*kmax*nu) = {self.wb}/(3*{self.kmax}*{self.velocity_factor}) = {limit:.6g}"
                )
        if self.kmin is not None and 0 < self.eps < 1:
            need = abs(math.log(self.eps)) / self.kmin
            if self.frame.sigma < need:
                out.append(f"sigma={self.frame.sigma} is below |ln eps|/kmin = {need:.6g}")
        return out

    @property
    def horizon(self) -> float:
        return self.Tstep if self.exit_horizon is None else self.exit_horizon

    @property
    def time_resolution(self) -> float:
        h = self.Tstep / 20
        if self.dx is not None:
            h = min(h, self.dx / (self.velocity_factor * self.kmax))
        return h


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    first_exit_time: float | None
    returns_to_interior: bool


def _inverse_gamma(a: float, y: float, what: str) -> float:
    try:
        return inverse_upper_incomplete_gamma(a, y)
    except GammaDomainError as exc:
        raise ConfigurationError(f"{what}: {exc} (tolerance too large for this dimension)") from exc


def spread_factor(bks_norm, cfg: ClassifierConfig) -> np.ndarray:
    """``R_b(t) / sqrt(sigma^2 + (nu t)^2/sigma^2)`` for frequency magnitudes ``|b ks|``."""
    n = cfg.ndim
    eps2 = cfg.eps**2
    area = sphere_area(n)
    sigma = cfg.frame.sigma
    bks = np.asarray(bks_norm, dtype=float)
    if cfg.norm == "L2":
        r = math.sqrt(_inverse_gamma(n / 2, 2 * eps2 * math.pi ** (n / 2) / area, "L2 spread radius"))
        return np.full(bks.shape, r)
    second = math.sqrt(_inverse_gamma((n + 2) / 2, eps2 * sigma**2 * math.pi ** (n / 2) / (2 * area), "H1 spread radius"))
    unique, inverse = np.unique(bks, return_inverse=True)
    first = np.array([
        math.sqrt(_inverse_gamma(n / 2, eps2 * math.pi ** (n / 2) / (2 * area * (1 + k**2)), "H1 spread radius"))
        for k in unique
    ])
    return np.maximum(first, second)[inverse].reshape(bks.shape)


def _width(t, cfg: ClassifierConfig):
    sigma = cfg.frame.sigma
    return np.sqrt(sigma**2 + (cfg.velocity_factor * t) ** 2 / sigma**2)


def spread_radius(b, t: float, cfg: ClassifierConfig) -> float:
    """Radius of the ball holding all but ``eps`` of framelet ``(., b)`` at time ``t``."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    bks = cfg.frame.ks * float(np.linalg.norm(np.atleast_1d(b)))
    return float(spread_factor(bks, cfg) * _width(t, cfg))


def _first_hits(centre0, velocity, rho, cfg: ClassifierConfig, t_end: float) -> np.ndarray:
    """First time in [0, t_end] at which each ball meets the interior box (inf if never).

    Lipschitz stepping: the gap g(t) = dist(c(t), IBox) - R(t) changes at rate
    at most nu(|b ks| + rho/sigma), so the next zero cannot come before g/L.
    Steps never drop below the configured time resolution.
    """
    count = centre0.shape[0]
    out = np.full(count, np.inf)
    if count == 0:
        return out
    sigma = cfg.frame.sigma
    lip = np.linalg.norm(velocity, axis=1) + cfg.velocity_factor * rho / sigma + 1e-300
    floor = cfg.time_resolution
    t = np.zeros(count)
    active = np.arange(count)
    while active.size:
        c = centre0[active] + velocity[active] * t[active, None]
        dist = np.linalg.norm(np.maximum(np.abs(c) - cfg.Lb, 0.0), axis=1)
        gap = dist - rho[active] * _width(t[active], cfg)
        hit = gap <= 0
        out[active[hit]] = t[active[hit]]
        keep = ~hit & (t[active] < t_end)
        active = active[keep]
        if not active.size:
            break
        step = np.maximum(gap[keep] / lip[active], floor)
        t[active] = np.minimum(t[active] + step, t_end)
    return out


def _exits(centre0, velocity, rho, cfg: ClassifierConfig, t: float) -> np.ndarray:
    c = centre0 + velocity * t
    return np.max(np.abs(c), axis=1) + rho * _width(t, cfg) > cfg.Lb + cfg.wb


def _classify_arrays(a_pos, bks, cfg: ClassifierConfig):
    """Vectorised verdicts for centres ``a_pos`` (n, N) and frequencies ``bks`` (n, N)."""
    a_pos = np.asarray(a_pos, dtype=float)
    bks = np.asarray(bks, dtype=float)
    tol = 1e-9 * max(cfg.Lb, 1.0)
    interior = np.all(np.abs(a_pos) < cfg.Lb - tol, axis=1)
    velocity = cfg.velocity_factor * bks
    rho = spread_factor(np.linalg.norm(bks, axis=1), cfg)
    hits = np.full(a_pos.shape[0], np.inf)
    sel = ~interior
    hits[sel] = _first_hits(a_pos[sel], velocity[sel], rho[sel], cfg, cfg.Tmax)
    exits = _exits(a_pos, velocity, rho, cfg, 0.0) | _exits(a_pos, velocity, rho, cfg, cfg.horizon)
    returns = np.isfinite(hits)
    outgoing = ~interior & ~returns
    ambiguous = ~interior & returns & exits
    return interior, outgoing, ambiguous, returns


def _first_exit_time(centre0, velocity, rho, cfg: ClassifierConfig) -> float | None:
    """Earliest t in [0, Tmax] at which the ball pokes out of the computational box."""
    edge = cfg.Lb + cfg.wb

    def over(t):
        return float(np.max(np.abs(centre0 + velocity * t)) + rho * _width(t, cfg) - edge)

    if over(0.0) > 0:
        return 0.0
    lip = float(np.linalg.norm(velocity)) + cfg.velocity_factor * rho / cfg.frame.sigma
    t = 0.0
    while t < cfg.Tmax:
        gap = -over(t)
        if gap <= 0:
            return t
        t += max(gap / lip, cfg.time_resolution)
    return None


def classify_framelet(idx, cfg: ClassifierConfig) -> Classification:
    idx = FrameletIndex(tuple(idx[0]), tuple(idx[1]))
    a_pos = np.array(idx.a, dtype=float) * cfg.frame.xs
    bks = np.array(idx.b, dtype=float) * cfg.frame.ks
    if a_pos.size != cfg.ndim:
        raise ValueError(f"framelet index has dimension {a_pos.size}, configuration {cfg.ndim}")
    interior, outgoing, ambiguous, returns = _classify_arrays(a_pos[None], bks[None], cfg)
    rho = float(spread_factor(np.linalg.norm(bks), cfg))
    exit_time = _first_exit_time(a_pos, cfg.velocity_factor * bks, rho, cfg)
    if interior[0]:
        verdict = Verdict.INCOMING
    elif outgoing[0]:
        verdict = Verdict.OUTGOING
    elif ambiguous[0]:
        verdict = Verdict.AMBIGUOUS
    else:
        verdict = Verdict.INCOMING
    return Classification(verdict, exit_time, bool(returns[0] or interior[0]))


@dataclass(frozen=True, eq=False)
class FilterSets:
    """Outgoing and ambiguous framelets over the buffer layout."""

    layout: PhaseSpaceLayout
    outgoing: FrameletSet
    ambiguous: FrameletSet
    buffer: np.ndarray  # boolean over the position axes

    def to_csv(self, path) -> Path:
        path = Path(path)
        n = self.layout.ndim
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"a{i}" for i in range(n)] + [f"b{i}" for i in range(n)] + ["verdict"])
            names = np.array([Verdict.INCOMING.value, Verdict.OUTGOING.value, Verdict.AMBIGUOUS.value])
            code = self.outgoing.mask.astype(np.int8) + 2 * self.ambiguous.mask.astype(np.int8)
            bins = self.layout.signed_bins
            for pos in zip(*np.nonzero(self.buffer)):
                a = [int(self.layout.positions[i][j]) for i, j in enumerate(pos)]
                block = code[pos]
                b = np.unravel_index(np.arange(block.size), block.shape)
                cols = [np.full(block.size, ai) for ai in a] + [bins[bi] for bi in b]
                writer.writerows(zip(*[c.tolist() for c in cols], names[block.ravel()].tolist()))
        return path


def build_filter_sets(cfg: ClassifierConfig, grid: GridSpec) -> FilterSets:
    """Classify every buffer framelet with ``|b ks|_inf <= kmax``; results are cached."""
    return _build_cached(cfg, grid)


@lru_cache(maxsize=16)
def _build_cached(cfg: ClassifierConfig, grid: GridSpec) -> FilterSets:
    if grid.ndim != cfg.ndim:
        raise ConfigurationError(f"grid has {grid.ndim} dimensions, classifier {cfg.ndim}")
    params = cfg.frame
    p, P = params.steps(grid)
    positions = all_positions(grid.points, p)
    x = positions * params.xs
    tol = 1e-9 * max(cfg.Lb, 1.0)
    in_fbox = np.abs(x) <= cfg.Lb + cfg.wb + tol
    in_buffer_axis = in_fbox & (np.abs(x) >= cfg.Lb - tol)
    if not np.any(in_buffer_axis):
        raise ConfigurationError(
            f"buffer [{cfg.Lb}, {cfg.Lb + cfg.wb}] contains no lattice position (xs={params.xs})"
        )
    n = grid.ndim
    if n == 1:
        axis_positions = (positions[in_buffer_axis],)
    else:
        axis_positions = (positions[in_fbox],) * 2
    layout = PhaseSpaceLayout(axis_positions, P, params.xs, params.ks)
    grids = layout.grids()
    shape = layout.shape
    a_full = [np.broadcast_to(g, shape) * params.xs for g in grids[:n]]
    b_full = [np.broadcast_to(g, shape) * params.ks for g in grids[n:]]
    pos_abs = np.stack([np.abs(np.broadcast_to(g, shape[:n]) * params.xs) for g in _position_grids(layout)], axis=-1)
    buffer = np.any(pos_abs >= cfg.Lb - tol, axis=-1) & np.all(pos_abs <= cfg.Lb + cfg.wb + tol, axis=-1)
    allowed = np.all(np.stack([np.abs(b) <= cfg.kmax * (1 + 1e-12) for b in b_full]), axis=0)
    candidate = np.broadcast_to(buffer.reshape(buffer.shape + (1,) * n), shape) & allowed

    a_pts = np.stack([a[candidate] for a in a_full], axis=1)
    b_pts = np.stack([b[candidate] for b in b_full], axis=1)
    # the site at -L is also +L; place it on the side its frequency points away from
    seam = np.abs(a_pts) >= grid.half_width - tol
    a_pts = np.where(seam & (b_pts > 0), grid.half_width, a_pts)
    out_v, amb_v = _classify_unique(a_pts, b_pts, cfg)
    out = np.zeros(shape, dtype=bool)
    amb = np.zeros(shape, dtype=bool)
    out[candidate] = out_v
    amb[candidate] = amb_v
    return FilterSets(layout, FrameletSet(layout, out), FrameletSet(layout, amb), buffer)


def _position_grids(layout: PhaseSpaceLayout):
    n = layout.ndim
    out = []
    for i, p in enumerate(layout.positions):
        shape = [1] * n
        shape[i] = len(p)
        out.append(np.asarray(p).reshape(shape))
    return out


def _classify_unique(a_pts: np.ndarray, b_pts: np.ndarray, cfg: ClassifierConfig):
    """Classify points, exploiting invariance under (a_i, b_i) -> (-a_i, -b_i) and axis swaps."""
    n = a_pts.shape[1]
    canon_a, canon_b = _canonical(a_pts, b_pts)
    key = np.concatenate([canon_a, canon_b], axis=1)
    uniq, inverse = np.unique(np.round(key, 9), axis=0, return_inverse=True)
    _, out_u, amb_u, _ = _classify_arrays(uniq[:, :n], uniq[:, n:], cfg)
    inverse = inverse.ravel()
    return out_u[inverse], amb_u[inverse]


def _canonical(a_pts: np.ndarray, b_pts: np.ndarray):
    flip = (a_pts < 0) | ((a_pts == 0) & (b_pts < 0))
    a = np.where(flip, -a_pts, a_pts)
    b = np.where(flip, -b_pts, b_pts)
    if a.shape[1] == 2:
        swap = (a[:, 0] < a[:, 1]) | ((a[:, 0] == a[:, 1]) & (b[:, 0] < b[:, 1]))
        a = np.where(swap[:, None], a[:, ::-1], a)
        b = np.where(swap[:, None], b[:, ::-1], b)
    return a, b
