"""Reference solutions, error metrics and the three benchmark presets.

Presets are flat dictionaries of typed parameters.  A config file of
``key = value`` lines overrides them; ``scale="ci"`` swaps in a cheaper
parameter set where the full run takes hours.
"""

from __future__ import annotations

import configparser
import csv
import logging
import math
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .classifier import ClassifierConfig
from .driver import AmbiguousMassExceeded, RunReport, TdpsfConfig, check_config, run_tdpsf
from .frame import FrameParams
from .lattice import Field, GridSpec, SubBox, l2_norm_on_box, make_grid
from .propagator import (
    CubicFocusing,
    LongRange,
    StepperConfig,
    Zero,
    calibrate_velocity_factor,
    gaussian_absorber,
    split_step_evolve,
)

__all__ = [
    "MetricSeries",
    "RunRow",
    "ExperimentResult",
    "ExperimentPreset",
    "PRESETS",
    "free_gaussian_reference",
    "soliton_reference",
    "error_on_box",
    "load_config",
    "make_preset",
    "freewave_config",
    "soliton_config",
    "longrange_config",
    "run_experiment",
    "emit_report",
]

log = logging.getLogger(__name__)


# ---------------------------------------------------------------- references


def free_gaussian_reference(center, wavenumber, width: float, t: float, grid: GridSpec,
                            kappa: float = 0.5) -> Field:
    """Exact free evolution of ``exp(-|x-c|^2/(2 w^2) + i k.(x-c))`` on R^N, sampled on ``grid``.

    Under ``i psi_t = -kappa Laplace psi`` each axis carries the complex width
    ``alpha = w^2 + 2 i kappa t``; the centre moves with ``2 kappa k``.

    Raises:
        ValueError: if the packet's spectrum is not resolved by the grid.
    """
    n = grid.ndim
    c = np.broadcast_to(np.asarray(center, dtype=float), (n,))
    k = np.broadcast_to(np.asarray(wavenumber, dtype=float), (n,))
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    if np.max(np.abs(k)) + 8.0 / width > grid.kmax:
        raise ValueError(
            f"packet with |k|={np.max(np.abs(k)):g} and width {width:g} is under-resolved "
            f"(grid Nyquist {grid.kmax:g})"
        )
    w2 = width**2
    alpha = w2 + 2j * kappa * t
    out = np.ones(grid.shape, dtype=complex)
    for ax, ci, ki in zip(grid.mesh(), c, k):
        shift = ax - ci - 2 * kappa * ki * t
        out = out * np.sqrt(w2 / alpha) * np.exp(-(shift**2) / (2 * alpha) + 1j * ki * (ax - ci) - 1j * kappa * ki**2 * t)
    return Field(grid, out)


def soliton_reference(v: float, t: float, grid: GridSpec, kappa: float = 0.5, coupling: float = -2.0,
                      amplitude: float = 2**-0.5) -> Field:
    """Bright soliton of ``i psi_t = -kappa psi_xx + coupling |psi|^2 psi`` with carrier ``v``.

    ``eta sech(eta sqrt(|g|/2kappa) (x - 2 kappa v t)) exp(i(v x - (kappa v^2 - |g| eta^2/2) t))``;
    with the defaults this is ``2^{-1/2} sech(x - v t)`` travelling at speed ``v``.
    """
    if grid.ndim != 1:
        raise ValueError("the soliton reference is one dimensional")
    if coupling >= 0:
        raise ValueError("a bright soliton needs a focusing (negative) coupling")
    g = abs(coupling)
    eta = amplitude
    x = grid.axis
    inv_width = eta * math.sqrt(g / (2 * kappa))
    phase = v * x - (kappa * v**2 - g * eta**2 / 2) * t
    return Field(grid, eta / np.cosh(inv_width * (x - 2 * kappa * v * t)) * np.exp(1j * phase))


def error_on_box(f: Field, ref: Field, box: SubBox, normalizer: float) -> float:
    """``||f - ref||_{L2(box)} / normalizer``."""
    if not normalizer > 0:
        raise ValueError("normalizer must be positive")
    if f.grid != ref.grid:
        raise ValueError("fields live on different grids")
    return l2_norm_on_box(f - ref, box) / normalizer


def _box_values(f: Field, box: SubBox) -> np.ndarray:
    """Samples inside ``box`` as a dense array (for comparing grids with equal spacing)."""
    mask = box.mask(f.grid)
    n = f.grid.ndim
    keep = [np.any(mask, axis=tuple(j for j in range(n) if j != i)) for i in range(n)]
    return f.values[np.ix_(*keep)]


# ---------------------------------------------------------------- results


_LABELS = {
    "interior_error": ("v", "error"),
    "E_of_v": ("v", "E"),
    "relative_error": ("t", "error"),
    "M_of_t": ("t", "M"),
}


@dataclass(frozen=True)
class MetricSeries:
    """One curve: ``metric`` names the quantity, ``tag`` distinguishes variants."""

    metric: str
    tag: str
    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        if self.metric not in _LABELS:
            raise ValueError(f"unknown metric {self.metric!r}")
        x = tuple(float(v) for v in self.x)
        y = tuple(float(v) for v in self.y)
        if len(x) != len(y):
            raise ValueError("abscissae and values differ in length")
        if any(b <= a for a, b in zip(x, x[1:])):
            raise ValueError(f"{self.metric}: abscissae must be strictly increasing")
        if not all(math.isfinite(v) and v >= 0 for v in y):
            raise ValueError(f"{self.metric}: values must be finite and non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def header(self) -> tuple[str, str]:
        return _LABELS[self.metric]

    @property
    def stem(self) -> str:
        return f"{self.metric}_{self.tag}" if self.tag else self.metric


@dataclass(frozen=True)
class RunRow:
    """Outcome of one sub-run; failures are rows, not exceptions."""

    baseline: str
    label: str
    status: str
    error: float
    fail_time: float = math.nan
    ambiguous_mass: float = math.nan
    wall_time: float = 0.0


@dataclass
class ExperimentResult:
    preset: str
    scale: str
    params: dict
    series: list[MetricSeries] = field(default_factory=list)
    runs: list[RunRow] = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def ambiguous_failures(self) -> list[RunRow]:
        return [r for r in self.runs if r.status == AmbiguousMassExceeded.name]

    def get(self, metric: str, tag: str = "") -> MetricSeries:
        for s in self.series:
            if s.metric == metric and s.tag == tag:
                return s
        raise KeyError(f"{metric}/{tag}")


# ---------------------------------------------------------------- presets


_TWO_PI = 2 * math.pi

PRESETS: dict[str, dict[str, Any]] = {
    "freewave1d": {
        "half_width": 102.4,
        "points": 2048,
        "dt": 5e-4,
        "tstep": 2e-3,
        "lb": 88.0,
        "wb": 14.4,
        "eps": 1e-6,
        "norm": "H1",
        "sigmas": [1.0, 2.0, 4.0],
        "xs": 0.8,
        "ks": _TWO_PI / 12.8,
        "velocities": [float(v) for v in range(1, 26)],
        "kappa": 0.5,
        "travel": 3 * 51.2,
        "halt": True,
        "absorber_height": 25.0,
        "absorber_width2": 16.0,
        "absorber_centre": 102.4,
    },
    "soliton1d": {
        "half_width": 25.6,
        "points": 1024,
        "dt_times_v": 0.002,
        "tstep_times_v": 0.08,
        "lb": 12.0,
        "wb": 13.6,
        "eps": 1e-6,
        "norm": "H1",
        "sigma": 1.0,
        "xs": 0.2,
        "ks": _TWO_PI / 3.2,
        "velocities": [float(v) for v in range(1, 16)],
        "kappa": 0.5,
        "coupling": -2.0,
        "duration_times_v": 200.0,
        "kmax_margin": 20.0,
        "record_interval": 10,
        "halt": False,
    },
    "longrange2d": {
        "half_width": 25.6,
        "points": 256,
        "dt": 0.025,
        "tstep": 0.1,
        "lb": 10.0,
        "wb": 15.6,
        "eps": 1e-6,
        "norm": "H1",
        "sigma": 2.0,
        "xs": 0.8,
        "ks": _TWO_PI / 12.8,
        "kappa": 0.5,
        "depth": 15.0,
        "scale": 0.05,
        "final_time": 120.0,
        "compare_time": 58.0,
        "distant_half_width": 409.6,
        "launch_speed": 7.0,
        "region": 10.0,
        "plateau_start": 35.0,
        "absorber_height": 20.0,
        "absorber_width2": 36.0,
        "halt": False,
    },
}

# cheaper variants; longrange2d halves the run times and the distant box
CI_OVERRIDES: dict[str, dict[str, Any]] = {
    "freewave1d": {"sigmas": [1.0, 2.0], "velocities": [1.0, 2.0, 4.0, 8.0, 12.0, 16.0, 20.0, 25.0]},
    "soliton1d": {"velocities": [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 15.0]},
    "longrange2d": {"final_time": 60.0, "compare_time": 29.0, "distant_half_width": 204.8, "plateau_start": 30.0},
}


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    scale: str
    params: dict

    def __post_init__(self):
        if self.name not in PRESETS:
            raise ValueError(f"unknown preset {self.name!r}; choose from {sorted(PRESETS)}")
        if self.scale not in ("full", "ci"):
            raise ValueError(f"scale must be 'full' or 'ci', got {self.scale!r}")


def _coerce(key: str, raw: str, default: Any) -> Any:
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(raw)
            return low in ("true", "yes", "1", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, list):
            return [float(v) for v in raw.replace(",", " ").split()]
        return raw
    except ValueError:
        raise ValueError(f"config key {key!r}: cannot read {raw!r} as {type(default).__name__}") from None


def load_config(path: str | Path) -> dict[str, str]:
    """Read a flat ``key = value`` file (``#`` comments, no sections)."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc.strerror}") from exc
    parser.read_string("[config]\n" + text, source=str(path))
    return dict(parser["config"])


def make_preset(name: str, scale: str = "ci", overrides: dict[str, Any] | None = None) -> ExperimentPreset:
    """Defaults for ``name`` at ``scale`` with ``overrides`` applied (strings are parsed)."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    params = dict(PRESETS[name])
    if scale == "ci":
        params.update(CI_OVERRIDES.get(name, {}))
    unknown = sorted(set(overrides or {}) - set(params))
    if unknown:
        raise ValueError(f"unknown config keys for {name}: {', '.join(unknown)}")
    for key, value in (overrides or {}).items():
        params[key] = _coerce(key, value, params[key]) if isinstance(value, str) else value
    return ExperimentPreset(name, scale, params)


def _snap_time(duration: float, step: float) -> float:
    return max(1, round(duration / step)) * step


# ---------------------------------------------------------------- freewave1d


def _freewave_grid(p) -> GridSpec:
    return make_grid(1, p["half_width"], p["points"])


def freewave_config(p: dict, sigma: float, v: float) -> TdpsfConfig:
    grid = _freewave_grid(p)
    T = _snap_time(p["travel"] / v, p["tstep"])
    frame = FrameParams.from_spacing(sigma, p["xs"], p["ks"]).snapped(grid)
    nu = 2 * p["kappa"]
    cl = ClassifierConfig(p["eps"], p["lb"], p["wb"], p["tstep"], T, frame, grid.kmax, 1, p["norm"], nu, dx=grid.dx)
    return TdpsfConfig(cl, StepperConfig(p["dt"], kappa=p["kappa"]), grid, Zero(), halt_on_ambiguous=p["halt"])


def _freewave_tdpsf(p: dict, sigma: float, v: float) -> tuple[RunRow, float]:
    cfg = freewave_config(p, sigma, v)
    grid = cfg.grid
    psi0 = free_gaussian_reference(0.0, v, math.sqrt(2.0), 0.0, grid, p["kappa"])
    start = _time.perf_counter()
    psi, report = run_tdpsf(cfg, psi0)
    t_end = report.events[-1].time
    ref = free_gaussian_reference(0.0, v, math.sqrt(2.0), t_end, grid, p["kappa"])
    err = error_on_box(psi, ref, SubBox.cube(p["lb"], 1), psi0.norm())
    return _row("tdpsf", f"sigma={sigma:g},v={v:g}", report, err, _time.perf_counter() - start), err


def _freewave_absorber(p: dict, v: float) -> tuple[RunRow, float]:
    grid = _freewave_grid(p)
    T = _snap_time(p["travel"] / v, p["tstep"])
    c = p["absorber_centre"]
    model = gaussian_absorber(grid, p["absorber_height"], (-c, c), p["absorber_width2"])
    psi0 = free_gaussian_reference(0.0, v, math.sqrt(2.0), 0.0, grid, p["kappa"])
    start = _time.perf_counter()
    psi = split_step_evolve(psi0, model, StepperConfig(p["dt"], kappa=p["kappa"]), T)
    ref = free_gaussian_reference(0.0, v, math.sqrt(2.0), T, grid, p["kappa"])
    err = error_on_box(psi, ref, SubBox.cube(p["lb"], 1), psi0.norm())
    return RunRow("absorbing_potential", f"v={v:g}", "Completed", err, wall_time=_time.perf_counter() - start), err


def _row(baseline: str, label: str, report: RunReport, err: float, wall: float) -> RunRow:
    term = report.termination
    if isinstance(term, AmbiguousMassExceeded):
        return RunRow(baseline, label, term.name, err, term.time, term.value, wall)
    return RunRow(baseline, label, term.name, err, wall_time=wall)


def _freewave_task(args):
    kind, p, sigma, v = args
    if kind == "tdpsf":
        return _freewave_tdpsf(p, sigma, v)
    return _freewave_absorber(p, v)


def _run_freewave(preset: ExperimentPreset, workers: int, result: ExperimentResult) -> None:
    p = preset.params
    vs = sorted(p["velocities"])
    tasks = [("tdpsf", p, s, v) for s in p["sigmas"] for v in vs] + [("absorber", p, 0.0, v) for v in vs]
    outcomes = _map(_freewave_task, tasks, workers)
    by_task = dict(zip([(t[0], t[2], t[3]) for t in tasks], outcomes))
    for s in p["sigmas"]:
        rows = [by_task[("tdpsf", s, v)] for v in vs]
        result.runs.extend(r for r, _ in rows)
        result.series.append(MetricSeries("interior_error", f"sigma{s:g}", vs, [e for _, e in rows]))
    rows = [by_task[("absorber", 0.0, v)] for v in vs]
    result.runs.extend(r for r, _ in rows)
    result.series.append(MetricSeries("interior_error", "absorber", vs, [e for _, e in rows]))
    result.extras["absorber_centres"] = f"-{p['absorber_centre']:g},{p['absorber_centre']:g}"


# ---------------------------------------------------------------- soliton1d


def soliton_config(p: dict, v: float) -> TdpsfConfig:
    grid = make_grid(1, p["half_width"], p["points"])
    tstep = p["tstep_times_v"] / v
    T = _snap_time(p["duration_times_v"] / v, tstep)
    frame = FrameParams.from_spacing(p["sigma"], p["xs"], p["ks"]).snapped(grid)
    kmax = min(grid.kmax, v + p["kmax_margin"])
    cl = ClassifierConfig(p["eps"], p["lb"], p["wb"], tstep, T, frame, kmax, 1, p["norm"], 2 * p["kappa"], dx=grid.dx)
    stepper = StepperConfig(p["dt_times_v"] / v, record_interval=p["record_interval"], kappa=p["kappa"])
    return TdpsfConfig(cl, stepper, grid, CubicFocusing(p["coupling"]), halt_on_ambiguous=p["halt"])


def _soliton_task(args) -> tuple[RunRow, float]:
    p, v = args
    cfg = soliton_config(p, v)
    grid = cfg.grid
    box = SubBox.cube(p["lb"], 1)
    ref = lambda t: soliton_reference(v, t, grid, p["kappa"], p["coupling"])  # noqa: E731
    norm0 = ref(0.0).norm()
    worst = [0.0]

    def watch(t, f):
        worst[0] = max(worst[0], error_on_box(f, ref(t), box, norm0))

    start = _time.perf_counter()
    _, report = run_tdpsf(cfg, ref(0.0), observer=watch)
    return _row("tdpsf", f"v={v:g}", report, worst[0], _time.perf_counter() - start), worst[0]


def _run_soliton(preset: ExperimentPreset, workers: int, result: ExperimentResult) -> None:
    p = preset.params
    vs = sorted(p["velocities"])
    outcomes = _map(_soliton_task, [(p, v) for v in vs], workers)
    result.runs.extend(r for r, _ in outcomes)
    result.series.append(MetricSeries("E_of_v", "", vs, [e for _, e in outcomes]))


# ---------------------------------------------------------------- longrange2d


def longrange_initial(grid: GridSpec) -> Field:
    x, y = grid.mesh()
    envelope = np.exp(-(x**2 + y**2) / 20)
    return Field(grid, envelope * (np.exp(7j * y) + np.exp(4j * x)))


def longrange_config(p: dict) -> TdpsfConfig:
    grid = make_grid(2, p["half_width"], p["points"])
    frame = FrameParams.from_spacing(p["sigma"], p["xs"], p["ks"]).snapped(grid)
    T = _snap_time(p["final_time"], p["tstep"])
    cl = ClassifierConfig(p["eps"], p["lb"], p["wb"], p["tstep"], T, frame, grid.kmax, 2, p["norm"], 2 * p["kappa"], dx=grid.dx)
    model = LongRange(p["depth"], p["scale"])
    stepper = StepperConfig(p["dt"], record_interval=int(round(p["tstep"] / p["dt"])), kappa=p["kappa"])
    return TdpsfConfig(cl, stepper, grid, model, halt_on_ambiguous=p["halt"])


def free_validity_time(half_width: float, region: float, speed: float, width2: float, kappa: float,
                       tol: float, horizon: float, step: float) -> float:
    """Last multiple of ``step`` before the periodic images of a free packet exceed ``tol`` on the region.

    The packet starts at the origin with squared width ``width2`` and moves
    with ``speed``; the images sit at multiples of ``2*half_width``.
    """
    x = np.linspace(-region, region, 401)
    last = 0.0
    for t in np.arange(step, horizon + step / 2, step):
        alpha = width2 + 2j * kappa * t
        amp = abs(np.sqrt(width2 / alpha))
        for shift in (-2 * half_width, 2 * half_width):
            if amp * np.max(np.abs(np.exp(-((x + shift - speed * t) ** 2) / (2 * alpha)))) > tol:
                return last
        last = float(t)
    return last


def _longrange_distant(p: dict, box: SubBox, samples: int) -> tuple[list[np.ndarray], list[float], float]:
    """Periodic run on the distant box; interior samples every Tstep and the peak edge-band mass."""
    grid = make_grid(2, p["distant_half_width"], int(round(p["points"] * p["distant_half_width"] / p["half_width"])))
    psi = longrange_initial(grid)
    stepper = StepperConfig(p["dt"], kappa=p["kappa"])
    model = LongRange(p["depth"], p["scale"])
    edge_band = ~SubBox.cube(p["distant_half_width"] - p["wb"], 2).mask(grid)
    inner, mass, worst_edge = [], [], 0.0
    t = 0.0
    for n in range(1, samples + 1):
        psi = split_step_evolve(psi, model, stepper, p["tstep"], t0=t)
        t = n * p["tstep"]
        inner.append(_box_values(psi, box))
        mass.append(l2_norm_on_box(psi, box))
        worst_edge = max(worst_edge, float(np.sqrt(np.sum(np.abs(psi.values[edge_band]) ** 2) * grid.cell_volume)))
    return inner, mass, worst_edge


def _run_longrange(preset: ExperimentPreset, workers: int, result: ExperimentResult) -> None:
    p = preset.params
    cfg = longrange_config(p)
    grid = cfg.grid
    box = SubBox.cube(p["region"], 2)
    psi0 = longrange_initial(grid)
    norm0 = psi0.norm()
    n_events = int(round(cfg.run_time / p["tstep"]))
    n_compare = int(round(p["compare_time"] / p["tstep"]))
    times = [(n + 1) * p["tstep"] for n in range(n_events)]

    start = _time.perf_counter()
    valid_until = free_validity_time(p["distant_half_width"], p["region"], p["launch_speed"], 10.0,
                                     p["kappa"], 1e-8, p["compare_time"], p["tstep"])
    if valid_until < p["compare_time"]:
        raise RuntimeError(
            f"distant-boundary reference is only valid up to t={valid_until:g}, "
            f"compare_time={p['compare_time']:g} is too late"
        )
    distant, distant_mass, edge = _longrange_distant(p, box, n_compare)
    result.runs.append(RunRow("distant_boundary", "reference", "Completed", 0.0, wall_time=_time.perf_counter() - start))
    result.extras["distant_edge_mass"] = f"{edge:.3e}"

    def sampler(store_err, store_mass):
        def watch(t, f):
            n = int(round(t / p["tstep"]))
            if not math.isclose(t, n * p["tstep"], abs_tol=1e-9) or n == 0:
                return
            store_mass.append(l2_norm_on_box(f, box))
            if n <= n_compare:
                diff = _box_values(f, box) - distant[n - 1]
                store_err.append(float(np.sqrt(np.sum(np.abs(diff) ** 2) * grid.cell_volume)) / norm0)
        return watch

    err_t, mass_t = [], []
    start = _time.perf_counter()
    validated = check_config(cfg)
    _, report = run_tdpsf(validated, psi0, observer=sampler(err_t, mass_t))
    result.runs.append(_row("tdpsf", "longrange", report, err_t[-1], _time.perf_counter() - start))
    result.extras["n_outgoing"] = validated.n_outgoing
    result.extras["n_ambiguous"] = validated.n_ambiguous

    err_a, mass_a = [], []
    absorber = gaussian_absorber(grid, p["absorber_height"], (-p["half_width"], p["half_width"]), p["absorber_width2"])
    stepper = StepperConfig(p["dt"], record_interval=int(round(p["tstep"] / p["dt"])), kappa=p["kappa"])
    start = _time.perf_counter()
    watch = sampler(err_a, mass_a)
    split_step_evolve(psi0, cfg.model + absorber, stepper, cfg.run_time,
                      observer=lambda _j, t, v: watch(t, Field(grid, v)))
    result.runs.append(RunRow("absorbing_potential", "longrange", "Completed", err_a[-1],
                              wall_time=_time.perf_counter() - start))

    result.series += [
        MetricSeries("relative_error", "tdpsf", times[:n_compare], err_t[:n_compare]),
        MetricSeries("relative_error", "absorber", times[:n_compare], err_a[:n_compare]),
        MetricSeries("M_of_t", "tdpsf", times, mass_t),
        MetricSeries("M_of_t", "absorber", times, mass_a),
        MetricSeries("M_of_t", "distant", times[:n_compare], distant_mass),
    ]
    window = [i for i, t in enumerate(times) if t >= p["plateau_start"] - 1e-9]
    for tag, m in (("tdpsf", mass_t), ("absorber", mass_a)):
        seg = np.asarray(m)[window]
        result.extras[f"M_variation_{tag}"] = f"{(seg.max() - seg.min()) / seg.max():.6g}"
        result.extras[f"M_decrease_{tag}"] = f"{(seg[0] - seg[-1]) / seg[0]:.6g}"
    result.extras["error_tdpsf_final"] = f"{err_t[n_compare - 1]:.6g}"
    result.extras["error_absorber_final"] = f"{err_a[n_compare - 1]:.6g}"


# ---------------------------------------------------------------- driver


def _map(fn: Callable, tasks: Sequence, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


_RUNNERS = {"freewave1d": _run_freewave, "soliton1d": _run_soliton, "longrange2d": _run_longrange}


def run_experiment(preset: ExperimentPreset | str, overrides: dict | None = None, *, scale: str = "ci",
                   workers: int = 1, out_dir: str | Path | None = None) -> ExperimentResult:
    """Run every baseline of ``preset`` and optionally write the report to ``out_dir``.

    Raises:
        ConfigurationError: if the preset parameters violate a run constraint.
    """
    if isinstance(preset, str):
        preset = make_preset(preset, scale, overrides)
    elif overrides:
        preset = make_preset(preset.name, preset.scale, {**preset.params, **overrides})
    result = ExperimentResult(preset.name, preset.scale, dict(preset.params))
    result.extras["velocity_factor"] = f"{calibrate_velocity_factor(preset.params['kappa']):.9g}"
    start = _time.perf_counter()
    _RUNNERS[preset.name](preset, max(1, int(workers)), result)
    result.wall_time = _time.perf_counter() - start
    if out_dir is not None:
        emit_report(result, out_dir)
    return result


def _fmt(v: float) -> str:
    return repr(float(v))


def emit_report(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    """Write ``<preset>_<metric>.csv`` per series, ``<preset>_runs.csv`` and ``<preset>_summary.txt``.

    CSV contents depend only on the computed numbers; timings go to the summary.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for s in result.series:
            path = out / f"{result.preset}_{s.stem}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(s.header)
                w.writerows((_fmt(a), _fmt(b)) for a, b in zip(s.x, s.y))
            written.append(path)
        if result.runs:
            path = out / f"{result.preset}_runs.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["baseline", "label", "status", "error", "fail_time", "ambiguous_mass"])
                for r in result.runs:
                    w.writerow([r.baseline, r.label, r.status, _fmt(r.error), _fmt(r.fail_time), _fmt(r.ambiguous_mass)])
            written.append(path)
        path = out / f"{result.preset}_summary.txt"
        lines = [f"preset = {result.preset}", f"scale = {result.scale}"]
        for key in sorted(result.params):
            value = result.params[key]
            if isinstance(value, list):
                value = ",".join(f"{v:g}" for v in value)
            lines.append(f"param.{key} = {value}")
        for key in sorted(result.extras):
            lines.append(f"{key} = {result.extras[key]}")
        for i, r in enumerate(result.runs):
            lines.append(f"run.{i}.{r.baseline}.{r.label} = {r.status} wall={r.wall_time:.2f}s")
        lines.append(f"ambiguous_failures = {len(result.ambiguous_failures)}")
        lines.append(f"wall_time = {result.wall_time:.2f}")
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return written
