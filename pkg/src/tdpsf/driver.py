"""Filtered propagation: evolve, delete outgoing framelets, watch ambiguous mass."""

from __future__ import annotations

import csv
import logging
import math
import time as _time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_field
from .classifier import ClassifierConfig, ConfigurationError, FilterSets, build_filter_sets
from .frame import DualWindow, WFTOperator, compute_dual_window
from .lattice import Field, GridSpec, SubBox, hs_norm, l2_norm_on_box
from .propagator import NonlinearityModel, NumericalBlowup, StepperConfig, Zero, calibrate_velocity_factor, split_step_evolve

__all__ = [
    "TdpsfConfig",
    "ValidatedConfig",
    "FilterEvent",
    "Completed",
    "AmbiguousMassExceeded",
    "RunReport",
    "check_config",
    "run_tdpsf",
    "PhaseSpaceFilter",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TdpsfConfig:
    """Everything a filtered run needs.

    ``halt_on_ambiguous`` stops the run at the first event whose ambiguous mass
    exceeds ``eps``; when False the exceedance is recorded and the run goes on.
    ``duration`` defaults to the classifier horizon ``Tmax``.
    """

    classifier: ClassifierConfig
    stepper: StepperConfig
    grid: GridSpec
    model: NonlinearityModel = field(default_factory=Zero)
    halt_on_ambiguous: bool = True
    duration: float | None = None
    initial_tolerance: float | None = None

    @property
    def eps(self) -> float:
        return self.classifier.eps

    @property
    def frame(self):
        return self.classifier.frame

    @property
    def run_time(self) -> float:
        return self.classifier.Tmax if self.duration is None else self.duration


@dataclass(frozen=True, eq=False)
class ValidatedConfig:
    config: TdpsfConfig
    velocity_factor: float
    dual: DualWindow
    sets: FilterSets

    @property
    def truncation_radius(self) -> float:
        return self.dual.truncation_radius

    @property
    def n_outgoing(self) -> int:
        return len(self.sets.outgoing)

    @property
    def n_ambiguous(self) -> int:
        return len(self.sets.ambiguous)


def check_config(cfg: TdpsfConfig) -> ValidatedConfig:
    """Validate the run configuration and precompute dual window and filter sets.

    Raises:
        ConfigurationError: listing every violated constraint.
    """
    problems: list[str] = []
    cl, st, grid = cfg.classifier, cfg.stepper, cfg.grid
    ratio = cl.Tstep / st.dt
    if not math.isclose(ratio, round(ratio), rel_tol=0, abs_tol=1e-9 * max(1.0, ratio)):
        problems.append(f"Tstep={cl.Tstep} is not an integer multiple of dt={st.dt}")
    events = cfg.run_time / cl.Tstep
    if not math.isclose(events, round(events), rel_tol=0, abs_tol=1e-9 * max(1.0, events)):
        problems.append(f"run time {cfg.run_time} is not an integer multiple of Tstep={cl.Tstep}")
    if grid.ndim != cl.ndim:
        problems.append(f"grid has {grid.ndim} dimensions, classifier {cl.ndim}")
    edge = cl.Lb + cl.wb
    if grid.half_width < edge - 1e-9 * edge:
        problems.append(f"computational box half width {grid.half_width} is smaller than Lb+wb = {edge}")
    if cl.kmax > grid.kmax * (1 + 1e-12):
        problems.append(f"kmax={cl.kmax} exceeds the grid Nyquist wavenumber {grid.kmax}")
    try:
        cl.frame.steps(grid)
    except ValueError as exc:
        problems.append(str(exc))
    nu = calibrate_velocity_factor(st.kappa)
    if not math.isclose(nu, cl.velocity_factor, rel_tol=1e-3):
        problems.append(
            f"classifier velocity factor {cl.velocity_factor} disagrees with the measured transport speed {nu:.6g}"
        )
    if problems:
        raise ConfigurationError(problems)
    dual = compute_dual_window(cl.frame, grid)
    sets = build_filter_sets(cl, grid)
    return ValidatedConfig(cfg, nu, dual, sets)


@dataclass(frozen=True)
class FilterEvent:
    time: float
    filtered_mass: float
    ambiguous_mass: float
    interior_norm: float
    total_norm: float


@dataclass(frozen=True)
class Completed:
    name = "Completed"


@dataclass(frozen=True)
class AmbiguousMassExceeded:
    time: float
    value: float
    eps: float
    name = "AmbiguousMassExceeded"


@dataclass
class RunReport:
    """Append-only record of a run; optionally streamed to a CSV file as it grows."""

    eps: float
    events: list[FilterEvent] = field(default_factory=list)
    termination: Completed | AmbiguousMassExceeded = field(default_factory=Completed)
    exceedances: list[AmbiguousMassExceeded] = field(default_factory=list)
    wall_time: float = 0.0
    sink: Path | None = None

    _HEADER = ("t", "filtered_mass", "ambiguous_mass", "interior_norm", "total_norm")

    def __post_init__(self):
        if self.sink is not None:
            self.sink = Path(self.sink)
            with self.sink.open("w", newline="") as fh:
                csv.writer(fh, lineterminator="\n").writerow(self._HEADER)

    def append(self, event: FilterEvent) -> None:
        if self.events and event.time <= self.events[-1].time:
            raise ValueError("filter events must be strictly increasing in time")
        self.events.append(event)
        if self.sink is not None:
            with self.sink.open("a", newline="") as fh:
                csv.writer(fh, lineterminator="\n").writerow(
                    [f"{v:.12g}" for v in (event.time, event.filtered_mass, event.ambiguous_mass,
                                           event.interior_norm, event.total_norm)]
                )

    @property
    def failed(self) -> bool:
        return bool(self.exceedances)

    @property
    def status(self) -> str:
        return self.termination.name

    def series(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        t = np.array([e.time for e in self.events])
        return t, np.array([getattr(e, name) for e in self.events])


Observer = Callable[[float, Field], None]


def run_tdpsf(
    cfg: TdpsfConfig | ValidatedConfig,
    psi0: Field,
    observer: Observer | None = None,
    report_path: Path | None = None,
    filter_enabled: bool = True,
) -> tuple[Field, RunReport]:
    """Evolve ``psi0``, filtering every ``Tstep``.

    Each event evolves by ``Tstep``, analyses once over the buffer lattice,
    subtracts the outgoing part and measures the ambiguous part (in the
    classifier norm) of the pre-filter field.  ``observer(t, field)`` sees the
    field after every event and at intermediate ``record_interval`` steps.
    With ``filter_enabled=False`` nothing is subtracted.

    Raises:
        NumericalBlowup: if the field becomes non-finite.
    """
    validated = cfg if isinstance(cfg, ValidatedConfig) else check_config(cfg)
    cfg = validated.config
    grid = cfg.grid
    psi = check_field(psi0, grid)
    cl = cfg.classifier
    report = RunReport(cfg.eps, sink=report_path)
    interior = SubBox.cube(cl.Lb, grid.ndim)
    if cfg.initial_tolerance is not None:
        outside = math.sqrt(max(psi.norm() ** 2 - l2_norm_on_box(psi, interior) ** 2, 0.0))
        if outside > cfg.initial_tolerance:
            log.warning("initial data has mass %.3e outside the interior box", outside)

    sets = validated.sets
    op = WFTOperator(grid, validated.dual, sets.layout.positions)
    out_mask = sets.outgoing.mask_on(op.layout)
    amb_mask = sets.ambiguous.mask_on(op.layout)
    sobolev = 1.0 if cl.norm == "H1" else 0.0
    n_events = int(round(cfg.run_time / cl.Tstep))
    start = _time.perf_counter()

    step_observer = None
    if observer is not None:
        step_observer = _skip_last(lambda _j, t, values: observer(t, Field(grid, values)), cl.Tstep, cfg.stepper)

    t = 0.0
    for n in range(1, n_events + 1):
        psi = split_step_evolve(psi, cfg.model, cfg.stepper, cl.Tstep, t0=t, observer=step_observer)
        t = n * cl.Tstep
        coef = op.analyze(psi.values)
        amb_values = op.synthesize(np.where(amb_mask, coef, 0))
        amb = hs_norm(Field(grid, amb_values), sobolev) if amb_mask.any() else 0.0
        if filter_enabled and out_mask.any():
            out_values = op.synthesize(np.where(out_mask, coef, 0))
            filtered = Field(grid, out_values).norm()
            psi = Field(grid, psi.values - out_values)
        else:
            filtered = 0.0
        if not np.all(np.isfinite(psi.values)):
            raise NumericalBlowup(n, t)
        report.append(FilterEvent(t, filtered, amb, l2_norm_on_box(psi, interior), psi.norm()))
        if observer is not None:
            observer(t, psi)
        if amb > cfg.eps:
            failure = AmbiguousMassExceeded(t, amb, cfg.eps)
            report.exceedances.append(failure)
            if isinstance(report.termination, Completed):
                report.termination = failure
            if cfg.halt_on_ambiguous:
                log.info("ambiguous mass %.3e > eps=%.1e at t=%g; stopping", amb, cfg.eps, t)
                break
    report.wall_time = _time.perf_counter() - start
    return psi, report


def _skip_last(callback, tstep: float, stepper: StepperConfig):
    """Forward intermediate samples only; the post-filter field covers the event time."""
    steps = stepper.steps_for(tstep)

    def wrapped(j, t, values):
        if j != steps:
            callback(j, t, values)

    return wrapped


class PhaseSpaceFilter(TransformerMixin, BaseEstimator):
    """The outgoing-framelet projection as a transformer.

    ``fit`` validates the configuration and builds the filter sets;
    ``transform`` removes the outgoing part of a field once, and
    ``ambiguous_mass`` reports the monitored quantity.
    """

    def __init__(self, config: TdpsfConfig | None = None):
        self.config = config

    def fit(self, X=None, y=None):
        if self.config is None:
            raise ValueError("PhaseSpaceFilter needs a TdpsfConfig")
        self.validated_ = check_config(self.config)
        sets = self.validated_.sets
        self.operator_ = WFTOperator(self.config.grid, self.validated_.dual, sets.layout.positions)
        self.outgoing_mask_ = sets.outgoing.mask_on(self.operator_.layout)
        self.ambiguous_mask_ = sets.ambiguous.mask_on(self.operator_.layout)
        return self

    def outgoing_part(self, X: Field) -> Field:
        check_is_fitted(self, "operator_")
        coef = self.operator_.analyze(check_field(X, self.config.grid).values)
        return Field(X.grid, self.operator_.synthesize(np.where(self.outgoing_mask_, coef, 0)))

    def transform(self, X: Field) -> Field:
        return X - self.outgoing_part(X)

    def ambiguous_mass(self, X: Field) -> float:
        check_is_fitted(self, "operator_")
        coef = self.operator_.analyze(check_field(X, self.config.grid).values)
        amb = Field(X.grid, self.operator_.synthesize(np.where(self.ambiguous_mask_, coef, 0)))
        return hs_norm(amb, 1.0 if self.config.classifier.norm == "H1" else 0.0)

    def evolve(self, X: Field, observer: Observer | None = None) -> tuple[Field, RunReport]:
        check_is_fitted(self, "validated_")
        return run_tdpsf(self.validated_, X, observer=observer)
