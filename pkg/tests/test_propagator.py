import math

import numpy as np
import pytest

from tdpsf.experiments import free_gaussian_reference, soliton_reference
from tdpsf.lattice import make_grid
from tdpsf.propagator import (
    ComplexAbsorbing,
    CubicFocusing,
    LongRange,
    NumericalBlowup,
    StaticPotential,
    StepperConfig,
    Zero,
    calibrate_velocity_factor,
    free_flow_step,
    gaussian_absorber,
    nonlinearity_eval,
    split_step_evolve,
)

GRID = make_grid(1, 25.6, 512)


def packet(grid=GRID, k=2.0, c=0.0):
    x = grid.axis
    return grid.field(np.exp(-(x - c) ** 2 / 2 + 1j * k * x))


def richardson_order(run, dts):
    u = [run(dt) for dt in dts]
    e1 = (u[0] - u[1]).norm()
    e2 = (u[1] - u[2]).norm()
    return math.log2(e1 / e2)


def test_free_flow_identity_and_unitarity():
    f = packet()
    assert np.array_equal(free_flow_step(f, 0.0).values, f.values)
    for t in (0.1, 3.0, 50.0):
        assert free_flow_step(f, t).norm() == pytest.approx(f.norm(), rel=1e-12)


def test_free_flow_composes_additively():
    f = packet()
    a = free_flow_step(free_flow_step(f, 0.7), 1.1)
    assert (a - free_flow_step(f, 1.8)).norm() <= 1e-12 * f.norm()
    back = free_flow_step(free_flow_step(f, 2.5), -2.5)
    assert (back - f).norm() <= 1e-12 * f.norm()


@pytest.mark.parametrize("kappa", [0.5, 1.0])
def test_free_flow_matches_dispersive_gaussian(kappa):
    g = make_grid(1, 51.2, 1024)
    f0 = free_gaussian_reference(0.0, 3.0, 1.0, 0.0, g, kappa)
    for t in (0.5, 1.0, 2.0):
        exact = free_gaussian_reference(0.0, 3.0, 1.0, t, g, kappa)
        assert np.max(np.abs(free_flow_step(f0, t, kappa).values - exact.values)) <= 1e-10


def test_model_evaluations():
    assert not np.any(nonlinearity_eval(Zero(), packet(), 0.0).values)
    wave = GRID.field(np.exp(1j * GRID.wavenumbers[5] * GRID.axis))
    assert np.allclose(nonlinearity_eval(CubicFocusing(-2.0), wave, 0.0).values, -2.0, atol=1e-14)
    # a grid on which |x| = sqrt(380) is a sample point
    r = math.sqrt(380.0)
    g = make_grid(1, 2 * r, 64)
    vals = nonlinearity_eval(LongRange(15.0, 0.05), g.zeros(), 0.0).values.real
    assert vals[g.index_of(0.0)] == pytest.approx(-15.0, rel=1e-15)
    assert vals[g.index_of(r)] == pytest.approx(-0.75, rel=1e-12)


def test_absorber_sign_and_validation():
    a = gaussian_absorber(GRID, 25.0, (25.6,), 16.0)
    gen = nonlinearity_eval(a, GRID.zeros(), 0.0).values
    assert np.all(gen.real == 0) and np.all(gen.imag <= 0)
    assert not a.unitary
    with pytest.raises(ValueError):
        ComplexAbsorbing(-np.ones(GRID.shape))


def test_zero_model_equals_free_flow():
    f = packet()
    out = split_step_evolve(f, Zero(), StepperConfig(0.01), 3.0)
    assert (out - free_flow_step(f, 3.0)).norm() <= 1e-12 * f.norm()


def test_duration_must_be_multiple_of_dt():
    with pytest.raises(ValueError):
        split_step_evolve(packet(), Zero(), StepperConfig(0.01), 0.015)
    with pytest.raises(ValueError):
        StepperConfig(0.0)


def test_norm_conserved_for_real_generators():
    f = packet()
    model = CubicFocusing(-1.0) + LongRange()
    out = split_step_evolve(f, model, StepperConfig(0.005), 5.0)
    assert out.norm() == pytest.approx(f.norm(), rel=1e-11)


def test_time_reversal():
    x = GRID.axis
    model = StaticPotential(0.01 * x**2) + CubicFocusing(-1.0)
    cfg = StepperConfig(0.01)
    f = packet()
    forward = split_step_evolve(f, model, cfg, 2.0)
    back = split_step_evolve(forward.grid.field(np.conj(forward.values)), model, cfg, 2.0)
    assert (back.grid.field(np.conj(back.values)) - f).norm() <= 1e-9 * f.norm()


def test_absorbing_potential_is_monotone():
    g = make_grid(1, 25.6, 512)
    model = gaussian_absorber(g, 25.0, (25.6,), 16.0)
    norms = []
    split_step_evolve(packet(g, k=6.0), model, StepperConfig(0.01), 10.0,
                      observer=lambda j, t, v: norms.append(np.linalg.norm(v)))
    # nonincreasing up to floating point rounding
    assert all(b <= a * (1 + 1e-14) for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 0.5 * norms[0]


def test_observer_sees_record_interval():
    seen = []
    split_step_evolve(packet(), Zero(), StepperConfig(0.01, record_interval=5), 0.2,
                      observer=lambda j, t, v: seen.append((j, round(t, 12))))
    assert seen == [(5, 0.05), (10, 0.1), (15, 0.15), (20, 0.2)]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blowup_reported():
    growth = StaticPotential(np.full(GRID.shape, 1e5j))
    with pytest.raises(NumericalBlowup) as info:
        split_step_evolve(packet(), growth, StepperConfig(0.01), 1.0)
    assert info.value.step >= 1


def test_soliton_shape_error_is_second_order():
    g = make_grid(1, 51.2, 1024)
    errs = []
    for dt in (0.02, 0.01):
        n = 1000 if dt == 0.02 else 2000
        out = split_step_evolve(soliton_reference(2.0, 0.0, g), CubicFocusing(-2.0), StepperConfig(dt, kappa=0.5), n * dt)
        errs.append((out - soliton_reference(2.0, n * dt, g)).norm())
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_local_error_is_third_order():
    x = GRID.axis
    model = StaticPotential(-15.0 / (0.05 * x**2 + 1))
    f = packet(k=1.0)
    ref = split_step_evolve(f, model, StepperConfig(0.08 / 1024), 0.08)
    errs = [(split_step_evolve(f, model, StepperConfig(dt), dt) - split_step_evolve(f, model, StepperConfig(dt / 256), dt)).norm()
            for dt in (0.08, 0.04)]
    assert ref.norm() > 0
    assert math.log2(errs[0] / errs[1]) >= 2.8


@pytest.mark.parametrize("kappa, expected", [(1.0, 2.0), (0.5, 1.0)])
def test_velocity_calibration(kappa, expected):
    assert calibrate_velocity_factor(kappa) == pytest.approx(expected, rel=1e-3)


def test_soliton_global_order():
    period = 4 * math.pi
    f = soliton_reference(0.0, 0.0, GRID)

    def run(dt):
        return split_step_evolve(f, CubicFocusing(-2.0), StepperConfig(dt, kappa=0.5), period)

    assert richardson_order(run, [period / 200, period / 400, period / 800]) >= 1.9
