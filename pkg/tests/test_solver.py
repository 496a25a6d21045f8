import math

import numpy as np
import pytest

from talbot.exceptions import ConfigurationError, IntegrationTimeout, NumericalFailure, UsageError
from talbot.services.oracle import analytic_free_gaussian
from talbot.services.potentials import GratingSpec, PotentialStack, UniformField
from talbot.services.scaling import GridSpec, PacketSpec, WaveField, init_packet, norm
from talbot.services.solver import (
    Boundary,
    DampingSpec,
    Edge,
    Laplacian,
    PlaneCrossing,
    Propagator,
    SolverConfig,
    StopTime,
    apply_damping,
    damping_mask,
    default_damping,
    default_dt,
    edge_damping,
    max_stable_dt,
    run_until,
    stability_check,
    step,
)
from talbot.services.spectral import position_moments


@pytest.fixture
def free_stack(frame):
    return PotentialStack(frame=frame)


def test_max_stable_dt_formula(square_grid):
    assert max_stable_dt(square_grid, 2, 0.0) == pytest.approx(0.5 / 8.0)
    assert max_stable_dt(square_grid, 4, 2.0) == pytest.approx(0.5 / (4.0 / 3.0 * 8.0 + 1.0))
    with pytest.raises(ConfigurationError):
        max_stable_dt(square_grid, 4, math.inf)


def test_stability_check_rejects_large_dt(square_grid, free_stack):
    cfg = SolverConfig(dt=1.0)
    with pytest.raises(ConfigurationError, match="stability"):
        stability_check(square_grid, cfg, free_stack)


def test_solver_config_validation():
    with pytest.raises(ConfigurationError):
        SolverConfig(dt=0.01, spatial_order=3)
    with pytest.raises(ConfigurationError):
        SolverConfig(dt=0.0)
    grid = GridSpec(32, 32, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        SolverConfig(dt=0.01, boundary=Boundary.PERIODIC, damping=default_damping(grid))


@pytest.mark.parametrize("order", [2, 4])
def test_laplacian_is_exact_on_quadratics(order):
    grid = GridSpec(32, 32, 0.5, 0.5, (-8.0, -8.0))
    X, Y = grid.mesh()
    result = Laplacian(grid, order).apply(X**2 + 3.0 * Y**2)
    np.testing.assert_allclose(result[3:-3, 3:-3], 8.0, rtol=1e-10)


def test_periodic_laplacian_of_plane_wave():
    grid = GridSpec(64, 16, 1.0, 1.0)
    k = 2.0 * math.pi * 4 / 64
    wave = np.cos(k * grid.x)[:, None] * np.ones(grid.ny)
    result = Laplacian(grid, 4, Boundary.PERIODIC).apply(wave)
    symbol = (30.0 - 32.0 * math.cos(k) + 2.0 * math.cos(2.0 * k)) / 12.0
    np.testing.assert_allclose(result, -symbol * wave, atol=1e-12)


def test_unitarity_over_thousand_steps(square_grid, slow_packet, free_stack):
    grating = GratingSpec(period=8.0, opening_fraction=0.5, thickness=2.0, barrier=1.0, x_position=4.0)
    stack = PotentialStack(frame=free_stack.frame, grating=grating)
    dt = default_dt(square_grid, stack)
    cfg = SolverConfig(dt=dt, norm_check_interval=50)
    field = init_packet(slow_packet, square_grid, dt)
    propagator = Propagator(square_grid, stack, cfg)
    start = norm(field)
    for _ in range(1000):
        propagator.advance(field)
    assert abs(norm(field) - start) < 1e-6
    assert field.step_index == 1000


def test_periodic_plane_wave_follows_discrete_dispersion(frame):
    grid = GridSpec(64, 16, 1.0, 1.0)
    k = 2.0 * math.pi * 4 / 64
    cfg = SolverConfig(dt=0.05, spatial_order=4, boundary=Boundary.PERIODIC)
    symbol = (30.0 - 32.0 * math.cos(k) + 2.0 * math.cos(2.0 * k)) / 12.0
    # leapfrog eigenfrequency of a mode with H = symbol
    omega = 2.0 / cfg.dt * math.asin(0.5 * cfg.dt * symbol)
    x = grid.x[:, None] * np.ones(grid.ny)
    field = WaveField(
        real=np.cos(k * x),
        imag=np.sin(k * x - omega * 0.5 * cfg.dt),
        grid=grid,
        dt=cfg.dt,
        imag_prev=np.sin(k * x + omega * 0.5 * cfg.dt),
    )
    propagator = Propagator(grid, PotentialStack(frame=frame), cfg)
    for _ in range(200):
        propagator.advance(field)
    np.testing.assert_allclose(field.real, np.cos(k * x - omega * field.time), atol=1e-9)


def test_group_velocity_and_spreading(free_stack):
    grid = GridSpec(192, 128, 0.5, 0.5, (-40.0, -32.0))
    packet = PacketSpec(sigma_x=4.0, sigma_y=4.0, center=(-12.0, 0.0), k=2.0 * math.pi / 16.0)
    dt = default_dt(grid, free_stack)
    cfg = SolverConfig(dt=dt)
    field = init_packet(packet, grid, dt)
    # about twice the initial width
    target = 16.0
    (snap,) = run_until(field, free_stack, cfg, [StopTime(target)])
    moments = position_moments(snap)
    expected = analytic_free_gaussian(packet, snap.time)
    assert moments["mean_x"] == pytest.approx(expected.center[0], abs=0.05)
    assert moments["sigma_x"] == pytest.approx(expected.sigma_x, rel=0.01)
    assert moments["sigma_y"] == pytest.approx(expected.sigma_y, rel=0.01)


def test_ehrenfest_transverse_impulse(square_grid, slow_packet, frame):
    E0 = 100.0
    region = (-40.0, 40.0)
    f = UniformField(E0=E0, region=region, theta=math.pi / 2)
    stack = PotentialStack(frame=frame, fields=(f,))
    dt = default_dt(square_grid, stack)
    cfg = SolverConfig(dt=dt)
    field = init_packet(slow_packet, square_grid, dt)
    (snap,) = run_until(field, stack, cfg, [StopTime(10.0)])
    psi = snap.psi
    grad_y = np.gradient(psi, square_grid.dy, axis=1)
    ky = float(np.imag(np.sum(np.conj(psi) * grad_y)) / np.sum(np.abs(psi) ** 2))
    expected = frame.field_force(E0) * snap.time
    assert ky == pytest.approx(expected, rel=0.01)


def test_damping_profile_orientation(square_grid):
    left = edge_damping(square_grid, Edge.LEFT, 2.0)
    right = edge_damping(square_grid, "right", 2.0)
    assert left.sharpness > 0 and right.sharpness < 0
    assert left.profile(square_grid.x_range[0]) == pytest.approx(0.5)
    assert left.profile(square_grid.x_range[1]) == pytest.approx(1.0)
    assert right.profile(square_grid.x_range[0]) == pytest.approx(1.0)
    mask = damping_mask(square_grid, default_damping(square_grid, 2.0))
    assert mask.shape == square_grid.shape
    assert mask[64, 64] == pytest.approx(1.0, abs=1e-5)
    assert mask[0, 0] == pytest.approx(0.25)
    with pytest.raises(ValueError):
        DampingSpec("diagonal", 1.0, 0.0)


def test_apply_damping_reduces_edge_amplitude(square_grid):
    ones = np.ones(square_grid.shape)
    field = WaveField(real=ones, imag=ones.copy(), grid=square_grid, dt=0.01)
    damped = apply_damping(field, default_damping(square_grid, 2.0))
    assert damped.real[0, 64] == pytest.approx(0.5, abs=1e-5)
    assert field.real[0, 64] == 1.0


def test_damping_absorbs_outgoing_packet(frame):
    grid = GridSpec(160, 64, 0.5, 0.5, (-40.0, -16.0))
    stack = PotentialStack(frame=frame)
    packet = PacketSpec(sigma_x=3.0, sigma_y=2.5, center=(10.0, 0.0), k=1.0)
    dt = default_dt(grid, stack)
    cfg = SolverConfig(dt=dt, damping=default_damping(grid, 2.0))
    field = init_packet(packet, grid, dt)
    (snap,) = run_until(field, stack, cfg, [StopTime(80.0)])
    assert norm(snap, staggered=False) < 1e-3


def test_plane_crossing_snapshots_in_order(square_grid, slow_packet, free_stack):
    dt = default_dt(square_grid, free_stack)
    cfg = SolverConfig(dt=dt)
    field = init_packet(slow_packet, square_grid, dt)
    first, second = run_until(field, free_stack, cfg, [PlaneCrossing(-3.0, "a"), PlaneCrossing(0.0, "b")])
    assert first.step_index < second.step_index
    assert position_moments(first)["mean_x"] >= -3.0
    assert position_moments(second)["mean_x"] == pytest.approx(0.0, abs=0.05)
    # the input field is left untouched
    assert field.step_index == 0


def test_schedule_must_be_sorted(square_grid, slow_packet, free_stack):
    dt = default_dt(square_grid, free_stack)
    field = init_packet(slow_packet, square_grid, dt)
    with pytest.raises(UsageError):
        run_until(field, free_stack, SolverConfig(dt=dt), [StopTime(2.0), StopTime(1.0)])


def test_plane_never_reached_times_out(square_grid, slow_packet, free_stack):
    dt = default_dt(square_grid, free_stack)
    field = init_packet(slow_packet, square_grid, dt)
    with pytest.raises(IntegrationTimeout):
        run_until(field, free_stack, SolverConfig(dt=dt, max_steps=50), [PlaneCrossing(20.0)])


def test_non_finite_lattice_raises_numerical_failure(square_grid, slow_packet, free_stack):
    dt = default_dt(square_grid, free_stack)
    field = init_packet(slow_packet, square_grid, dt)
    field.real[64, 64] = np.nan
    with pytest.raises(NumericalFailure) as info:
        Propagator(square_grid, free_stack, SolverConfig(dt=dt)).advance(field)
    assert info.value.step_index == 1


def test_step_rejects_mismatched_dt(square_grid, slow_packet, free_stack):
    field = init_packet(slow_packet, square_grid, 0.01)
    with pytest.raises(UsageError):
        step(field, free_stack, SolverConfig(dt=0.02))


@pytest.mark.parametrize("order, ratio", [(2, 4.0), (4, 16.0)])
def test_laplacian_converges_at_its_order(order, ratio):
    width = 2.0

    def error(dx):
        n = int(round(24.0 / dx)) + 1
        grid = GridSpec(n, n, dx, dx, (-12.0, -12.0))
        X, Y = grid.mesh()
        r2 = X**2 + Y**2
        gaussian = np.exp(-r2 / (2.0 * width**2))
        exact = gaussian * (r2 / width**4 - 2.0 / width**2)
        inner = (np.abs(X) < 6.0) & (np.abs(Y) < 6.0)
        return np.abs(Laplacian(grid, order).apply(gaussian) - exact)[inner].max()

    assert error(0.25) / error(0.125) == pytest.approx(ratio, rel=0.1)


def test_step_is_linear(square_grid, slow_packet, frame):
    grating = GratingSpec(period=8.0, opening_fraction=0.5, thickness=2.0, barrier=1.0, x_position=4.0)
    stack = PotentialStack(frame=frame, grating=grating)
    dt = default_dt(square_grid, stack)
    cfg = SolverConfig(dt=dt, damping=default_damping(square_grid, 2.0))
    first = init_packet(slow_packet, square_grid, dt)
    second = init_packet(PacketSpec(sigma_x=3.0, sigma_y=5.0, center=(6.0, 4.0), k=0.5), square_grid, dt)
    a, b = 0.7, -1.3

    def mix(u, v):
        return WaveField(
            real=a * u.real + b * v.real,
            imag=a * u.imag + b * v.imag,
            grid=square_grid,
            dt=dt,
            imag_prev=a * u.imag_prev + b * v.imag_prev,
        )

    combined = step(mix(first, second), stack, cfg)
    separate = mix(step(first, stack, cfg), step(second, stack, cfg))
    np.testing.assert_allclose(combined.real, separate.real, atol=1e-12)
    np.testing.assert_allclose(combined.imag, separate.imag, atol=1e-12)
