import math

import numpy as np
import pytest

from talbot.exceptions import ConfigurationError, ResolutionError, UsageError
from talbot.services.oracle import (
    OracleConfig,
    OracleMethod,
    SpectralPropagator,
    analytic_free_gaussian,
    l2_distance,
    seam_jump,
    spectral_step,
    spectral_tail,
)
from talbot.services.potentials import GratingSpec, PotentialStack, UniformField
from talbot.services.scaling import GridSpec, PacketSpec, analytic_packet, init_packet
from talbot.services.solver import Propagator, SolverConfig, default_dt


def _normalized(psi, grid):
    return psi / math.sqrt(float(np.sum(np.abs(psi) ** 2)) * grid.dx * grid.dy)


@pytest.fixture
def oracle_grid():
    return GridSpec(256, 256, 0.25, 0.25, (-32.0, -32.0))


def test_oracle_config_guards():
    with pytest.raises(ConfigurationError):
        OracleConfig(dt=0.01, grid=GridSpec(512, 256, 0.25, 0.25))
    with pytest.raises(ConfigurationError):
        OracleConfig(dt=0.0, grid=GridSpec(64, 64, 0.5, 0.5))
    assert OracleConfig(dt=0.01, grid=GridSpec(64, 64, 0.5, 0.5), method="analytic-free-gaussian").method is (
        OracleMethod.ANALYTIC
    )


def test_split_operator_propagates_free_packet_exactly(frame, oracle_grid):
    packet = PacketSpec(sigma_x=4.0, sigma_y=4.0, center=(-8.0, 0.0), k=0.5)
    cfg = OracleConfig(dt=0.05, grid=oracle_grid)
    psi0 = analytic_packet(packet, oracle_grid, 0.0)
    scale = 1.0 / math.sqrt(float(np.sum(np.abs(psi0) ** 2)) * oracle_grid.dx * oracle_grid.dy)
    psi = SpectralPropagator(PotentialStack(frame=frame), cfg).evolve(scale * psi0, 200)
    expected = scale * analytic_packet(packet, oracle_grid, 10.0)
    assert l2_distance(psi, expected, oracle_grid) < 1e-8


def test_analytic_free_gaussian_widths_and_centre():
    packet = PacketSpec(sigma_x=4.0, sigma_y=2.0, center=(-5.0, 1.0), k=0.5)
    start = analytic_free_gaussian(packet, 0.0)
    assert start.sigma_x == pytest.approx(4.0 / math.sqrt(2.0))
    assert start.center == (-5.0, 1.0)
    later = analytic_free_gaussian(packet, 8.0)
    assert later.center == pytest.approx((3.0, 1.0))
    s0 = 2.0 / math.sqrt(2.0)
    assert later.sigma_y == pytest.approx(s0 * math.sqrt(1.0 + (8.0 / s0**2) ** 2))


def test_leapfrog_agrees_with_split_operator_through_finite_slits(frame):
    grid = GridSpec(256, 256, 0.125, 0.125, (-16.0, -16.0))
    packet = PacketSpec(sigma_x=2.0, sigma_y=2.0, center=(-4.0, 0.0), k=1.0)
    # three slits cut in a block 1.5 times the beam energy high, open beyond |Y| = 6
    grating = GratingSpec(period=4.0, opening_fraction=0.5, thickness=3.0, barrier=1.5, half_width=6.0)
    stack = PotentialStack(frame=frame, grating=grating)
    dt = default_dt(grid, stack)
    steps = int(round(3.0 / dt))

    field = init_packet(packet, grid, dt)
    propagator = Propagator(grid, stack, SolverConfig(dt=dt))
    for _ in range(steps):
        propagator.advance(field)

    cfg = OracleConfig(dt=dt, grid=grid, alias_threshold=1e-4)
    reference = SpectralPropagator(stack, cfg).evolve(_normalized(analytic_packet(packet, grid), grid), steps)
    assert l2_distance(field.psi, reference, grid) < 1e-3


def test_potential_with_seam_jump_is_refused(frame):
    grid = GridSpec(64, 64, 0.5, 0.5, (-16.0, -16.0))
    tilted = UniformField(E0=1000.0, region=(-100.0, 100.0), theta=math.pi / 2)
    stack = PotentialStack(frame=frame, fields=(tilted,))
    assert seam_jump(stack.static_lattice(grid)) > 0
    with pytest.raises(ConfigurationError, match="seam"):
        SpectralPropagator(stack, OracleConfig(dt=0.01, grid=grid))


def test_aliased_wave_function_is_refused(frame, rng):
    grid = GridSpec(64, 64, 0.5, 0.5, (-16.0, -16.0))
    noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    assert spectral_tail(noise) > 0.5
    with pytest.raises(ResolutionError):
        spectral_step(noise, PotentialStack(frame=frame), OracleConfig(dt=0.01, grid=grid))


def test_split_operator_rejects_wrong_shape_and_method(frame):
    grid = GridSpec(64, 64, 0.5, 0.5, (-16.0, -16.0))
    stack = PotentialStack(frame=frame)
    with pytest.raises(UsageError):
        SpectralPropagator(stack, OracleConfig(dt=0.01, grid=grid, method=OracleMethod.ANALYTIC))
    with pytest.raises(UsageError):
        SpectralPropagator(stack, OracleConfig(dt=0.01, grid=grid)).step(np.zeros((32, 32), dtype=complex))
