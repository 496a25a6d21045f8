import math

import numpy as np
import pytest
from scipy import constants as sp

from talbot.exceptions import ConfigurationError, DomainError, UsageError
from talbot.services.scaling import (
    PROTON,
    GridSpec,
    PacketSpec,
    PhysicalConstants,
    WaveField,
    build_frame,
    check_packet_fits,
    frame_from_length,
    from_dimensionless,
    init_packet,
    norm,
    talbot_length,
    to_dimensionless,
)


def test_build_frame_reproduces_reference_scales():
    frame = build_frame(0.332e-3 * sp.e)
    assert frame.gamma == pytest.approx(2.5e-10, rel=1e-3)
    assert frame.tau == pytest.approx(1.982e-12, rel=1e-3)


def test_build_frame_rejects_non_positive_energy():
    with pytest.raises(DomainError):
        build_frame(0.0)
    with pytest.raises(DomainError):
        build_frame(-1.0)


def test_frame_from_length_inverts_build_frame():
    frame = build_frame(0.332e-3 * sp.e)
    again = frame_from_length(frame.gamma)
    assert again.V0 == pytest.approx(frame.V0, rel=1e-12)
    assert again.tau == pytest.approx(frame.tau, rel=1e-12)


def test_unit_conversion_round_trip(frame):
    assert from_dimensionless(to_dimensionless(3e-9, "length", frame), "length", frame) == pytest.approx(3e-9)
    assert to_dimensionless(frame.tau, "time", frame) == pytest.approx(1.0)
    with pytest.raises(UsageError):
        frame.scale_of("charge")


def test_species_presets_carry_mass_and_charge():
    electron = PhysicalConstants.for_species("electron")
    assert electron.mass == sp.m_e
    assert electron.charge == -sp.e
    assert PROTON.species == "proton"
    with pytest.raises(DomainError):
        PhysicalConstants.for_species("muonium")


def test_talbot_length():
    assert talbot_length(100e-9, 1e-9) == pytest.approx(1e-5)


def test_grid_invariants():
    with pytest.raises(ConfigurationError):
        GridSpec(8, 64, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        GridSpec(64, 64, 1.0, 0.5)
    grid = GridSpec(32, 16, 0.5, 0.5, (-4.0, 1.0))
    assert grid.shape == (32, 16)
    assert grid.x_range == (-4.0, 11.5)
    X, Y = grid.mesh()
    assert X.shape == grid.shape and Y[0, 1] == pytest.approx(1.5)


def test_resolution_guard_rejects_four_points_per_wavelength():
    grid = GridSpec(64, 64, 1.0, 1.0)
    with pytest.raises(ConfigurationError, match="points"):
        grid.check_resolution(2.0 * math.pi / 4.0)
    grid.check_resolution(2.0 * math.pi / 8.5)


def test_packet_must_fit_inside_lattice(square_grid):
    packet = PacketSpec(sigma_x=4.0, sigma_y=4.0, center=(-20.0, 0.0), k=0.5)
    with pytest.raises(ConfigurationError, match="along X"):
        check_packet_fits(packet, square_grid)


def test_init_packet_is_normalized_and_centred(square_grid, slow_packet):
    dt = 0.01
    field = init_packet(slow_packet, square_grid, dt)
    assert norm(field) == pytest.approx(1.0, abs=1e-12)
    density = field.density
    x_mean = float((density.sum(axis=1) * square_grid.x).sum() / density.sum())
    assert x_mean == pytest.approx(slow_packet.center[0], abs=1e-3)
    assert field.imag_prev is not None
    assert field.step_index == 0 and field.time == 0.0


def test_init_packet_rejects_under_resolved_packet(square_grid):
    packet = PacketSpec(sigma_x=4.0, sigma_y=4.0, center=(0.0, 0.0), k=2.0 * math.pi / 3.0)
    with pytest.raises(ConfigurationError):
        init_packet(packet, square_grid, 0.01)


def test_wavefield_shape_and_psi(square_grid):
    zeros = np.zeros(square_grid.shape)
    with pytest.raises(ConfigurationError):
        WaveField(real=np.zeros((3, 3)), imag=zeros, grid=square_grid, dt=0.1)
    field = WaveField(real=zeros + 1.0, imag=zeros + 2.0, grid=square_grid, dt=0.1, imag_prev=zeros)
    assert field.psi[0, 0] == pytest.approx(1.0 + 1.0j)
    reloaded = WaveField(real=zeros + 1.0, imag=zeros + 2.0, grid=square_grid, dt=0.1)
    assert reloaded.psi[0, 0] == pytest.approx(1.0 + 2.0j)
    assert norm(reloaded, staggered=False) == pytest.approx(5.0 * square_grid.size * 0.25)


def test_packet_spec_validation():
    with pytest.raises(DomainError):
        PacketSpec(sigma_x=0.0, sigma_y=1.0, center=(0.0, 0.0), k=1.0)
    with pytest.raises(DomainError):
        PacketSpec(sigma_x=1.0, sigma_y=1.0, center=(0.0, 0.0), k=0.0)
    assert PacketSpec(1.0, 1.0, (0.0, 0.0), math.pi).wavelength == pytest.approx(2.0)


def test_field_force_uses_particle_charge(frame):
    assert frame.field_force(1.0) == pytest.approx(sp.e * frame.gamma / frame.V0)
    assert frame.wavenumber_to_physical(1.0) == pytest.approx(1.0 / frame.gamma)
