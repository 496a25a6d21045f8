"""
Dimensionless potential terms: hard-wall grating bars, the image-charge attraction
inside the slit channels, and externally applied electric fields.

All functions broadcast over array arguments and are pure. Energies are returned in
units of V0, coordinates are taken in units of gamma and times in units of tau.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum

import numpy as np

from talbot.exceptions import DomainError
from talbot.services.scaling import GridSpec, ScalingFrame

IMAGE_CLAMP_BARRIERS = 50.0
EDGE_TOLERANCE = 1e-12


class GratingRole(str, Enum):
    DIFFRACTION = "diffraction"
    MASK = "mask"


@dataclass(frozen=True)
class GratingSpec:
    """Periodic bar grating; openings are centred at ``offset + m * period``."""

    period: float
    opening_fraction: float
    thickness: float
    barrier: float
    x_position: float = 0.0
    role: GratingRole = GratingRole.DIFFRACTION
    offset: float = 0.0
    half_width: float | None = None

    def __post_init__(self):
        if not self.period > 0:
            raise DomainError(f"grating period must be positive, got {self.period!r}")
        if not 0.0 < self.opening_fraction < 1.0:
            raise DomainError(f"opening fraction must lie in (0, 1), got {self.opening_fraction!r}")
        if not self.thickness > 0:
            raise DomainError(f"grating thickness must be positive, got {self.thickness!r}")
        if not self.barrier > 0:
            raise DomainError(f"barrier height must be positive, got {self.barrier!r}")
        if self.half_width is not None and not self.half_width > 0:
            raise DomainError("grating half width must be positive when given")

    @property
    def slit_width(self) -> float:
        return self.opening_fraction * self.period

    @property
    def back_face(self) -> float:
        return self.x_position + self.thickness

    def slit_coordinate(self, Y):
        """Signed distance from the nearest opening centre, in [-period/2, period/2]."""
        shifted = np.asarray(Y, dtype=float) - self.offset
        return shifted - self.period * np.round(shifted / self.period)

    def within_thickness(self, X):
        X = np.asarray(X, dtype=float)
        return (X >= self.x_position) & (X <= self.back_face)

    def within_width(self, Y):
        Y = np.asarray(Y, dtype=float)
        if self.half_width is None:
            return np.ones(Y.shape, dtype=bool)
        return np.abs(Y - self.offset) <= self.half_width

    def transmission(self, Y):
        """Opening function: 1 inside a slit, 1/2 on a slit edge, 0 on a bar."""
        u = np.abs(self.slit_coordinate(Y))
        half = 0.5 * self.slit_width
        on_edge = np.abs(u - half) <= EDGE_TOLERANCE * self.period
        return np.where(on_edge, 0.5, np.where(u < half, 1.0, 0.0))


@dataclass(frozen=True)
class ImageChargeSpec:
    enabled: bool = False
    cutoff: float = 1.0
    induced_charge_factor: float = -1.0
    clamp_barriers: float | None = IMAGE_CLAMP_BARRIERS

    def __post_init__(self):
        if not self.cutoff > 0:
            raise DomainError(f"image-charge cutoff must be positive, got {self.cutoff!r}")


@dataclass(frozen=True, kw_only=True)
class FieldSpec(ABC):
    """Electric field of strength E0 (V/m) applied for region[0] <= X <= region[1]."""

    E0: float
    region: tuple[float, float]

    def __post_init__(self):
        if not self.E0 >= 0:
            raise DomainError(f"field strength must be non-negative, got {self.E0!r}")
        lo, hi = self.region
        if not lo < hi:
            raise DomainError(f"field region must satisfy x_lo < x_hi, got {self.region!r}")

    @property
    def is_static(self) -> bool:
        return True

    def inside(self, X):
        X = np.asarray(X, dtype=float)
        return (X >= self.region[0]) & (X <= self.region[1])

    @abstractmethod
    def spatial_profile(self, X, Y, frame: ScalingFrame):
        """Potential in units of V0 at full field strength, zero outside the region."""

    def time_factor(self, T: float, frame: ScalingFrame) -> float:
        return 1.0


@dataclass(frozen=True, kw_only=True)
class UniformField(FieldSpec):
    theta: float

    def spatial_profile(self, X, Y, frame: ScalingFrame):
        force = frame.field_force(self.E0)
        X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
        value = -force * (X * math.cos(self.theta) + Y * math.sin(self.theta))
        return np.where(self.inside(X), value, 0.0)


@dataclass(frozen=True, kw_only=True)
class SpatialModField(FieldSpec):
    """Transverse field E0 |cos(k' x)| with k' = 2 pi / wavelength (metres)."""

    wavelength: float

    def __post_init__(self):
        super().__post_init__()
        if not self.wavelength > 0:
            raise DomainError(f"modulation length must be positive, got {self.wavelength!r}")

    def spatial_profile(self, X, Y, frame: ScalingFrame):
        force = frame.field_force(self.E0)
        k_mod = 2.0 * math.pi * frame.gamma / self.wavelength
        X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
        value = -force * np.abs(np.cos(k_mod * X)) * Y
        return np.where(self.inside(X), value, 0.0)


@dataclass(frozen=True, kw_only=True)
class TemporalModField(FieldSpec):
    """Transverse field E0 cos(omega t) with omega in rad/s."""

    omega: float

    def __post_init__(self):
        super().__post_init__()
        if not self.omega >= 0:
            raise DomainError(f"modulation frequency must be non-negative, got {self.omega!r}")

    @property
    def is_static(self) -> bool:
        return False

    def spatial_profile(self, X, Y, frame: ScalingFrame):
        force = frame.field_force(self.E0)
        X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
        return np.where(self.inside(X), -force * Y, 0.0)

    def time_factor(self, T: float, frame: ScalingFrame) -> float:
        return math.cos(frame.omega_to_dimensionless(self.omega) * T)


def geometric_potential(X, Y, g: GratingSpec):
    bar = 1.0 - g.transmission(Y)
    inside = g.within_thickness(X) & g.within_width(Y)
    return np.where(inside, g.barrier * bar, 0.0)


def image_strength(frame: ScalingFrame, spec: ImageChargeSpec) -> float:
    """Prefactor of (1/y + 1/(w - y)) in units of V0 with distances in units of gamma."""
    c = frame.constants
    return spec.induced_charge_factor * c.charge**2 / (8.0 * math.pi * c.epsilon_0 * frame.gamma * frame.V0)


def image_potential(X, Y, g: GratingSpec, spec: ImageChargeSpec, frame: ScalingFrame):
    X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
    if not spec.enabled:
        return np.zeros(X.shape)
    half = 0.5 * g.slit_width
    u = g.slit_coordinate(Y)
    channel = g.within_thickness(X) & g.within_width(Y) & (np.abs(u) < half)
    lower = np.maximum(u + half, spec.cutoff)
    upper = np.maximum(half - u, spec.cutoff)
    value = image_strength(frame, spec) * (1.0 / lower + 1.0 / upper)
    if spec.clamp_barriers is not None:
        limit = spec.clamp_barriers * g.barrier
        value = np.clip(value, -limit, limit)
    return np.where(channel, value, 0.0)


def field_potential(X, Y, T: float, f: FieldSpec, frame: ScalingFrame):
    return f.time_factor(T, frame) * f.spatial_profile(X, Y, frame)


@dataclass(frozen=True)
class PotentialStack:
    frame: ScalingFrame
    grating: GratingSpec | None = None
    image: ImageChargeSpec = ImageChargeSpec()
    fields: tuple[FieldSpec, ...] = ()
    masks: tuple[GratingSpec, ...] = ()

    def static_terms(self, X, Y):
        X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
        total = np.zeros(X.shape)
        if self.grating is not None:
            total += geometric_potential(X, Y, self.grating)
            total += image_potential(X, Y, self.grating, self.image, self.frame)
        for mask in self.masks:
            total += geometric_potential(X, Y, mask)
        for f in self.fields:
            if f.is_static:
                total += f.spatial_profile(X, Y, self.frame)
        return total

    @property
    def modulated_fields(self) -> tuple[FieldSpec, ...]:
        return tuple(f for f in self.fields if not f.is_static)

    def evaluate(self, X, Y, T: float):
        total = self.static_terms(X, Y)
        for f in self.modulated_fields:
            total = total + field_potential(X, Y, T, f, self.frame)
        return total

    def static_lattice(self, grid: GridSpec) -> np.ndarray:
        X, Y = grid.mesh()
        return self.static_terms(X, Y)

    def modulated_lattices(self, grid: GridSpec) -> list[tuple[np.ndarray, FieldSpec]]:
        X, Y = grid.mesh()
        return [(f.spatial_profile(X, Y, self.frame), f) for f in self.modulated_fields]

    def lattice(self, grid: GridSpec, T: float) -> np.ndarray:
        X, Y = grid.mesh()
        return self.evaluate(X, Y, T)


def total_potential(X, Y, T: float, stack: PotentialStack):
    return stack.evaluate(X, Y, T)
