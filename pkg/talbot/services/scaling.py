"""
Physical constants, the dimensionless unit system, the computational lattice and
wave-packet initialization.

Lengths are measured in units of ``gamma`` and times in units of ``tau`` with
``gamma = sqrt(hbar**2 / (2 m V0))`` and ``tau = 2 m gamma**2 / hbar``. In these
units the Schrodinger equation reads ``i dpsi/dT = [-lap + phi] psi`` (hbar = 1,
2m = 1), so a plane wave ``exp(i k X)`` has energy ``k**2`` and group velocity
``2 k``.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import constants as sp

from talbot.exceptions import ConfigurationError, DomainError, UsageError

MIN_POINTS_PER_WAVELENGTH = 8.0
PACKET_CLEARANCE_SIGMAS = 6.0


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA constants plus the mass and charge of the propagated particle."""

    hbar: float = sp.hbar
    mass: float = sp.m_p
    charge: float = sp.e
    epsilon_0: float = sp.epsilon_0
    elementary_charge: float = sp.e
    species: str = "proton"

    @classmethod
    def for_species(cls, name: str) -> "PhysicalConstants":
        try:
            mass, charge = SPECIES[name]
        except KeyError as exc:
            raise DomainError(f"unknown species {name!r}; known: {sorted(SPECIES)}") from exc
        return cls(mass=mass, charge=charge, species=name)

    def as_dict(self) -> dict:
        return {
            "species": self.species,
            "hbar": self.hbar,
            "mass": self.mass,
            "charge": self.charge,
            "epsilon_0": self.epsilon_0,
            "elementary_charge": self.elementary_charge,
        }


SPECIES = {
    "proton": (sp.m_p, sp.e),
    "antiproton": (sp.m_p, -sp.e),
    "electron": (sp.m_e, -sp.e),
}

PROTON = PhysicalConstants()


class QuantityKind(str, Enum):
    LENGTH = "length"
    TIME = "time"
    ENERGY = "energy"


@dataclass(frozen=True)
class ScalingFrame:
    gamma: float
    tau: float
    V0: float
    constants: PhysicalConstants = PROTON

    def __post_init__(self):
        for name in ("gamma", "tau", "V0"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    def scale_of(self, kind: QuantityKind | str) -> float:
        try:
            kind = QuantityKind(kind)
        except ValueError as exc:
            raise UsageError(f"unknown quantity kind {kind!r}") from exc
        return {
            QuantityKind.LENGTH: self.gamma,
            QuantityKind.TIME: self.tau,
            QuantityKind.ENERGY: self.V0,
        }[kind]

    def wavenumber_to_physical(self, k: float) -> float:
        return k / self.gamma

    def omega_to_dimensionless(self, omega: float) -> float:
        return omega * self.tau

    def field_force(self, E0: float) -> float:
        """Dimensionless force q*E0*gamma/V0 exerted by a field of E0 volts per metre."""
        return self.constants.charge * E0 * self.gamma / self.V0

    def as_dict(self) -> dict:
        return {"gamma": self.gamma, "tau": self.tau, "V0": self.V0}


def build_frame(V0: float, constants: PhysicalConstants = PROTON) -> ScalingFrame:
    if not (V0 > 0 and math.isfinite(V0)):
        raise DomainError(f"energy scale V0 must be positive, got {V0!r}")
    gamma = math.sqrt(constants.hbar**2 / (2.0 * constants.mass * V0))
    tau = 2.0 * constants.mass * gamma**2 / constants.hbar
    return ScalingFrame(gamma=gamma, tau=tau, V0=V0, constants=constants)


def frame_from_length(gamma: float, constants: PhysicalConstants = PROTON) -> ScalingFrame:
    if not (gamma > 0 and math.isfinite(gamma)):
        raise DomainError(f"length scale gamma must be positive, got {gamma!r}")
    return build_frame(constants.hbar**2 / (2.0 * constants.mass * gamma**2), constants)


def to_dimensionless(value: float, kind: QuantityKind | str, frame: ScalingFrame) -> float:
    return value / frame.scale_of(kind)


def from_dimensionless(value: float, kind: QuantityKind | str, frame: ScalingFrame) -> float:
    return value * frame.scale_of(kind)


def talbot_length(period: float, wavelength: float) -> float:
    return period**2 / wavelength


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    dx: float
    dy: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 16 or self.ny < 16:
            raise ConfigurationError(f"lattice must be at least 16x16, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ConfigurationError("lattice spacings must be positive")
        if not math.isclose(self.dx, self.dy, rel_tol=1e-12):
            raise ConfigurationError(f"lattice must be square, got dX={self.dx} dY={self.dy}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.dy * np.arange(self.ny)

    @property
    def x_range(self) -> tuple[float, float]:
        return (self.origin[0], self.origin[0] + self.dx * (self.nx - 1))

    @property
    def y_range(self) -> tuple[float, float]:
        return (self.origin[1], self.origin[1] + self.dy * (self.ny - 1))

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def points_per_wavelength(self, k: float) -> float:
        return (2.0 * math.pi / k) / self.dx

    def check_resolution(self, k: float) -> None:
        ppw = self.points_per_wavelength(k)
        # lambda / 8 spacings land on the bound up to rounding
        if ppw < MIN_POINTS_PER_WAVELENGTH * (1.0 - 1e-9):
            raise ConfigurationError(
                f"lattice resolves the de Broglie wavelength with {ppw:.2f} points; "
                f"at least {MIN_POINTS_PER_WAVELENGTH:g} are required"
            )


@dataclass(frozen=True)
class PacketSpec:
    sigma_x: float
    sigma_y: float
    center: tuple[float, float]
    k: float

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise DomainError("packet widths must be positive")
        if not self.k > 0:
            raise DomainError(f"packet wave number must be positive, got {self.k!r}")

    @property
    def wavelength(self) -> float:
        return 2.0 * math.pi / self.k


@dataclass
class WaveField:
    """Leapfrog state: ``real`` at T, ``imag`` at T + dT/2, ``imag_prev`` at T - dT/2."""

    real: np.ndarray
    imag: np.ndarray
    grid: GridSpec
    dt: float
    step_index: int = 0
    imag_prev: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("real", "imag", "imag_prev"):
            lattice = getattr(self, name)
            if lattice is not None and lattice.shape != self.grid.shape:
                raise ConfigurationError(
                    f"{name} lattice has shape {lattice.shape}, grid is {self.grid.shape}"
                )

    @property
    def time(self) -> float:
        return self.step_index * self.dt

    @property
    def psi(self) -> np.ndarray:
        """Complex wave function at the integer time T."""
        if self.imag_prev is None:
            return self.real + 1j * self.imag
        return self.real + 0.5j * (self.imag + self.imag_prev)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def copy(self) -> "WaveField":
        return WaveField(
            real=self.real.copy(),
            imag=self.imag.copy(),
            grid=self.grid,
            dt=self.dt,
            step_index=self.step_index,
            imag_prev=None if self.imag_prev is None else self.imag_prev.copy(),
        )

    def scaled(self, factor: float) -> "WaveField":
        return WaveField(
            real=self.real * factor,
            imag=self.imag * factor,
            grid=self.grid,
            dt=self.dt,
            step_index=self.step_index,
            imag_prev=None if self.imag_prev is None else self.imag_prev * factor,
        )


def free_gaussian(u: np.ndarray, sigma: float, k: float, T: float) -> np.ndarray:
    """Freely evolved 1D Gaussian exp(-u**2/(2 sigma**2) + i k u) after time T."""
    q = sigma**2 + 2j * T
    return np.sqrt(sigma**2 / q) * np.exp(-((u - 2.0 * k * T) ** 2) / (2.0 * q) + 1j * k * u - 1j * k**2 * T)


def analytic_packet(spec: PacketSpec, grid: GridSpec, T: float = 0.0) -> np.ndarray:
    """Unnormalized free-particle packet on the lattice at time T."""
    x0, y0 = spec.center
    along = free_gaussian(grid.x - x0, spec.sigma_x, spec.k, T)
    across = free_gaussian(grid.y - y0, spec.sigma_y, 0.0, T)
    return np.multiply.outer(along, across)


def check_packet_fits(spec: PacketSpec, grid: GridSpec) -> None:
    x0, y0 = spec.center
    for axis, centre, sigma, (lo, hi) in (
        ("X", x0, spec.sigma_x, grid.x_range),
        ("Y", y0, spec.sigma_y, grid.y_range),
    ):
        clearance = PACKET_CLEARANCE_SIGMAS * sigma
        if centre - clearance < lo or centre + clearance > hi:
            raise ConfigurationError(
                f"packet along {axis} (centre {centre:g}, width {sigma:g}) needs "
                f"[{centre - clearance:g}, {centre + clearance:g}] inside the lattice "
                f"[{lo:g}, {hi:g}]"
            )


def init_packet(spec: PacketSpec, grid: GridSpec, dt: float) -> WaveField:
    grid.check_resolution(spec.k)
    check_packet_fits(spec, grid)
    present = analytic_packet(spec, grid, 0.0)
    ahead = analytic_packet(spec, grid, 0.5 * dt)
    behind = analytic_packet(spec, grid, -0.5 * dt)
    packet = WaveField(
        real=np.ascontiguousarray(present.real),
        imag=np.ascontiguousarray(ahead.imag),
        grid=grid,
        dt=dt,
        imag_prev=np.ascontiguousarray(behind.imag),
    )
    return packet.scaled(1.0 / math.sqrt(norm(packet)))


def norm(field: WaveField, staggered: bool = True) -> float:
    """Discrete norm; the staggered form is conserved exactly by the leapfrog update."""
    real = field.real.ravel()
    imag = field.imag.ravel()
    if staggered and field.imag_prev is not None:
        total = np.dot(real, real) + np.dot(field.imag_prev.ravel(), imag)
    else:
        total = np.dot(real, real) + np.dot(imag, imag)
    return float(total) * field.grid.dx * field.grid.dy
