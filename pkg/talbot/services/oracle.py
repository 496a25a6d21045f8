"""
Independent references for the leapfrog solver: a Fourier split-operator propagator
on small periodic lattices and the closed-form spreading of a free Gaussian packet.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import fft

from talbot.exceptions import ConfigurationError, ResolutionError, UsageError
from talbot.services.potentials import PotentialStack
from talbot.services.scaling import GridSpec, PacketSpec

ALIAS_THRESHOLD = 1e-6
ALIAS_BAND = 2.0 / 3.0
MAX_ORACLE_POINTS = 256 * 256


class OracleMethod(str, Enum):
    SPECTRAL = "spectral-split-operator"
    ANALYTIC = "analytic-free-gaussian"


@dataclass(frozen=True)
class OracleConfig:
    dt: float
    grid: GridSpec
    method: OracleMethod = OracleMethod.SPECTRAL
    seam_tolerance: float = 0.0
    alias_threshold: float = ALIAS_THRESHOLD

    def __post_init__(self):
        object.__setattr__(self, "method", OracleMethod(self.method))
        if not self.dt > 0:
            raise ConfigurationError(f"oracle time step must be positive, got {self.dt!r}")
        if self.grid.size > MAX_ORACLE_POINTS:
            raise ConfigurationError(f"oracle lattice {self.grid.shape} exceeds 256x256")


def seam_jump(potential: np.ndarray) -> float:
    """Largest potential discontinuity across the two periodic seams."""
    across_x = np.abs(potential[-1, :] - potential[0, :]).max()
    across_y = np.abs(potential[:, -1] - potential[:, 0]).max()
    return float(max(across_x, across_y))


def spectral_tail(psi: np.ndarray, band: float = ALIAS_BAND) -> float:
    """Fraction of |psi_k|^2 beyond ``band`` of the Nyquist wave number on either axis."""
    power = np.abs(fft.fft2(psi)) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    fx = np.abs(fft.fftfreq(psi.shape[0])) * 2.0
    fy = np.abs(fft.fftfreq(psi.shape[1])) * 2.0
    outer = (fx[:, None] > band) | (fy[None, :] > band)
    return float(power[outer].sum() / total)


class SpectralPropagator:
    """Strang splitting: half potential phase, exact kinetic phase, half potential phase."""

    def __init__(self, stack: PotentialStack, cfg: OracleConfig):
        if cfg.method is not OracleMethod.SPECTRAL:
            raise UsageError("split-operator propagation needs method = spectral-split-operator")
        self.cfg = cfg
        self.stack = stack
        grid = cfg.grid
        self.static = stack.static_lattice(grid)
        self.modulated = stack.modulated_lattices(grid)
        jump = seam_jump(self.static + sum((np.abs(p) for p, _ in self.modulated), np.zeros(grid.shape)))
        if jump > cfg.seam_tolerance:
            raise ConfigurationError(
                f"potential jumps by {jump:.3g} across the periodic seam (tolerance {cfg.seam_tolerance:g})"
            )
        kx = 2.0 * math.pi * fft.fftfreq(grid.nx, grid.dx)
        ky = 2.0 * math.pi * fft.fftfreq(grid.ny, grid.dy)
        self.kinetic_phase = np.exp(-1j * np.add.outer(kx**2, ky**2) * cfg.dt)

    def potential_at(self, T: float) -> np.ndarray:
        potential = self.static
        for profile, f in self.modulated:
            potential = potential + f.time_factor(T, self.stack.frame) * profile
        return potential

    def step(self, psi: np.ndarray, T: float = 0.0) -> np.ndarray:
        if psi.shape != self.cfg.grid.shape:
            raise UsageError(f"wave function shape {psi.shape} differs from the oracle lattice")
        tail = spectral_tail(psi)
        if tail > self.cfg.alias_threshold:
            raise ResolutionError(f"spectral tail holds {tail:.3g} of the norm; refine the lattice")
        half = np.exp(-0.5j * self.cfg.dt * self.potential_at(T + 0.5 * self.cfg.dt))
        out = half * psi
        out = fft.ifft2(self.kinetic_phase * fft.fft2(out))
        return half * out

    def evolve(self, psi: np.ndarray, steps: int, T: float = 0.0) -> np.ndarray:
        for n in range(steps):
            psi = self.step(psi, T + n * self.cfg.dt)
        return psi


def spectral_step(psi: np.ndarray, stack: PotentialStack, cfg: OracleConfig, T: float = 0.0) -> np.ndarray:
    return SpectralPropagator(stack, cfg).step(psi, T)


@dataclass(frozen=True)
class FreeGaussianPrediction:
    sigma_x: float
    sigma_y: float
    center: tuple[float, float]


def rms_width(sigma: float) -> float:
    """rms width of |psi|^2 for the amplitude profile exp(-u**2 / (2 sigma**2))."""
    return sigma / math.sqrt(2.0)


def spread(s0: float, T: float) -> float:
    return s0 * math.sqrt(1.0 + (T / s0**2) ** 2)


def analytic_free_gaussian(spec: PacketSpec, T: float) -> FreeGaussianPrediction:
    """rms widths and centroid of the freely evolving packet at time T."""
    x0, y0 = spec.center
    return FreeGaussianPrediction(
        sigma_x=spread(rms_width(spec.sigma_x), T),
        sigma_y=spread(rms_width(spec.sigma_y), T),
        center=(x0 + 2.0 * spec.k * T, y0),
    )


def l2_distance(a: np.ndarray, b: np.ndarray, grid: GridSpec) -> float:
    return math.sqrt(float(np.sum(np.abs(a - b) ** 2)) * grid.dx * grid.dy)
