"""
Explicit staggered leapfrog integrator for the dimensionless Schrodinger equation.

The real part lives on integer times and the imaginary part on half-integer times:

    R(T + dT)       = R(T)       + dT * H I(T + dT/2)
    I(T + 3 dT / 2) = I(T + dT/2) - dT * H R(T + dT)

with ``H = -lap + phi``. The Laplacian is a centred 3-point (order 2) or 5-point
(order 4) stencil per axis. Logistic damping masks near the lattice edges absorb
outgoing probability.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

from talbot.exceptions import ConfigurationError, DomainError, IntegrationTimeout, NumericalFailure, UsageError
from talbot.services.potentials import PotentialStack, image_strength
from talbot.services.scaling import GridSpec, WaveField, norm

logger = logging.getLogger(__name__)

STABILITY_SAFETY = 0.5
DEFAULT_DT_FRACTION = 0.5
DEFAULT_SHARPNESS = 5.0
STENCIL_FACTORS = {2: 1.0, 4: 4.0 / 3.0}
HALO = 2


class Edge(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTTOM = "bottom"
    TOP = "top"

    @property
    def axis(self) -> int:
        return 0 if self in (Edge.LEFT, Edge.RIGHT) else 1


class Boundary(str, Enum):
    DIRICHLET = "dirichlet"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class DampingSpec:
    """zeta = 1 / (1 + exp(-(coord - position) / sharpness)); positive sharpness damps toward lower coordinates."""

    edge: Edge
    sharpness: float
    position: float

    def __post_init__(self):
        object.__setattr__(self, "edge", Edge(self.edge))
        if self.sharpness == 0 or not math.isfinite(self.sharpness):
            raise DomainError("damping sharpness must be finite and non-zero")

    def profile(self, coord) -> np.ndarray:
        return expit((np.asarray(coord, dtype=float) - self.position) / self.sharpness)


def edge_damping(grid: GridSpec, edge: Edge | str, sharpness: float = DEFAULT_SHARPNESS) -> DampingSpec:
    """Damping layer whose midpoint sits on the outermost lattice line of ``edge``."""
    edge = Edge(edge)
    lo, hi = grid.x_range if edge.axis == 0 else grid.y_range
    if edge in (Edge.LEFT, Edge.BOTTOM):
        return DampingSpec(edge, abs(sharpness), lo)
    return DampingSpec(edge, -abs(sharpness), hi)


def default_damping(grid: GridSpec, sharpness: float = DEFAULT_SHARPNESS) -> tuple[DampingSpec, ...]:
    return tuple(edge_damping(grid, edge, sharpness) for edge in Edge)


def damping_mask(grid: GridSpec, specs) -> np.ndarray | None:
    if not specs:
        return None
    along_x = np.ones(grid.nx)
    along_y = np.ones(grid.ny)
    for spec in specs:
        if spec.edge.axis == 0:
            along_x *= spec.profile(grid.x)
        else:
            along_y *= spec.profile(grid.y)
    return np.multiply.outer(along_x, along_y)


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    spatial_order: int = 4
    damping: tuple[DampingSpec, ...] = ()
    norm_check_interval: int = 100
    norm_drift_abort: float = 1e-3
    boundary: Boundary = Boundary.DIRICHLET
    max_steps: int = 2_000_000
    centroid_floor: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "damping", tuple(self.damping))
        if self.spatial_order not in STENCIL_FACTORS:
            raise ConfigurationError(f"spatial order must be 2 or 4, got {self.spatial_order!r}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigurationError(f"time step must be positive, got {self.dt!r}")
        if self.norm_check_interval < 1:
            raise ConfigurationError("norm check interval must be at least one step")
        if self.boundary is Boundary.PERIODIC and self.damping:
            raise ConfigurationError("edge damping cannot be combined with a periodic boundary")


def potential_bound(grid: GridSpec, stack: PotentialStack) -> float:
    """Upper bound of |phi| over the lattice, modulated terms at full amplitude."""
    bound = np.abs(stack.static_lattice(grid))
    for profile, _ in stack.modulated_lattices(grid):
        bound += np.abs(profile)
    return float(bound.max())


def potential_ceiling(grid: GridSpec, stack: PotentialStack) -> float:
    """Closed-form upper bound of |phi| that needs no lattice evaluation."""
    ceiling = 0.0
    if stack.grating is not None:
        ceiling += stack.grating.barrier
        if stack.image.enabled:
            if stack.image.clamp_barriers is not None:
                ceiling += stack.image.clamp_barriers * stack.grating.barrier
            else:
                ceiling += 2.0 * abs(image_strength(stack.frame, stack.image)) / stack.image.cutoff
    ceiling += sum(mask.barrier for mask in stack.masks)
    reach = max(map(abs, grid.x_range)) + max(map(abs, grid.y_range))
    ceiling += sum(stack.frame.field_force(f.E0) * reach for f in stack.fields)
    return ceiling


def max_stable_dt(grid: GridSpec, spatial_order: int, v_max: float) -> float:
    if not math.isfinite(v_max):
        raise ConfigurationError("potential is unbounded on the lattice; enable the image-charge clamp")
    factor = STENCIL_FACTORS[spatial_order]
    return STABILITY_SAFETY / (factor * (1.0 / grid.dx**2 + 1.0 / grid.dy**2) + 0.5 * abs(v_max))


def default_dt(grid: GridSpec, stack: PotentialStack, spatial_order: int = 4) -> float:
    return DEFAULT_DT_FRACTION * max_stable_dt(grid, spatial_order, potential_bound(grid, stack))


def stability_check(grid: GridSpec, cfg: SolverConfig, stack: PotentialStack) -> float:
    dt_max = max_stable_dt(grid, cfg.spatial_order, potential_bound(grid, stack))
    if cfg.dt > dt_max:
        raise ConfigurationError(f"time step dT={cfg.dt:.6g} exceeds the stability bound dT_max={dt_max:.6g}")
    return dt_max


class Laplacian:
    """Centred finite-difference Laplacian working through a preallocated padded buffer."""

    def __init__(self, grid: GridSpec, spatial_order: int = 4, boundary: Boundary = Boundary.DIRICHLET):
        self.grid = grid
        self.spatial_order = spatial_order
        self.boundary = Boundary(boundary)
        self._padded = np.zeros((grid.nx + 2 * HALO, grid.ny + 2 * HALO))

    def _fill(self, lattice: np.ndarray) -> np.ndarray:
        pad = self._padded
        pad[HALO:-HALO, HALO:-HALO] = lattice
        if self.boundary is Boundary.PERIODIC:
            pad[:HALO, HALO:-HALO] = lattice[-HALO:, :]
            pad[-HALO:, HALO:-HALO] = lattice[:HALO, :]
            pad[HALO:-HALO, :HALO] = lattice[:, -HALO:]
            pad[HALO:-HALO, -HALO:] = lattice[:, :HALO]
        return pad

    def apply(self, lattice: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty(self.grid.shape)
        pad = self._fill(lattice)
        nx, ny = self.grid.shape
        centre = pad[HALO:-HALO, HALO:-HALO]

        def shifted_x(offset):
            return pad[HALO + offset : HALO + offset + nx, HALO:-HALO]

        def shifted_y(offset):
            return pad[HALO:-HALO, HALO + offset : HALO + offset + ny]

        if self.spatial_order == 2:
            cx = 1.0 / self.grid.dx**2
            cy = 1.0 / self.grid.dy**2
            np.add(shifted_x(-1), shifted_x(1), out=out)
            out *= cx
            out += cy * (shifted_y(-1) + shifted_y(1))
            out -= (2.0 * cx + 2.0 * cy) * centre
            return out

        cx = 1.0 / (12.0 * self.grid.dx**2)
        cy = 1.0 / (12.0 * self.grid.dy**2)
        np.add(shifted_x(-1), shifted_x(1), out=out)
        out *= 16.0
        out -= shifted_x(-2)
        out -= shifted_x(2)
        out *= cx
        out += cy * (16.0 * (shifted_y(-1) + shifted_y(1)) - shifted_y(-2) - shifted_y(2))
        out -= 30.0 * (cx + cy) * centre
        return out


class Propagator:
    """Advances WaveFields in place with cached potential lattices and work buffers."""

    def __init__(self, grid: GridSpec, stack: PotentialStack, cfg: SolverConfig):
        self.grid = grid
        self.stack = stack
        self.cfg = cfg
        self.dt_max = stability_check(grid, cfg, stack)
        self.static = stack.static_lattice(grid)
        self.modulated = stack.modulated_lattices(grid)
        self.laplacian = Laplacian(grid, cfg.spatial_order, cfg.boundary)
        self.mask = damping_mask(grid, cfg.damping)
        self._hpsi = np.empty(grid.shape)
        self._potential = np.empty(grid.shape)

    def potential_at(self, T: float) -> np.ndarray:
        if not self.modulated:
            return self.static
        np.copyto(self._potential, self.static)
        for profile, f in self.modulated:
            self._potential += f.time_factor(T, self.stack.frame) * profile
        return self._potential

    def hamiltonian(self, lattice: np.ndarray, T: float) -> np.ndarray:
        out = self.laplacian.apply(lattice, out=self._hpsi)
        out *= -1.0
        out += self.potential_at(T) * lattice
        return out

    def advance(self, field: WaveField) -> WaveField:
        if field.grid != self.grid:
            raise UsageError("wave field lattice differs from the propagator lattice")
        if not math.isclose(field.dt, self.cfg.dt, rel_tol=1e-12):
            raise UsageError(f"wave field was initialised for dT={field.dt}, solver uses dT={self.cfg.dt}")
        dt = self.cfg.dt
        T = field.time
        if field.imag_prev is None:
            field.imag_prev = np.empty(self.grid.shape)

        field.real += dt * self.hamiltonian(field.imag, T + 0.5 * dt)
        np.copyto(field.imag_prev, field.imag)
        field.imag -= dt * self.hamiltonian(field.real, T + dt)
        if self.mask is not None:
            field.real *= self.mask
            field.imag *= self.mask
        field.step_index += 1

        if not (math.isfinite(field.real.sum()) and math.isfinite(field.imag.sum())):
            raise NumericalFailure("non-finite value in the wave-function lattice", field.step_index)
        return field

    def centroid_x(self, field: WaveField) -> float:
        """Probability-weighted <X> over X >= centroid_floor, NaN when nothing is left.

        Before any probability reaches the floor the whole lattice is used.
        """
        marginal = field.density.sum(axis=1)
        x = self.grid.x
        if self.cfg.centroid_floor is not None:
            keep = x >= self.cfg.centroid_floor
            if marginal[keep].sum() > 1e-300:
                marginal, x = marginal[keep], x[keep]
        total = marginal.sum()
        if total <= 1e-300:
            return math.nan
        return float(np.dot(marginal, x) / total)


def step(field: WaveField, stack: PotentialStack, cfg: SolverConfig) -> WaveField:
    return Propagator(field.grid, stack, cfg).advance(field.copy())


def apply_damping(field: WaveField, specs) -> WaveField:
    mask = damping_mask(field.grid, specs)
    if mask is None:
        return field.copy()
    return WaveField(
        real=field.real * mask,
        imag=field.imag * mask,
        grid=field.grid,
        dt=field.dt,
        step_index=field.step_index,
        imag_prev=None if field.imag_prev is None else field.imag_prev.copy(),
    )


@dataclass(frozen=True)
class StopTime:
    time: float
    label: str = ""


@dataclass(frozen=True)
class PlaneCrossing:
    position: float
    label: str = ""


def _check_schedule(schedule) -> None:
    times = [event.time for event in schedule if isinstance(event, StopTime)]
    planes = [event.position for event in schedule if isinstance(event, PlaneCrossing)]
    if times != sorted(times) or planes != sorted(planes):
        raise UsageError("snapshot schedule must be sorted")
    for event in schedule:
        if not isinstance(event, (StopTime, PlaneCrossing)):
            raise UsageError(f"unknown schedule entry {event!r}")


def run_until(field: WaveField, stack: PotentialStack, cfg: SolverConfig, schedule) -> list[WaveField]:
    """Integrate a copy of ``field`` and return one deep snapshot per schedule entry, in order."""
    _check_schedule(schedule)
    propagator = Propagator(field.grid, stack, cfg)
    state = field.copy()
    start_step = state.step_index
    reference_norm = norm(state)
    snapshots = []

    def steps_left() -> bool:
        return state.step_index - start_step < cfg.max_steps

    def monitor() -> None:
        if (state.step_index - start_step) % cfg.norm_check_interval:
            return
        current = norm(state)
        logger.debug("step %d T=%.4f norm=%.9f", state.step_index, state.time, current)
        if reference_norm > 0 and (current - reference_norm) / reference_norm > cfg.norm_drift_abort:
            raise NumericalFailure(
                f"norm grew from {reference_norm:.6g} to {current:.6g}", state.step_index
            )

    for event in schedule:
        if isinstance(event, StopTime):
            target = int(round(event.time / cfg.dt))
            while state.step_index < target:
                if not steps_left():
                    raise IntegrationTimeout(f"stop time T={event.time:g} lies beyond {cfg.max_steps} steps")
                propagator.advance(state)
                monitor()
        else:
            while True:
                centroid = propagator.centroid_x(state)
                if math.isnan(centroid):
                    raise IntegrationTimeout(
                        f"no probability left downstream before <X> reached {event.position:g}"
                    )
                if centroid >= event.position:
                    break
                if not steps_left():
                    raise IntegrationTimeout(
                        f"<X>={centroid:.4g} did not reach {event.position:g} within {cfg.max_steps} steps"
                    )
                propagator.advance(state)
                monitor()
        logger.info(
            "snapshot %s at step %d (T=%.4f)", event.label or "-", state.step_index, state.time
        )
        snapshots.append(state.copy())
    return snapshots
