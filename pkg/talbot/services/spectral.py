"""
Observables extracted from wave-field snapshots: momentum spectra, screen profiles,
fringe shift, visibility, mask-collected intensity, sensitivity factors, transverse
momentum transfer and sideband tables.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft
from scipy.signal import correlate, correlation_lags, find_peaks

from talbot.exceptions import ConfigurationError, InsufficientFringesError, OutOfRangeError, UsageError
from talbot.services.potentials import GratingSpec
from talbot.services.scaling import PROTON, PhysicalConstants, ScalingFrame, WaveField

logger = logging.getLogger(__name__)

AMBIGUITY_RATIO = 1.05
FLAT_TOLERANCE = 1e-12
DAMPING_MARGIN_WIDTHS = 10.0
SIDEBAND_MEDIAN_FACTOR = 3.0
SIDEBAND_RELATIVE_FLOOR = 1e-3
SIDEBAND_MATCH_TOLERANCE = 0.05
RING_RECENTRE_STEPS = 20


@dataclass(frozen=True)
class Window:
    """Closed rectangle [x_lo, x_hi] x [y_lo, y_hi] in lattice coordinates."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise ConfigurationError(f"empty analysis window {self!r}")

    def slices(self, grid) -> tuple[slice, slice]:
        i = np.flatnonzero((grid.x >= self.x_lo) & (grid.x <= self.x_hi))
        j = np.flatnonzero((grid.y >= self.y_lo) & (grid.y <= self.y_hi))
        if i.size < 2 or j.size < 2:
            raise ConfigurationError(f"analysis window {self!r} holds fewer than two lattice lines")
        return slice(i[0], i[-1] + 1), slice(j[0], j[-1] + 1)


def interior_window(grid, damping) -> Window:
    """Largest window keeping DAMPING_MARGIN_WIDTHS * |sharpness| clear of every damped edge."""
    (x_lo, x_hi), (y_lo, y_hi) = grid.x_range, grid.y_range
    for spec in damping:
        reach = spec.position + DAMPING_MARGIN_WIDTHS * spec.sharpness
        if spec.edge.axis == 0:
            x_lo, x_hi = (max(x_lo, reach), x_hi) if spec.sharpness > 0 else (x_lo, min(x_hi, reach))
        else:
            y_lo, y_hi = (max(y_lo, reach), y_hi) if spec.sharpness > 0 else (y_lo, min(y_hi, reach))
    return Window(x_lo, x_hi, y_lo, y_hi)


def check_window(window: Window, grid, damping) -> None:
    clear = interior_window(grid, damping)
    if (
        window.x_lo < clear.x_lo
        or window.x_hi > clear.x_hi
        or window.y_lo < clear.y_lo
        or window.y_hi > clear.y_hi
    ):
        raise ConfigurationError(f"analysis window {window!r} overlaps the damping margin {clear!r}")


@dataclass
class KSpectrum:
    """Complex amplitudes psi_k on a centred (kx, ky) lattice, indexed [kx, ky]."""

    amplitudes: np.ndarray
    kx: np.ndarray
    ky: np.ndarray
    dx: float
    dy: float
    origin: tuple[float, float]
    frame: ScalingFrame | None = None

    @property
    def dkx(self) -> float:
        return 2.0 * math.pi / (self.kx.size * self.dx)

    @property
    def dky(self) -> float:
        return 2.0 * math.pi / (self.ky.size * self.dy)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.amplitudes)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(self.density.sum()) * self.dkx * self.dky

    def centroid(self) -> tuple[float, float]:
        weights = self.density
        total = weights.sum()
        return (
            float(np.dot(weights.sum(axis=1), self.kx) / total),
            float(np.dot(weights.sum(axis=0), self.ky) / total),
        )

    def inverse(self) -> np.ndarray:
        """Position-space psi on the window that produced this spectrum."""
        phase = np.exp(1j * np.add.outer(self.kx * self.origin[0], self.ky * self.origin[1]))
        unshifted = fft.ifftshift(self.amplitudes * phase)
        return fft.ifft2(unshifted) * (2.0 * math.pi / (self.dx * self.dy))


def k_spectrum(
    field: WaveField,
    window: Window | None = None,
    damping=(),
    frame: ScalingFrame | None = None,
) -> KSpectrum:
    grid = field.grid
    if window is None:
        window = interior_window(grid, damping)
    else:
        check_window(window, grid, damping)
    sx, sy = window.slices(grid)
    psi = field.psi[sx, sy]
    origin = (float(grid.x[sx][0]), float(grid.y[sy][0]))
    nx, ny = psi.shape
    kx = 2.0 * math.pi * fft.fftshift(fft.fftfreq(nx, grid.dx))
    ky = 2.0 * math.pi * fft.fftshift(fft.fftfreq(ny, grid.dy))
    phase = np.exp(-1j * np.add.outer(kx * origin[0], ky * origin[1]))
    amplitudes = fft.fftshift(fft.fft2(psi)) * phase * (grid.dx * grid.dy / (2.0 * math.pi))
    return KSpectrum(amplitudes, kx, ky, grid.dx, grid.dy, origin, frame)


def _parabolic_offset(left: float, centre: float, right: float) -> float:
    denominator = left - 2.0 * centre + right
    if denominator == 0:
        return 0.0
    return 0.5 * (left - right) / denominator


def _ring_cells(spectrum: KSpectrum, forward_only: bool) -> tuple[np.ndarray, np.ndarray]:
    """(k_r, |psi_k|^2 dkx dky) per lattice cell, backward cells zeroed when forward_only."""
    kr = np.hypot.outer(spectrum.kx, spectrum.ky)
    weights = spectrum.density * spectrum.dkx * spectrum.dky
    if forward_only:
        weights = np.where((spectrum.kx > 0)[:, None], weights, 0.0)
    return kr.ravel(), weights.ravel()


def radial_profile(spectrum: KSpectrum, forward_only: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Probability on rings of width dkx: |psi_k|^2 integrated along each circle.

    The ring width follows the lattice spacing along the beam, so each forward ring
    collects one kx column per ky row.
    """
    dk = spectrum.dkx
    kr, weights = _ring_cells(spectrum, forward_only)
    profile = np.bincount(np.rint(kr / dk).astype(np.intp), weights=weights)
    return dk * np.arange(profile.size), profile


def _half_width(radii: np.ndarray, profile: np.ndarray, peak: int) -> float:
    """Half width at half maximum of the ring at ``peak``, cut short at a neighbouring valley."""
    half = 0.5 * profile[peak]
    dk = float(radii[1] - radii[0])
    reach = []
    for direction in (-1, 1):
        i = peak
        while 0 <= i + direction < profile.size:
            nxt = i + direction
            if profile[nxt] <= half:
                frac = (profile[i] - half) / (profile[i] - profile[nxt])
                reach.append((abs(i - peak) + frac) * dk)
                break
            if profile[nxt] > profile[i]:
                reach.append(abs(i - peak) * dk)
                break
            i = nxt
        else:
            reach.append(abs(i - peak) * dk)
    return max(min(reach), dk)


def _ring_centroid(kr: np.ndarray, weights: np.ndarray, start: float, half_width: float) -> float:
    """Probability-weighted mean k_r within +-half_width, the window re-centred until it settles."""
    centre = start
    for _ in range(RING_RECENTRE_STEPS):
        inside = np.abs(kr - centre) <= half_width
        total = weights[inside].sum()
        if total <= 0:
            break
        updated = float(np.dot(kr[inside], weights[inside]) / total)
        settled = abs(updated - centre) <= 1e-9 * half_width
        centre = updated
        if settled:
            break
    return centre


def ring_radius(spectrum: KSpectrum) -> float:
    """Dimensionless radius of the strongest forward ring."""
    radii, profile = radial_profile(spectrum)
    peak = int(np.argmax(profile))
    kr, weights = _ring_cells(spectrum, forward_only=True)
    return _ring_centroid(kr, weights, float(radii[peak]), _half_width(radii, profile, peak))


@dataclass
class ScreenProfile:
    intensity: np.ndarray
    y: np.ndarray
    plane_x: float

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])


def screen_profile(field: WaveField, plane_x: float) -> ScreenProfile:
    grid = field.grid
    lo, hi = grid.x_range
    if not lo <= plane_x <= hi:
        raise OutOfRangeError(f"screen plane X={plane_x:g} lies outside the lattice [{lo:g}, {hi:g}]")
    position = (plane_x - lo) / grid.dx
    column = min(int(math.floor(position)), grid.nx - 2)
    frac = position - column
    density = field.density
    intensity = (1.0 - frac) * density[column] + frac * density[column + 1]
    return ScreenProfile(np.maximum(intensity, 0.0), grid.y.copy(), plane_x)


@dataclass(frozen=True)
class FringeShift:
    shift: float
    lag_samples: float
    peak_ratio: float
    ambiguous: bool


def fringe_shift(profile: ScreenProfile, reference: ScreenProfile, warn: bool = True) -> FringeShift:
    """Displacement of ``profile`` relative to ``reference``, positive toward +Y."""
    if profile.intensity.shape != reference.intensity.shape or not math.isclose(
        profile.dy, reference.dy, rel_tol=1e-9
    ):
        raise UsageError("fringe shift needs profiles sampled on the same lattice")
    a = profile.intensity - profile.intensity.mean()
    b = reference.intensity - reference.intensity.mean()
    score = correlate(a, b, mode="full", method="direct")
    lags = correlation_lags(a.size, b.size, mode="full")
    peak = int(np.argmax(score))
    offset = 0.0
    if 0 < peak < score.size - 1:
        offset = _parabolic_offset(score[peak - 1], score[peak], score[peak + 1])
    lag = lags[peak] + offset

    maxima, _ = find_peaks(score)
    others = np.sort(score[maxima[maxima != peak]])
    second = others[-1] if others.size else 0.0
    ratio = math.inf if second <= 0 else float(score[peak] / second)
    ambiguous = ratio < AMBIGUITY_RATIO
    if ambiguous and warn:
        logger.warning("fringe shift ambiguous at X=%g: peak ratio %.3f", profile.plane_x, ratio)
    return FringeShift(shift=float(lag * profile.dy), lag_samples=float(lag), peak_ratio=ratio, ambiguous=ambiguous)


def grating_phase(profile: ScreenProfile, grating: GratingSpec) -> float:
    """Offset of the fringes from the grating openings, folded into [-d/2, d/2).

    0 means bright fringes behind the openings, +-d/2 means bright fringes behind the bars.
    """
    opening = ScreenProfile(grating.transmission(profile.y) * grating.within_width(profile.y), profile.y, profile.plane_x)
    shift = fringe_shift(profile, opening, warn=False).shift
    d = grating.period
    return float((shift + 0.5 * d) % d - 0.5 * d)


def fringe_period(profile: ScreenProfile, band: tuple[float, float] | None = None) -> float:
    """Period of the dominant spatial frequency of the mean-subtracted profile.

    ``band`` limits the search to periods in [shortest, longest], which keeps the
    beam envelope from being read as a fringe.
    """
    signal = profile.intensity - profile.intensity.mean()
    power = np.abs(fft.rfft(signal)) ** 2
    power[0] = 0.0
    search = power.copy()
    if band is not None:
        shortest, longest = band
        if not 0 < shortest < longest:
            raise UsageError(f"fringe period band must satisfy 0 < shortest < longest, got {band!r}")
        periods = np.full(power.size, math.inf)
        periods[1:] = signal.size * profile.dy / np.arange(1, power.size)
        search[(periods < shortest) | (periods > longest)] = 0.0
    peak = int(np.argmax(search))
    if peak == 0 or search[peak] <= 0:
        raise InsufficientFringesError("profile carries no fringe frequency")
    offset = 0.0
    if peak < power.size - 1 and power[peak] >= max(power[peak - 1], power[peak + 1]):
        offset = _parabolic_offset(power[peak - 1], power[peak], power[peak + 1])
    frequency = (peak + offset) / (signal.size * profile.dy)
    return float(1.0 / frequency)


def visibility(profile: ScreenProfile, window: tuple[float, float] | None = None) -> float:
    """(I_max - I_min) / (I_max + I_min) using the two tallest maxima and the minimum between them."""
    intensity = profile.intensity
    if window is not None:
        keep = (profile.y >= window[0]) & (profile.y <= window[1])
        intensity = intensity[keep]
    if intensity.size == 0:
        raise InsufficientFringesError("visibility window holds no samples")
    top = float(intensity.max())
    if top <= 0 or np.ptp(intensity) <= FLAT_TOLERANCE * top:
        return 0.0
    maxima, _ = find_peaks(intensity)
    if maxima.size < 2:
        raise InsufficientFringesError(f"visibility needs two maxima, found {maxima.size}")
    tallest = np.sort(maxima[np.argsort(intensity[maxima])[-2:]])
    i_max = float(intensity[tallest].max())
    i_min = float(intensity[tallest[0] : tallest[1] + 1].min())
    return float(np.clip((i_max - i_min) / (i_max + i_min), 0.0, 1.0))


def collected_intensity(field: WaveField, mask: GratingSpec, mask_offset: float) -> float:
    """Fraction of the current probability beyond the mask plane passing the shifted mask openings."""
    grid = field.grid
    density = field.density
    total = density.sum()
    if total <= 0:
        return 0.0
    beyond = grid.x >= mask.x_position
    transmission = mask.transmission(grid.y - mask_offset)
    return float(density[beyond].sum(axis=0) @ transmission / total)


@dataclass
class ICurve:
    offsets: np.ndarray
    intensities: np.ndarray
    period: float

    def at_fraction(self, fraction: float) -> float:
        return float(np.interp(fraction * self.period, self.offsets, self.intensities))


def mask_scan(field: WaveField, mask: GratingSpec, offsets) -> ICurve:
    offsets = np.asarray(offsets, dtype=float)
    values = np.array([collected_intensity(field, mask, s) for s in offsets])
    return ICurve(offsets, values, mask.period)


def sensitivity_factor(curve_a: ICurve, curve_b: ICurve, delta: float, at_fraction: float = 0.5) -> float:
    """Percent change of I_c at s_d = at_fraction * d per unit parameter change."""
    if curve_a.offsets.shape != curve_b.offsets.shape or not np.allclose(curve_a.offsets, curve_b.offsets):
        raise UsageError("sensitivity factor needs curves on the same mask-offset grid")
    if delta == 0:
        raise UsageError("sensitivity factor needs a non-zero parameter change")
    change = abs(curve_b.at_fraction(at_fraction) - curve_a.at_fraction(at_fraction))
    return change / abs(delta) * 100.0


def delta_ky(spectrum: KSpectrum, reference: KSpectrum, frame: ScalingFrame | None = None) -> float:
    """Shift of the k_y centroid in inverse metres."""
    if spectrum.ky.shape != reference.ky.shape or not np.allclose(spectrum.ky, reference.ky):
        raise UsageError("delta k_y needs spectra on the same k lattice")
    frame = frame or spectrum.frame
    if frame is None:
        raise UsageError("delta k_y needs a scaling frame to report physical units")
    shift = spectrum.centroid()[1] - reference.centroid()[1]
    return frame.wavenumber_to_physical(shift)


@dataclass(frozen=True)
class SidebandRow:
    eta: int | None
    n: float | None
    k_theory: float | None
    k_measured: float | None = None
    amplitude: float | None = None


@dataclass
class SidebandTable:
    rows: list[SidebandRow] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def by_eta(self) -> dict[int, SidebandRow]:
        return {row.eta: row for row in self.rows if row.eta is not None}


def sideband_predict(
    E_k0: float,
    omega0: float,
    n: float,
    eta_range,
    constants: PhysicalConstants = PROTON,
) -> SidebandTable:
    """k = sqrt(2 m (E_k0 + eta n hbar omega0)) / hbar per band, in inverse metres."""
    table = SidebandTable()
    quantum = n * constants.hbar * omega0
    for eta in eta_range:
        radicand = E_k0 + eta * quantum
        if radicand < 0:
            table.notes.append(f"eta={eta} excluded: below the bound {-E_k0 / quantum:.3f}")
            continue
        k = math.sqrt(2.0 * constants.mass * radicand) / constants.hbar
        table.rows.append(SidebandRow(eta=int(eta), n=n, k_theory=k))
    return table


def sideband_detect(
    spectrum: KSpectrum,
    predictions: SidebandTable | None = None,
    frame: ScalingFrame | None = None,
    median_factor: float = SIDEBAND_MEDIAN_FACTOR,
    relative_floor: float = SIDEBAND_RELATIVE_FLOOR,
    match_tolerance: float = SIDEBAND_MATCH_TOLERANCE,
) -> SidebandTable:
    """Rings of the forward radial profile above max(median_factor * median, relative_floor * peak).

    A ring is assigned the nearest predicted band only when it lies within
    ``match_tolerance`` (relative) of it; other rings are kept with ``eta=None``.
    """
    frame = frame or spectrum.frame
    radii, profile = radial_profile(spectrum)
    table = SidebandTable()
    top = profile.max()
    if top <= 0:
        return table
    occupied = profile[profile > 1e-6 * top]
    height = max(median_factor * float(np.median(occupied)), relative_floor * top)
    peaks, _ = find_peaks(profile, height=height)
    kr, weights = _ring_cells(spectrum, forward_only=True)
    scale = 1.0 if frame is None else 1.0 / frame.gamma

    candidates = {}
    for i, p in enumerate(peaks):
        half_width = _half_width(radii, profile, p)
        gaps = [abs(radii[p] - radii[q]) for q in peaks[max(i - 1, 0) : i + 2] if q != p]
        if gaps:
            half_width = min(half_width, 0.5 * min(gaps))
        k = _ring_centroid(kr, weights, float(radii[p]), half_width) * scale
        amplitude = float(profile[p] / top)
        if predictions is None or not predictions.rows:
            table.rows.append(SidebandRow(eta=None, n=None, k_theory=None, k_measured=k, amplitude=amplitude))
            continue
        match = min(predictions.rows, key=lambda row: abs(row.k_theory - k))
        error = abs(k - match.k_theory) / match.k_theory
        if error > match_tolerance:
            table.rows.append(SidebandRow(eta=None, n=match.n, k_theory=None, k_measured=k, amplitude=amplitude))
            table.notes.append(f"ring at k={k:.6g} is {error:.1%} from the nearest band eta={match.eta}")
            continue
        best = candidates.get(match.eta)
        if best is None or amplitude > best.amplitude:
            candidates[match.eta] = SidebandRow(match.eta, match.n, match.k_theory, k, amplitude)
    table.rows.extend(sorted(candidates.values(), key=lambda row: row.eta))
    if not table.rows:
        table.notes.append("no ring above the detection threshold")
    return table


def position_moments(field: WaveField) -> dict[str, float]:
    """Probability-weighted centroid and rms width along each axis."""
    density = field.density
    total = density.sum()
    px, py = density.sum(axis=1) / total, density.sum(axis=0) / total
    x, y = field.grid.x, field.grid.y
    mean_x, mean_y = float(px @ x), float(py @ y)
    return {
        "mean_x": mean_x,
        "mean_y": mean_y,
        "sigma_x": float(math.sqrt(px @ (x - mean_x) ** 2)),
        "sigma_y": float(math.sqrt(py @ (y - mean_y) ** 2)),
    }
