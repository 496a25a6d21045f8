"""
Scenario files: TOML documents whose physical quantities all carry units.

``parse_config`` validates the document section by section, converts every quantity
to the dimensionless frame and expands the field sweep into concrete points. Errors
are reported as ``ConfigParseError`` with the 1-based line of the offending key.
"""

import hashlib
import itertools
import json
import math
import re

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import ValidationError
from scipy import constants as sp

from talbot.exceptions import ConfigParseError, TalbotError
from talbot.schemas import AnalysisSection, ScenarioFile, SweepRange
from talbot.services.potentials import (
    FieldSpec,
    GratingRole,
    GratingSpec,
    ImageChargeSpec,
    PotentialStack,
    SpatialModField,
    TemporalModField,
    UniformField,
)
from talbot.services.scaling import (
    GridSpec,
    PacketSpec,
    PhysicalConstants,
    ScalingFrame,
    build_frame,
    check_packet_fits,
    frame_from_length,
    talbot_length,
)
from talbot.services.solver import (
    DEFAULT_SHARPNESS,
    Boundary,
    SolverConfig,
    default_damping,
    max_stable_dt,
    potential_ceiling,
)

_MEV = 1e-3 * sp.e

UNITS = {
    "length": {
        "pm": 1e-12,
        "angstrom": 1e-10,
        "Å": 1e-10,
        "nm": 1e-9,
        "um": 1e-6,
        "µm": 1e-6,
        "μm": 1e-6,
        "mm": 1e-3,
        "m": 1.0,
    },
    "energy": {"meV": _MEV, "eV": 1e3 * _MEV, "J": 1.0},
    "field": {"V/m": 1.0, "mV/m": 1e-3, "kV/m": 1e3},
    "angle": {"deg": math.pi / 180.0, "rad": 1.0},
    "frequency": {
        "rad/s": 1.0,
        "Hz": 2.0 * math.pi,
        "kHz": 2.0 * math.pi * 1e3,
        "MHz": 2.0 * math.pi * 1e6,
        "GHz": 2.0 * math.pi * 1e9,
    },
    "time": {"s": 1.0, "ns": 1e-9, "us": 1e-6, "ps": 1e-12},
    "ratio": {"%": 1e-2},
}

DERIVED_UNITS = {"length": ("lambda", "d", "LT"), "frequency": ("w0",)}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S.*?)?\s*$")


class _Invalid(Exception):
    def __init__(self, loc: tuple, message: str):
        super().__init__(message)
        self.loc = loc
        self.message = message


def parse_quantity(text: str, kind: str, derived: dict[str, float] | None = None) -> float:
    """Convert ``"<number> <unit>"`` to SI (lengths in m, energies in J, frequencies in rad/s)."""
    if not isinstance(text, str):
        raise ValueError(f"expected a quantity string such as '10 nm', got {text!r}")
    match = _QUANTITY.match(text)
    if match is None:
        raise ValueError(f"cannot read quantity {text!r}")
    number, unit = float(match.group(1)), match.group(2)
    known = UNITS[kind]
    if unit is None:
        raise ValueError(f"{text!r} needs a unit (one of {', '.join(sorted(known))})")
    if unit in known:
        return number * known[unit]
    derived = derived or {}
    if unit in DERIVED_UNITS.get(kind, ()):
        if unit not in derived:
            raise ValueError(f"unit '{unit}' is not available at this point of the file")
        return number * derived[unit]
    allowed = sorted(known) + list(DERIVED_UNITS.get(kind, ()))
    raise ValueError(f"unknown {kind} unit '{unit}' in {text!r} (expected one of {', '.join(allowed)})")


def expand_axis(axis, kind: str, derived: dict[str, float]) -> tuple[float, ...]:
    if isinstance(axis, SweepRange):
        start = parse_quantity(axis.start, kind, derived)
        stop = parse_quantity(axis.stop, kind, derived)
        return tuple(float(v) for v in np.linspace(start, stop, axis.num))
    if isinstance(axis, str):
        axis = [axis]
    if not axis:
        raise ValueError("sweep axis is empty")
    return tuple(parse_quantity(item, kind, derived) for item in axis)


@dataclass(frozen=True)
class SnapshotPlane:
    label: str
    x: float


@dataclass(frozen=True)
class SweepPoint:
    index: int
    label: str
    role: str
    parameters: dict
    fields: tuple[FieldSpec, ...] = ()


@dataclass(frozen=True)
class MaskSetup:
    grating: GratingSpec
    plane: SnapshotPlane
    offsets: tuple[float, ...]
    mode: str


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    config_hash: str
    constants: PhysicalConstants
    frame: ScalingFrame
    grid: GridSpec
    packet: PacketSpec
    solver: SolverConfig
    stack: PotentialStack
    beam_energy: float
    wavelength: float
    talbot_length: float
    field_kind: str
    field_region: tuple[float, float]
    omega0: float
    axes: dict
    planes: tuple[SnapshotPlane, ...]
    stop_times: tuple[float, ...]
    analysis: AnalysisSection
    visibility_half_window: float
    mask: MaskSetup | None
    points: tuple[SweepPoint, ...]
    output_dir: Path | None = None
    parallelism: int | None = None
    write_snapshots: bool = True
    document: dict = field(default_factory=dict, repr=False)

    @property
    def grating(self) -> GratingSpec:
        return self.stack.grating

    def stack_for(self, point: SweepPoint) -> PotentialStack:
        return PotentialStack(
            frame=self.frame,
            grating=self.stack.grating,
            image=self.stack.image,
            fields=point.fields,
            masks=self.stack.masks,
        )

    def to_dimensionless_length(self, metres: float) -> float:
        return metres / self.frame.gamma


def _locate(text: str, loc: tuple) -> int:
    """1-based line of the key at ``loc``, falling back to its section header or line 1."""
    lines = text.splitlines()
    keys = [str(part) for part in loc if isinstance(part, str)]
    if not keys:
        return 1
    if len(keys) == 1:
        key_line = re.compile(r"^\s*{}\s*=".format(re.escape(keys[0])))
        for number, line in enumerate(lines, start=1):
            if key_line.match(line):
                return number
        header = re.compile(r"^\s*\[\s*{}\s*\]".format(re.escape(keys[0])))
        for number, line in enumerate(lines, start=1):
            if header.match(line):
                return number
        return 1
    header = re.compile(r"^\s*\[\s*{}\s*\]".format(re.escape(keys[0])))
    start = None
    for number, line in enumerate(lines, start=1):
        if start is None:
            if header.match(line):
                start = number
            continue
        if line.lstrip().startswith("["):
            break
        if re.match(r"^\s*{}\s*=".format(re.escape(keys[1])), line):
            return number
    return start or 1


def _from_validation(text: str, exc: ValidationError) -> ConfigParseError:
    errors = exc.errors()
    missing = [".".join(str(p) for p in e["loc"]) for e in errors if e["type"] == "missing"]
    if missing and len(missing) == len(errors):
        return ConfigParseError(f"missing required keys: {', '.join(missing)}", _locate(text, errors[0]["loc"][:-1]))
    first = errors[0]
    where = ".".join(str(p) for p in first["loc"]) or "document"
    if first["type"] == "extra_forbidden":
        message = f"unknown key '{where}'"
    else:
        message = f"{where}: {first['msg']}"
    return ConfigParseError(message, _locate(text, first["loc"]))


def config_hash(document: ScenarioFile) -> str:
    canonical = json.dumps(document.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parse_config(text: str) -> ScenarioConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        found = re.search(r"line (\d+)", str(exc))
        raise ConfigParseError(f"malformed TOML: {exc}", int(found.group(1)) if found else None) from exc
    try:
        document = ScenarioFile.model_validate(raw)
    except ValidationError as exc:
        raise _from_validation(text, exc) from exc
    try:
        return _resolve(document, text)
    except _Invalid as exc:
        raise ConfigParseError(exc.message, _locate(text, exc.loc)) from exc


def load_config(path: Path | str) -> ScenarioConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _resolve(doc: ScenarioFile, text: str) -> ScenarioConfig:
    derived: dict[str, float] = {}

    def q(loc: tuple, value: str, kind: str) -> float:
        try:
            return parse_quantity(value, kind, derived)
        except ValueError as exc:
            raise _Invalid(loc, f"{'.'.join(loc)}: {exc}") from exc

    def guarded(loc: tuple, build):
        try:
            return build()
        except (TalbotError, ValueError) as exc:
            raise _Invalid(loc, f"{'.'.join(loc)}: {exc}") from exc

    constants = guarded(("species",), lambda: PhysicalConstants.for_species(doc.species))

    beam = doc.beam
    if beam.wavelength is not None:
        wavelength = q(("beam", "wavelength"), beam.wavelength, "length")
        if not wavelength > 0:
            raise _Invalid(("beam", "wavelength"), "beam.wavelength must be positive")
        k0 = 2.0 * math.pi / wavelength
        energy = (constants.hbar * k0) ** 2 / (2.0 * constants.mass)
    else:
        energy = q(("beam", "energy"), beam.energy, "energy")
        if not energy > 0:
            raise _Invalid(("beam", "energy"), "beam.energy must be positive")
        k0 = math.sqrt(2.0 * constants.mass * energy) / constants.hbar
        wavelength = 2.0 * math.pi / k0
    derived["lambda"] = wavelength

    g = doc.grating
    period = q(("grating", "period"), g.period, "length")
    derived["d"] = period
    derived["LT"] = talbot_length(period, wavelength)

    lat = doc.lattice
    if lat.spacing is not None:
        spacing = q(("lattice", "spacing"), lat.spacing, "length")
    else:
        spacing = wavelength / lat.points_per_wavelength
    if not spacing > 0:
        raise _Invalid(("lattice", "spacing"), "lattice.spacing must be positive")

    if doc.frame.V0 is not None:
        V0 = q(("frame", "V0"), doc.frame.V0, "energy")
        frame = guarded(("frame", "V0"), lambda: build_frame(V0, constants))
    elif doc.frame.gamma is not None:
        gamma = q(("frame", "gamma"), doc.frame.gamma, "length")
        frame = guarded(("frame", "gamma"), lambda: frame_from_length(gamma, constants))
    else:
        frame = frame_from_length(spacing, constants)
    gamma = frame.gamma

    bounds = {}
    for key in ("x_min", "x_max", "y_min", "y_max"):
        bounds[key] = q(("lattice", key), getattr(lat, key), "length")
    for lo, hi in (("x_min", "x_max"), ("y_min", "y_max")):
        if not bounds[lo] < bounds[hi]:
            raise _Invalid(("lattice", hi), f"lattice.{hi} must exceed lattice.{lo}")
    nx = int(round((bounds["x_max"] - bounds["x_min"]) / spacing)) + 1
    ny = int(round((bounds["y_max"] - bounds["y_min"]) / spacing)) + 1
    grid = guarded(
        ("lattice", "spacing"),
        lambda: GridSpec(nx, ny, spacing / gamma, spacing / gamma, (bounds["x_min"] / gamma, bounds["y_min"] / gamma)),
    )
    packet = guarded(
        ("beam", "sigma_x"),
        lambda: PacketSpec(
            sigma_x=q(("beam", "sigma_x"), beam.sigma_x, "length") / gamma,
            sigma_y=q(("beam", "sigma_y"), beam.sigma_y, "length") / gamma,
            center=(
                q(("beam", "center_x"), beam.center_x, "length") / gamma,
                q(("beam", "center_y"), beam.center_y, "length") / gamma,
            ),
            k=k0 * gamma,
        ),
    )
    guarded(("lattice", "spacing"), lambda: grid.check_resolution(packet.k))
    guarded(("beam", "center_x"), lambda: check_packet_fits(packet, grid))

    grating = guarded(
        ("grating",),
        lambda: GratingSpec(
            period=period / gamma,
            opening_fraction=q(("grating", "opening_fraction"), g.opening_fraction, "ratio"),
            thickness=q(("grating", "thickness"), g.thickness, "length") / gamma,
            barrier=q(("grating", "barrier"), g.barrier, "energy") / frame.V0,
            x_position=q(("grating", "position"), g.position, "length") / gamma,
            offset=q(("grating", "offset"), g.offset, "length") / gamma,
            half_width=None if g.half_width is None else q(("grating", "half_width"), g.half_width, "length") / gamma,
        ),
    )
    ic = doc.image_charge
    image = guarded(
        ("image_charge",),
        lambda: ImageChargeSpec(
            enabled=ic.enabled,
            cutoff=grid.dx if ic.cutoff is None else q(("image_charge", "cutoff"), ic.cutoff, "length") / gamma,
            induced_charge_factor=ic.induced_charge_factor,
            clamp_barriers=ic.clamp_barriers,
        ),
    )

    fs = doc.field
    x_hi_lattice = grid.x_range[1]
    if fs.region is None:
        region = (grating.back_face, x_hi_lattice)
    else:
        region = (
            q(("field", "region"), fs.region[0], "length") / gamma,
            q(("field", "region"), fs.region[1], "length") / gamma,
        )
        if not region[0] < region[1]:
            raise _Invalid(("field", "region"), "field.region must satisfy x_lo < x_hi")
    field_length = (region[1] - region[0]) * gamma
    velocity = constants.hbar * k0 / constants.mass
    omega0 = 2.0 * math.pi * velocity / field_length
    derived["w0"] = omega0

    kinds = {"E0": "field", "theta": "angle", "wavelength": "length", "omega": "frequency"}
    axes: dict[str, tuple[float, ...]] = {}
    for name in ("E0", "theta", "wavelength", "omega"):
        value = getattr(fs, name)
        if name == "theta" and fs.kind == "uniform" and value is None:
            value = "90 deg"
        if value is None:
            continue
        try:
            axes[name] = expand_axis(value, kinds[name], derived)
        except ValueError as exc:
            raise _Invalid(("field", name), f"field.{name}: {exc}") from exc

    points = guarded(("field",), lambda: _expand_points(doc, axes, region))

    damping = ()
    if lat.boundary == "dirichlet":
        sharpness = DEFAULT_SHARPNESS
        if lat.damping_width is not None:
            sharpness = q(("lattice", "damping_width"), lat.damping_width, "length") / gamma
        damping = default_damping(grid, sharpness)

    planes = []
    for i, plane in enumerate(doc.snapshots.planes):
        x = grating.back_face + q(("snapshots", "planes"), plane, "length") / gamma
        if not grid.x_range[0] <= x <= grid.x_range[1]:
            raise _Invalid(("snapshots", "planes"), f"snapshot plane '{plane}' lies outside the lattice")
        planes.append(SnapshotPlane(label=_plane_label(plane, i), x=x))
    stop_times = tuple(q(("snapshots", "times"), t, "time") / frame.tau for t in doc.snapshots.times)

    mask = None
    if doc.mask.enabled:
        m = doc.mask
        mask_x = grating.back_face + q(("mask", "plane"), m.plane, "length") / gamma
        mask_plane = next((p for p in planes if math.isclose(p.x, mask_x, rel_tol=1e-12, abs_tol=1e-9)), None)
        if mask_plane is None:
            if not grid.x_range[0] <= mask_x <= grid.x_range[1]:
                raise _Invalid(("mask", "plane"), "mask plane lies outside the lattice")
            mask_plane = SnapshotPlane(label="mask", x=mask_x)
            planes.append(mask_plane)
        mask_grating = guarded(
            ("mask",),
            lambda: GratingSpec(
                period=grating.period,
                opening_fraction=grating.opening_fraction
                if m.opening_fraction is None
                else q(("mask", "opening_fraction"), m.opening_fraction, "ratio"),
                thickness=grating.thickness if m.thickness is None else q(("mask", "thickness"), m.thickness, "length") / gamma,
                barrier=grating.barrier if m.barrier is None else q(("mask", "barrier"), m.barrier, "energy") / frame.V0,
                x_position=mask_x,
                role=GratingRole.MASK,
                offset=grating.offset + 0.5 * grating.period,
                half_width=grating.half_width,
            ),
        )
        step = q(("mask", "step"), m.step, "length") / gamma
        scan = q(("mask", "scan_range"), m.scan_range, "length") / gamma
        if not (step > 0 and scan >= 0):
            raise _Invalid(("mask", "step"), "mask.step must be positive and mask.scan_range non-negative")
        count = int(math.floor(scan / step + 1e-9)) + 1
        mask = MaskSetup(mask_grating, mask_plane, tuple(step * i for i in range(count)), m.mode)
    planes.sort(key=lambda p: p.x)

    stack = PotentialStack(frame=frame, grating=grating, image=image)
    ceiling = max(potential_ceiling(grid, PotentialStack(frame, grating, image, p.fields)) for p in points)
    if mask is not None and mask.mode == "propagate":
        ceiling += mask.grating.barrier
    dt = lat.dt_fraction * max_stable_dt(grid, lat.spatial_order, ceiling)
    solver = guarded(
        ("lattice",),
        lambda: SolverConfig(
            dt=dt,
            spatial_order=lat.spatial_order,
            damping=damping,
            norm_check_interval=lat.norm_check_interval,
            norm_drift_abort=lat.norm_drift_abort,
            boundary=Boundary(lat.boundary),
            max_steps=lat.max_steps,
            centroid_floor=grating.back_face,
        ),
    )

    return ScenarioConfig(
        name=doc.name,
        config_hash=config_hash(doc),
        constants=constants,
        frame=frame,
        grid=grid,
        packet=packet,
        solver=solver,
        stack=stack,
        beam_energy=energy,
        wavelength=wavelength,
        talbot_length=derived["LT"],
        field_kind=fs.kind,
        field_region=region,
        omega0=omega0,
        axes=axes,
        planes=tuple(planes),
        stop_times=stop_times,
        analysis=doc.analysis,
        visibility_half_window=q(("analysis", "visibility_half_window"), doc.analysis.visibility_half_window, "length")
        / gamma,
        mask=mask,
        points=points,
        output_dir=None if doc.output.directory is None else Path(doc.output.directory),
        parallelism=doc.output.parallelism,
        write_snapshots=doc.snapshots.write,
        document=doc.model_dump(mode="json"),
    )


def _plane_label(text: str, index: int) -> str:
    slug = re.sub(r"[^0-9A-Za-z.]+", "", text.replace(" ", ""))
    return slug or f"plane{index}"


def _make_field(kind: str, values: dict, region: tuple[float, float]) -> FieldSpec:
    if kind == "uniform":
        return UniformField(E0=values["E0"], region=region, theta=values["theta"])
    if kind == "spatial":
        return SpatialModField(E0=values["E0"], region=region, wavelength=values["wavelength"])
    return TemporalModField(E0=values["E0"], region=region, omega=values["omega"])


def _expand_points(doc: ScenarioFile, axes: dict, region: tuple[float, float]) -> tuple[SweepPoint, ...]:
    kind = doc.field.kind
    if kind == "none":
        return (SweepPoint(0, "free", "sweep", {}),)
    names = list(axes)
    points = []
    for values in itertools.product(*(axes[n] for n in names)):
        parameters = dict(zip(names, values))
        label = "_".join(f"{n}{i}" for n, i in zip(names, _indices(axes, names, values)))
        points.append(SweepPoint(len(points), label, "sweep", parameters, (_make_field(kind, parameters, region),)))
    if doc.analysis.fringe_reference:
        points.append(SweepPoint(len(points), "reference", "reference", {"E0": 0.0}))
    if kind == "spatial" and doc.analysis.distortion:
        for E0 in axes["E0"]:
            parameters = {"E0": E0, "theta": math.pi / 2}
            uniform = UniformField(E0=E0, region=region, theta=math.pi / 2)
            label = f"uniform_E0{axes['E0'].index(E0)}"
            points.append(SweepPoint(len(points), label, "uniform-reference", parameters, (uniform,)))
    return tuple(points)


def _indices(axes: dict, names: list, values: tuple) -> list[int]:
    return [axes[n].index(v) for n, v in zip(names, values)]


def describe(cfg: ScenarioConfig) -> dict:
    """Summary printed by ``talbot validate``."""
    return {
        "name": cfg.name,
        "config_hash": cfg.config_hash,
        "species": cfg.constants.species,
        "lattice": f"{cfg.grid.nx} x {cfg.grid.ny}",
        "lattice_points": cfg.grid.size,
        "gamma_m": cfg.frame.gamma,
        "tau_s": cfg.frame.tau,
        "V0_J": cfg.frame.V0,
        "dT": cfg.solver.dt,
        "points_per_wavelength": cfg.grid.points_per_wavelength(cfg.packet.k),
        "wavelength_m": cfg.wavelength,
        "talbot_length_m": cfg.talbot_length,
        "omega0_rad_s": cfg.omega0,
        "field_kind": cfg.field_kind,
        "sweep_points": sum(1 for p in cfg.points if p.role == "sweep"),
        "total_points": len(cfg.points),
        "planes": [p.label for p in cfg.planes],
    }
