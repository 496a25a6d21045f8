"""
Scenario execution: integrates every sweep point, analyses its snapshots, exports
plot-ready tables and writes the run manifest last.
"""

import json
import logging
import math
import time
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from multiprocessing import Pool
from pathlib import Path

import numpy as np
from sqlalchemy.exc import SQLAlchemyError

from talbot import __version__
from talbot.config import Settings, get_settings
from talbot.exceptions import ConfigurationError, TalbotError
from talbot.services import spectral
from talbot.services.oracle import analytic_free_gaussian
from talbot.services.scaling import WaveField, init_packet
from talbot.services.scenario import ScenarioConfig, SnapshotPlane, SweepPoint
from talbot.services.snapshots import write_snapshot
from talbot.services.solver import PlaneCrossing, StopTime, run_until
from talbot.services.storage import Artifact, ArtifactStore, S3Mirror

logger = logging.getLogger(__name__)

SNAPSHOT_SUFFIX = ".qsnap"
MANIFEST_NAME = "manifest.json"
PROPAGATE_CLEARANCE_WIDTHS = 4.0
FRINGE_PERIOD_BAND = (0.5, 2.0)


@dataclass
class PlaneResult:
    label: str
    plane_x: float
    time: float
    step_index: int
    profile: spectral.ScreenProfile
    visibility: float | None = None
    fringe_period: float | None = None
    grating_phase: float | None = None
    radial: tuple[np.ndarray, np.ndarray] | None = None
    ring_radius: float | None = None
    ky_centroid: float | None = None
    sidebands: spectral.SidebandTable | None = None
    icurve: spectral.ICurve | None = None
    snapshot_path: str | None = None
    notes: list[str] = field(default_factory=list)


@dataclass
class PointResult:
    point: SweepPoint
    status: str
    error: str | None = None
    wall_time: float = 0.0
    planes: list[PlaneResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def plane(self, label: str) -> PlaneResult | None:
        return next((p for p in self.planes if p.label == label), None)


@dataclass
class RunManifest:
    name: str
    config_hash: str
    software_version: str
    output_dir: str
    status: str
    wall_time: float
    constants: dict
    frame: dict
    lattice: dict
    solver: dict
    points: list[dict]
    artifacts: list[Artifact]
    created_at: str
    mirror: dict | None = None

    @property
    def failed_count(self) -> int:
        return sum(1 for p in self.points if p["status"] != "ok")

    @property
    def exit_code(self) -> int:
        return 0 if self.failed_count == 0 else 1

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "config_hash": self.config_hash,
            "software_version": self.software_version,
            "output_dir": self.output_dir,
            "status": self.status,
            "wall_time": self.wall_time,
            "constants": self.constants,
            "frame": self.frame,
            "lattice": self.lattice,
            "solver": self.solver,
            "points": self.points,
            "artifacts": [a.as_dict() for a in self.artifacts],
            "created_at": self.created_at,
            "mirror": self.mirror,
        }


def _snapshot_name(point: SweepPoint, plane_label: str) -> str:
    return f"snapshots/point_{point.index:03d}_{plane_label}{SNAPSHOT_SUFFIX}"


def _pattern_centre(profile: spectral.ScreenProfile) -> float:
    total = profile.intensity.sum()
    if total <= 0:
        return float(profile.y.mean())
    return float(np.dot(profile.y, profile.intensity) / total)


def analyse_plane(cfg: ScenarioConfig, point: SweepPoint, plane: SnapshotPlane, snap: WaveField) -> PlaneResult:
    profile = spectral.screen_profile(snap, plane.x)
    result = PlaneResult(plane.label, plane.x, snap.time, snap.step_index, profile)
    centre = _pattern_centre(profile)
    half = cfg.visibility_half_window
    try:
        result.visibility = spectral.visibility(profile, (centre - half, centre + half))
    except TalbotError as exc:
        result.notes.append(str(exc))
    try:
        d = cfg.grating.period
        band = (FRINGE_PERIOD_BAND[0] * d, FRINGE_PERIOD_BAND[1] * d)
        result.fringe_period = spectral.fringe_period(profile, band)
    except TalbotError as exc:
        result.notes.append(str(exc))
    result.grating_phase = spectral.grating_phase(profile, cfg.grating)

    if cfg.analysis.k_spectrum:
        spectrum = spectral.k_spectrum(snap, damping=cfg.solver.damping, frame=cfg.frame)
        result.radial = spectral.radial_profile(spectrum)
        result.ring_radius = cfg.frame.wavenumber_to_physical(spectral.ring_radius(spectrum))
        result.ky_centroid = cfg.frame.wavenumber_to_physical(spectrum.centroid()[1])
        omega = point.parameters.get("omega")
        if cfg.field_kind == "temporal" and cfg.analysis.sidebands and omega is not None:
            n = omega / cfg.omega0
            predictions = spectral.sideband_predict(
                cfg.beam_energy,
                cfg.omega0,
                n,
                range(cfg.analysis.eta_min, cfg.analysis.eta_max + 1),
                cfg.constants,
            )
            result.sidebands = spectral.sideband_detect(spectrum, predictions, cfg.frame)
            result.sidebands.notes.extend(predictions.notes)

    if cfg.mask is not None and cfg.mask.mode == "transmission" and plane.label == cfg.mask.plane.label:
        result.icurve = spectral.mask_scan(snap, cfg.mask.grating, cfg.mask.offsets)
    return result


def _propagated_mask_curve(cfg: ScenarioConfig, point: SweepPoint, start: WaveField) -> spectral.ICurve:
    """I_c(s_d) with the mask grating in the potential, one integration per offset."""
    mask = cfg.mask.grating
    width = analytic_free_gaussian(cfg.packet, start.time).sigma_x
    travel = (mask.back_face + PROPAGATE_CLEARANCE_WIDTHS * width - spectral.position_moments(start)["mean_x"])
    stop = start.time + max(travel, 0.0) / (2.0 * cfg.packet.k)
    base = cfg.stack_for(point)
    values = []
    for offset in cfg.mask.offsets:
        shifted = replace(mask, offset=mask.offset + offset)
        stack = replace(base, masks=base.masks + (shifted,))
        (after,) = run_until(start, stack, cfg.solver, [StopTime(stop, "mask")])
        density = after.density
        total = density.sum()
        beyond = cfg.grid.x > mask.back_face
        values.append(float(density[beyond].sum() / total) if total > 0 else 0.0)
    return spectral.ICurve(np.asarray(cfg.mask.offsets), np.asarray(values), mask.period)


def _integrate_point(cfg: ScenarioConfig, point: SweepPoint, output_dir: Path | None) -> list[PlaneResult]:
    stack = cfg.stack_for(point)
    initial = init_packet(cfg.packet, cfg.grid, cfg.solver.dt)
    planes = list(cfg.planes)
    schedule = [PlaneCrossing(p.x, p.label) for p in planes]

    pre_mask = None
    if cfg.mask is not None and cfg.mask.mode == "propagate":
        arrival = max(cfg.mask.grating.x_position - cfg.packet.center[0], 0.0) / (2.0 * cfg.packet.k)
        width = analytic_free_gaussian(cfg.packet, arrival).sigma_x
        pre_x = max(cfg.mask.grating.x_position - PROPAGATE_CLEARANCE_WIDTHS * width, cfg.grating.back_face)
        pre_mask = PlaneCrossing(pre_x, "pre-mask")
        schedule = sorted(schedule + [pre_mask], key=lambda e: e.position)

    snapshots = run_until(initial, stack, cfg.solver, schedule)
    by_label = {event.label: snap for event, snap in zip(schedule, snapshots)}
    if cfg.stop_times:
        timed = [StopTime(t, f"t{i}") for i, t in enumerate(cfg.stop_times)]
        for event, snap in zip(timed, run_until(initial, stack, cfg.solver, timed)):
            by_label[event.label] = snap
            # timed snapshots are read on the plane through the packet centroid
            centre = spectral.position_moments(snap)["mean_x"]
            planes.append(SnapshotPlane(event.label, float(np.clip(centre, *cfg.grid.x_range))))

    results = []
    for plane in planes:
        snap = by_label[plane.label]
        result = analyse_plane(cfg, point, plane, snap)
        if pre_mask is not None and plane.label == cfg.mask.plane.label:
            result.icurve = _propagated_mask_curve(cfg, point, by_label["pre-mask"])
        if output_dir is not None and cfg.write_snapshots:
            relative = _snapshot_name(point, plane.label)
            target = output_dir / relative
            target.parent.mkdir(parents=True, exist_ok=True)
            write_snapshot(target, snap, cfg.frame)
            result.snapshot_path = relative
        results.append(result)
    return results


def run_point(cfg: ScenarioConfig, point: SweepPoint, output_dir: Path | None = None) -> PointResult:
    started = time.perf_counter()
    try:
        planes = _integrate_point(cfg, point, output_dir)
    except Exception as exc:
        elapsed = time.perf_counter() - started
        logger.warning("point %d (%s) failed after %.1fs: %s", point.index, point.label, elapsed, exc)
        return PointResult(point, "failed", f"{type(exc).__name__}: {exc}", elapsed)
    elapsed = time.perf_counter() - started
    logger.info("point %d (%s) %s done in %.1fs", point.index, point.label, point.parameters, elapsed)
    return PointResult(point, "ok", None, elapsed, planes)


def _run_job(job) -> PointResult:
    cfg, point, output_dir = job
    return run_point(cfg, point, output_dir)


def sweep(cfg: ScenarioConfig, points, parallelism: int = 1, output_dir: Path | None = None) -> list[PointResult]:
    """Run points on up to ``parallelism`` processes; results come back in point-index order."""
    jobs = [(cfg, point, output_dir) for point in points]
    if parallelism <= 1 or len(jobs) <= 1:
        results = [_run_job(job) for job in jobs]
    else:
        with Pool(processes=min(parallelism, len(jobs))) as pool:
            results = pool.map(_run_job, jobs, chunksize=1)
    return sorted(results, key=lambda r: r.point.index)


def _normalised(profile: spectral.ScreenProfile) -> np.ndarray:
    total = profile.intensity.sum()
    return profile.intensity / total if total > 0 else profile.intensity


def distortion(profile: spectral.ScreenProfile, reference: spectral.ScreenProfile) -> float:
    """Relative L2 distance between unit-sum profiles."""
    a, b = _normalised(profile), _normalised(reference)
    scale = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / scale) if scale > 0 else math.nan


@dataclass
class Observables:
    """Cross-point quantities keyed by (point index, plane label)."""

    shift: dict = field(default_factory=dict)
    ambiguous: dict = field(default_factory=dict)
    delta_ky: dict = field(default_factory=dict)
    distortion: dict = field(default_factory=dict)


def derive_observables(cfg: ScenarioConfig, results: list[PointResult]) -> Observables:
    derived = Observables()
    reference = next((r for r in results if r.point.role == "reference" and r.ok), None)
    uniform = {r.point.parameters["E0"]: r for r in results if r.point.role == "uniform-reference" and r.ok}
    for result in results:
        if not result.ok:
            continue
        for plane in result.planes:
            key = (result.point.index, plane.label)
            ref_plane = reference.plane(plane.label) if reference is not None else None
            if ref_plane is not None:
                measured = spectral.fringe_shift(plane.profile, ref_plane.profile)
                derived.shift[key] = measured.shift * cfg.frame.gamma
                derived.ambiguous[key] = measured.ambiguous
                if plane.ky_centroid is not None and ref_plane.ky_centroid is not None:
                    derived.delta_ky[key] = plane.ky_centroid - ref_plane.ky_centroid
            partner = uniform.get(result.point.parameters.get("E0"))
            if result.point.role == "sweep" and cfg.field_kind == "spatial" and partner is not None:
                partner_plane = partner.plane(plane.label)
                if partner_plane is not None:
                    derived.distortion[key] = distortion(plane.profile, partner_plane.profile)
    return derived


def _nan(value) -> float:
    return math.nan if value is None else float(value)


def _point_parameters(point: SweepPoint) -> dict:
    params = dict(point.parameters)
    if "theta" in params:
        params["theta_deg"] = math.degrees(params.pop("theta"))
    return params


def sensitivity_rows(cfg: ScenarioConfig, results: list[PointResult], axis: str) -> list[tuple]:
    """SF of each sweep point relative to the smallest value of ``axis`` with all other axes equal."""
    if cfg.mask is None:
        return []
    label = cfg.mask.plane.label
    others = [name for name in cfg.axes if name != axis]
    groups = defaultdict(list)
    for result in results:
        plane = result.plane(label) if result.ok else None
        if result.point.role != "sweep" or plane is None or plane.icurve is None:
            continue
        key = tuple(result.point.parameters[name] for name in others)
        groups[key].append((result.point.parameters[axis], result.point.index, plane.icurve))
    rows = []
    for key in sorted(groups):
        members = sorted(groups[key], key=lambda m: m[0])
        base_value, base_index, base_curve = members[0]
        for value, index, curve in members[1:]:
            delta = value - base_value
            if axis == "theta":
                delta = math.degrees(delta)
            sf = spectral.sensitivity_factor(base_curve, curve, delta)
            rows.append((base_index, index, delta, base_curve.at_fraction(0.5), curve.at_fraction(0.5), sf))
    return rows


def export_observables(cfg: ScenarioConfig, results: list[PointResult], store: ArtifactStore) -> list[str]:
    gamma = cfg.frame.gamma
    d = cfg.grating.period * gamma
    written = []
    derived = derive_observables(cfg, results)

    for result in results:
        for plane in result.planes:
            stem = f"point_{result.point.index:03d}_{plane.label}"
            written.append(
                store.write_csv(
                    f"profiles/{stem}.csv",
                    [("y", "m"), ("intensity", "m^-2")],
                    zip(plane.profile.y * gamma, plane.profile.intensity / gamma**2),
                    kind="profile",
                )
            )
            if plane.radial is not None:
                radii, power = plane.radial
                written.append(
                    store.write_csv(
                        f"kspectra/{stem}_radial.csv",
                        [("k_r", "m^-1"), ("P", "1")],
                        zip(radii / gamma, power),
                        kind="radial-k-profile",
                    )
                )
            if plane.sidebands is not None:
                written.append(
                    store.write_csv(
                        f"sidebands/{stem}.csv",
                        [("eta", "1"), ("n", "1"), ("k_theory", "m^-1"), ("k_measured", "m^-1"), ("amplitude", "1")],
                        ((r.eta, r.n, r.k_theory, r.k_measured, r.amplitude) for r in plane.sidebands.rows),
                        kind="sideband-table",
                    )
                )
            if plane.icurve is not None:
                curve = plane.icurve
                written.append(
                    store.write_csv(
                        f"mask/{stem}_ic.csv",
                        [("s_d", "m"), ("s_d_over_d", "1"), ("I_c", "1")],
                        zip(curve.offsets * gamma, curve.offsets / curve.period, curve.intensities),
                        kind="mask-curve",
                    )
                )
            if plane.snapshot_path is not None:
                written.append(store.register(plane.snapshot_path, "snapshot"))

    columns = [
        ("index", "1"),
        ("label", "1"),
        ("role", "1"),
        ("status", "1"),
        ("E0", "V/m"),
        ("theta", "deg"),
        ("mod_wavelength", "m"),
        ("omega", "rad/s"),
        ("omega_over_w0", "1"),
        ("plane", "1"),
        ("plane_x", "m"),
        ("time", "s"),
        ("fringe_shift", "m"),
        ("fringe_shift_over_d", "1"),
        ("shift_ambiguous", "1"),
        ("visibility", "1"),
        ("fringe_period", "m"),
        ("grating_phase_over_d", "1"),
        ("ring_radius", "m^-1"),
        ("delta_ky", "m^-1"),
        ("distortion", "1"),
    ]
    rows = []
    for result in results:
        p = result.point.parameters
        theta = p.get("theta")
        omega = p.get("omega")
        head = [
            result.point.index,
            result.point.label,
            result.point.role,
            result.status,
            _nan(p.get("E0")),
            math.nan if theta is None else math.degrees(theta),
            _nan(p.get("wavelength")),
            _nan(omega),
            math.nan if omega is None else omega / cfg.omega0,
        ]
        if not result.planes:
            rows.append(head + [""] + [math.nan] * (len(columns) - len(head) - 1))
            continue
        for plane in result.planes:
            key = (result.point.index, plane.label)
            shift = derived.shift.get(key)
            rows.append(
                head
                + [
                    plane.label,
                    plane.plane_x * gamma,
                    plane.time * cfg.frame.tau,
                    _nan(shift),
                    math.nan if shift is None else shift / d,
                    derived.ambiguous.get(key, False),
                    _nan(plane.visibility),
                    math.nan if plane.fringe_period is None else plane.fringe_period * gamma,
                    math.nan if plane.grating_phase is None else plane.grating_phase / cfg.grating.period,
                    _nan(plane.ring_radius),
                    _nan(derived.delta_ky.get(key)),
                    _nan(derived.distortion.get(key)),
                ]
            )
    written.append(store.write_csv("observables.csv", columns, rows, kind="observables"))

    if "E0" in cfg.axes and cfg.field_kind != "none":
        ky_rows = []
        for result in results:
            if result.point.role != "sweep":
                continue
            for plane in result.planes:
                theta = result.point.parameters.get("theta")
                ky_rows.append(
                    (
                        result.point.index,
                        plane.label,
                        result.point.parameters["E0"],
                        math.nan if theta is None else math.degrees(theta),
                        _nan(derived.delta_ky.get((result.point.index, plane.label))),
                    )
                )
        written.append(
            store.write_csv(
                "delta_ky.csv",
                [("index", "1"), ("plane", "1"), ("E0", "V/m"), ("theta", "deg"), ("delta_ky", "m^-1")],
                ky_rows,
                kind="delta-ky-curve",
            )
        )

    if cfg.field_kind == "uniform":
        written.extend(_export_maps(cfg, results, derived, store))

    for axis, unit in (("E0", "V/m"), ("theta", "deg")):
        if len(cfg.axes.get(axis, ())) < 2:
            continue
        rows = sensitivity_rows(cfg, results, axis)
        if rows:
            written.append(
                store.write_csv(
                    f"sensitivity_{axis}.csv",
                    [
                        ("baseline_index", "1"),
                        ("index", "1"),
                        (f"delta_{axis}", unit),
                        ("I_c_half_baseline", "1"),
                        ("I_c_half", "1"),
                        ("SF", f"%/{unit}"),
                    ],
                    rows,
                    kind="sensitivity",
                )
            )
    return written


def _export_maps(cfg: ScenarioConfig, results, derived: Observables, store: ArtifactStore) -> list[str]:
    e_values = list(cfg.axes["E0"])
    t_values = list(cfg.axes["theta"])
    by_params = {
        (r.point.parameters["E0"], r.point.parameters["theta"]): r for r in results if r.point.role == "sweep"
    }
    d = cfg.grating.period * cfg.frame.gamma
    written = []
    for plane in cfg.planes:
        shift_map, vis_map = [], []
        for E0 in e_values:
            shift_row, vis_row = [], []
            for theta in t_values:
                result = by_params.get((E0, theta))
                plane_result = result.plane(plane.label) if result is not None and result.ok else None
                shift = derived.shift.get((result.point.index, plane.label)) if result is not None else None
                shift_row.append(math.nan if shift is None else shift / d)
                vis_row.append(math.nan if plane_result is None else _nan(plane_result.visibility))
            shift_map.append(shift_row)
            vis_map.append(vis_row)
        axes = (("E0", "V/m", e_values), ("theta", "deg", [math.degrees(t) for t in t_values]))
        written.append(store.write_matrix(f"maps/fringe_shift_{plane.label}.csv", *axes, ("s_over_d", "1"), shift_map))
        written.append(store.write_matrix(f"maps/visibility_{plane.label}.csv", *axes, ("V", "1"), vis_map))
    return written


def _solver_summary(cfg: ScenarioConfig) -> dict:
    s = cfg.solver
    return {
        "dT": s.dt,
        "spatial_order": s.spatial_order,
        "boundary": s.boundary.value,
        "damping": [{"edge": d.edge.value, "sharpness": d.sharpness, "position": d.position} for d in s.damping],
        "norm_check_interval": s.norm_check_interval,
        "norm_drift_abort": s.norm_drift_abort,
        "max_steps": s.max_steps,
        "centroid_floor": s.centroid_floor,
    }


def _run_status(results: list[PointResult]) -> str:
    failed = sum(1 for r in results if not r.ok)
    if failed == 0:
        return "ok"
    return "failed" if failed == len(results) else "partial"


def record_run(manifest: RunManifest, manifest_path: Path) -> int | None:
    """Store the run in the ledger database; failures are logged and swallowed."""
    from talbot import models
    from talbot.database import ledger_session

    try:
        with ledger_session() as db:
            run = models.RunRecord(
                name=manifest.name,
                config_hash=manifest.config_hash,
                output_dir=manifest.output_dir,
                manifest_path=str(manifest_path),
                software_version=manifest.software_version,
                status=manifest.status,
                point_count=len(manifest.points),
                failed_count=manifest.failed_count,
                wall_time=manifest.wall_time,
            )
            for p in manifest.points:
                run.points.append(
                    models.PointRecord(
                        index=p["index"],
                        label=p["label"],
                        role=p["role"],
                        parameters=json.dumps(p["parameters"], sort_keys=True),
                        status=p["status"],
                        error=p["error"],
                        wall_time=p["wall_time"],
                    )
                )
            for a in manifest.artifacts:
                run.artifacts.append(models.ArtifactRecord(path=a.path, kind=a.kind, size=a.size, sha256=a.sha256))
            db.add(run)
            db.flush()
            run_id = run.id
        return run_id
    except SQLAlchemyError as exc:
        logger.warning("could not record run %s in the ledger: %s", manifest.name, exc)
        return None


def run_scenario(
    cfg: ScenarioConfig,
    settings: Settings | None = None,
    output_dir: Path | str | None = None,
    parallelism: int | None = None,
    record: bool = True,
    mirror: S3Mirror | None = None,
) -> RunManifest:
    settings = settings or get_settings()
    root = Path(output_dir or cfg.output_dir or Path(settings.output_root) / cfg.name)
    store = ArtifactStore(root)
    store.ensure_writable()
    if cfg.grid.size > settings.max_lattice_points:
        raise ConfigurationError(
            f"lattice of {cfg.grid.size} points exceeds max_lattice_points={settings.max_lattice_points}"
        )
    workers = parallelism or cfg.parallelism or settings.parallelism
    logger.info("run %s: %d points on %d worker(s) into %s", cfg.name, len(cfg.points), workers, root)

    started = time.perf_counter()
    results = sweep(cfg, cfg.points, workers, root)
    export_observables(cfg, results, store)
    store.write_json("scenario.json", cfg.document, kind="config")

    manifest = RunManifest(
        name=cfg.name,
        config_hash=cfg.config_hash,
        software_version=__version__,
        output_dir=str(root),
        status=_run_status(results),
        wall_time=time.perf_counter() - started,
        constants=cfg.constants.as_dict(),
        frame=cfg.frame.as_dict(),
        lattice={"nx": cfg.grid.nx, "ny": cfg.grid.ny, "dX": cfg.grid.dx, "dY": cfg.grid.dy, "origin": list(cfg.grid.origin)},
        solver=_solver_summary(cfg),
        points=[
            {
                "index": r.point.index,
                "label": r.point.label,
                "role": r.point.role,
                "parameters": _point_parameters(r.point),
                "status": r.status,
                "error": r.error,
                "wall_time": r.wall_time,
            }
            for r in results
        ],
        artifacts=store.artifacts(),
        created_at=datetime.now(timezone.utc).isoformat(),
    )
    manifest_path = root / MANIFEST_NAME
    store.write_json(MANIFEST_NAME, manifest.as_dict())

    mirror = mirror if mirror is not None else S3Mirror.from_settings(settings)
    if mirror is not None:
        manifest.mirror = mirror.upload_run(cfg.name, root, [a.path for a in manifest.artifacts] + [MANIFEST_NAME])
        store.write_json(MANIFEST_NAME, manifest.as_dict())
    if record:
        record_run(manifest, manifest_path)
    logger.info("run %s finished: %s (%d failed)", cfg.name, manifest.status, manifest.failed_count)
    return manifest


def load_manifest(path: Path | str) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def diff_manifests(a: dict, b: dict) -> dict:
    """Compare artifact checksums of two manifests."""
    left = {item["path"]: item["sha256"] for item in a.get("artifacts", [])}
    right = {item["path"]: item["sha256"] for item in b.get("artifacts", [])}
    changed = sorted(p for p in left.keys() & right.keys() if left[p] != right[p])
    return {
        "identical": not changed and left.keys() == right.keys(),
        "config_hash_equal": a.get("config_hash") == b.get("config_hash"),
        "changed": changed,
        "only_in_first": sorted(left.keys() - right.keys()),
        "only_in_second": sorted(right.keys() - left.keys()),
    }
