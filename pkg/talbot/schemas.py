from datetime import datetime
from typing import Literal

from pydantic import BaseModel, Field, model_validator


class SweepRange(BaseModel):
    start: str
    stop: str
    num: int = Field(ge=1)

    class Config:
        extra = "forbid"


Axis = str | list[str] | SweepRange


class BeamSection(BaseModel):
    energy: str | None = None
    wavelength: str | None = None
    sigma_x: str
    sigma_y: str
    center_x: str
    center_y: str = "0 nm"

    class Config:
        extra = "forbid"

    @model_validator(mode="after")
    def one_of_energy_or_wavelength(self):
        if (self.energy is None) == (self.wavelength is None):
            raise ValueError("beam needs exactly one of 'energy' or 'wavelength'")
        return self


class FrameSection(BaseModel):
    V0: str | None = None
    gamma: str | None = None

    class Config:
        extra = "forbid"

    @model_validator(mode="after")
    def at_most_one_scale(self):
        if self.V0 is not None and self.gamma is not None:
            raise ValueError("frame takes either 'V0' or 'gamma', not both")
        return self


class LatticeSection(BaseModel):
    spacing: str | None = None
    points_per_wavelength: float | None = Field(default=None, gt=0)
    x_min: str
    x_max: str
    y_min: str
    y_max: str
    spatial_order: Literal[2, 4] = 4
    dt_fraction: float = Field(default=0.5, gt=0, le=1)
    damping_width: str | None = None
    boundary: Literal["dirichlet", "periodic"] = "dirichlet"
    norm_check_interval: int = Field(default=100, ge=1)
    norm_drift_abort: float = Field(default=1e-3, gt=0)
    max_steps: int = Field(default=2_000_000, ge=1)

    class Config:
        extra = "forbid"

    @model_validator(mode="after")
    def one_of_spacing(self):
        if (self.spacing is None) == (self.points_per_wavelength is None):
            raise ValueError("lattice needs exactly one of 'spacing' or 'points_per_wavelength'")
        return self


class GratingSection(BaseModel):
    period: str
    opening_fraction: str
    thickness: str
    barrier: str
    position: str = "0 nm"
    offset: str = "0 nm"
    half_width: str | None = None

    class Config:
        extra = "forbid"


class ImageChargeSection(BaseModel):
    enabled: bool = False
    cutoff: str | None = None
    induced_charge_factor: float = -1.0
    clamp_barriers: float | None = Field(default=50.0, gt=0)

    class Config:
        extra = "forbid"


FIELD_AXES = {
    "none": (),
    "uniform": ("E0", "theta"),
    "spatial": ("E0", "wavelength"),
    "temporal": ("E0", "omega"),
}


class FieldSection(BaseModel):
    kind: Literal["none", "uniform", "spatial", "temporal"] = "none"
    E0: Axis | None = None
    theta: Axis | None = None
    wavelength: Axis | None = None
    omega: Axis | None = None
    region: list[str] | None = None

    class Config:
        extra = "forbid"

    @model_validator(mode="after")
    def axes_match_kind(self):
        wanted = FIELD_AXES[self.kind]
        for name in ("E0", "theta", "wavelength", "omega"):
            given = getattr(self, name) is not None
            if given and name not in wanted:
                raise ValueError(f"field kind '{self.kind}' takes no '{name}' axis")
            if not given and name in wanted and name != "theta":
                raise ValueError(f"field kind '{self.kind}' needs an '{name}' axis")
        if self.region is not None and len(self.region) != 2:
            raise ValueError("field region is a list of two lengths [x_lo, x_hi]")
        return self


class SnapshotSection(BaseModel):
    planes: list[str] = ["1 LT", "2 LT"]
    times: list[str] = []
    write: bool = True

    class Config:
        extra = "forbid"


class AnalysisSection(BaseModel):
    visibility_half_window: str = "3 d"
    k_spectrum: bool = True
    fringe_reference: bool = True
    distortion: bool = True
    sidebands: bool = True
    eta_min: int = -3
    eta_max: int = 3

    class Config:
        extra = "forbid"

    @model_validator(mode="after")
    def eta_ordered(self):
        if self.eta_min > self.eta_max:
            raise ValueError("eta_min must not exceed eta_max")
        return self


class MaskSection(BaseModel):
    enabled: bool = False
    plane: str = "2 LT"
    opening_fraction: str | None = None
    thickness: str | None = None
    barrier: str | None = None
    step: str = "0.05 d"
    scan_range: str = "1 d"
    mode: Literal["transmission", "propagate"] = "transmission"

    class Config:
        extra = "forbid"


class OutputSection(BaseModel):
    directory: str | None = None
    parallelism: int | None = Field(default=None, ge=1)

    class Config:
        extra = "forbid"


class ScenarioFile(BaseModel):
    name: str
    species: str = "proton"
    beam: BeamSection
    frame: FrameSection = FrameSection()
    lattice: LatticeSection
    grating: GratingSection
    image_charge: ImageChargeSection = ImageChargeSection()
    field: FieldSection = FieldSection()
    snapshots: SnapshotSection = SnapshotSection()
    analysis: AnalysisSection = AnalysisSection()
    mask: MaskSection = MaskSection()
    output: OutputSection = OutputSection()

    class Config:
        extra = "forbid"


class ArtifactRead(BaseModel):
    id: int
    path: str
    kind: str
    size: int
    sha256: str

    class Config:
        from_attributes = True


class PointRead(BaseModel):
    id: int
    index: int
    label: str
    role: str
    parameters: str
    status: str
    error: str | None = None
    wall_time: float

    class Config:
        from_attributes = True


class RunRead(BaseModel):
    id: int
    name: str
    config_hash: str
    output_dir: str
    manifest_path: str
    software_version: str
    status: str
    point_count: int
    failed_count: int
    wall_time: float
    created_at: datetime

    class Config:
        from_attributes = True


class RunDetail(RunRead):
    points: list[PointRead] = []


class SlowRun(BaseModel):
    id: int
    name: str
    wall_time: float


class LedgerSummary(BaseModel):
    runs: int
    points: int
    failed_points: int
    artifact_bytes: int
    slowest: list[SlowRun]
