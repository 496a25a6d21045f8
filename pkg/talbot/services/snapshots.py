"""
Self-describing binary snapshot files.

Layout (little-endian, no padding): a fixed header

    magic 8s | version u32 | Nx u32 | Ny u32 | dX f64 | dY f64 | T f64 |
    gamma f64 | tau f64 | V0 f64 | step i64 | dT f64 | X_origin f64 | Y_origin f64

followed by the real lattice and then the imaginary lattice, each Nx*Ny float64
values in row-major (Nx, Ny) order. The imaginary lattice is the leapfrog one at
T + dT/2, so a reloaded field carries no ``imag_prev``.
"""

from dataclasses import asdict, dataclass
from pathlib import Path
from struct import Struct

import numpy as np

from talbot.exceptions import SnapshotFormatError
from talbot.services.scaling import GridSpec, ScalingFrame, WaveField

MAGIC = b"QTALBOT1"
FORMAT_VERSION = 1
HEADER = Struct("<8sIIIddddddqddd")
PAYLOAD_DTYPE = np.dtype("<f8")


@dataclass(frozen=True)
class SnapshotHeader:
    version: int
    nx: int
    ny: int
    dx: float
    dy: float
    time: float
    gamma: float
    tau: float
    V0: float
    step_index: int
    dt: float
    x_origin: float
    y_origin: float

    @property
    def payload_bytes(self) -> int:
        return 2 * self.nx * self.ny * PAYLOAD_DTYPE.itemsize

    def grid(self) -> GridSpec:
        return GridSpec(self.nx, self.ny, self.dx, self.dy, (self.x_origin, self.y_origin))

    def frame(self) -> ScalingFrame:
        return ScalingFrame(gamma=self.gamma, tau=self.tau, V0=self.V0)

    def as_dict(self) -> dict:
        return asdict(self)


def encode_snapshot(field: WaveField, frame: ScalingFrame) -> bytes:
    grid = field.grid
    header = HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        grid.nx,
        grid.ny,
        grid.dx,
        grid.dy,
        field.time,
        frame.gamma,
        frame.tau,
        frame.V0,
        field.step_index,
        field.dt,
        grid.origin[0],
        grid.origin[1],
    )
    real = np.ascontiguousarray(field.real, dtype=PAYLOAD_DTYPE)
    imag = np.ascontiguousarray(field.imag, dtype=PAYLOAD_DTYPE)
    return header + real.tobytes() + imag.tobytes()


def decode_header(data: bytes) -> SnapshotHeader:
    if len(data) < HEADER.size:
        raise SnapshotFormatError(f"snapshot holds {len(data)} bytes, header needs {HEADER.size}")
    magic, version, *values = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad snapshot magic {magic!r}")
    if version != FORMAT_VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {version}")
    return SnapshotHeader(version, *values)


def decode_snapshot(data: bytes) -> tuple[WaveField, SnapshotHeader]:
    header = decode_header(data)
    expected = HEADER.size + header.payload_bytes
    if len(data) != expected:
        raise SnapshotFormatError(f"snapshot holds {len(data)} bytes, header describes {expected}")
    count = header.nx * header.ny
    payload = np.frombuffer(data, dtype=PAYLOAD_DTYPE, count=2 * count, offset=HEADER.size)
    shape = (header.nx, header.ny)
    field = WaveField(
        real=payload[:count].reshape(shape).astype(float),
        imag=payload[count:].reshape(shape).astype(float),
        grid=header.grid(),
        dt=header.dt,
        step_index=header.step_index,
    )
    return field, header


def write_snapshot(path: Path | str, field: WaveField, frame: ScalingFrame) -> int:
    data = encode_snapshot(field, frame)
    Path(path).write_bytes(data)
    return len(data)


def read_snapshot(path: Path | str) -> tuple[WaveField, SnapshotHeader]:
    return decode_snapshot(Path(path).read_bytes())


def inspect_snapshot(path: Path | str) -> SnapshotHeader:
    path = Path(path)
    with path.open("rb") as fh:
        header = decode_header(fh.read(HEADER.size))
    size = path.stat().st_size
    if size != HEADER.size + header.payload_bytes:
        raise SnapshotFormatError(f"{path} holds {size} bytes, header describes {HEADER.size + header.payload_bytes}")
    return header
