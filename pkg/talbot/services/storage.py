import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import boto3
from botocore.client import Config

from talbot.config import Settings, get_settings
from talbot.exceptions import OutputDirectoryError

logger = logging.getLogger(__name__)

PROBE_NAME = ".write-probe"


@dataclass(frozen=True)
class Artifact:
    path: str
    kind: str
    size: int
    sha256: str

    def as_dict(self) -> dict:
        return {"path": self.path, "kind": self.kind, "size": self.size, "sha256": self.sha256}


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.12g}"
    return str(value)


class ArtifactStore:
    """Files of one run, addressed by paths relative to the run's output directory."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self._kinds: dict[str, str] = {}

    def ensure_writable(self) -> None:
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            probe = self.root / PROBE_NAME
            probe.write_bytes(b"")
            probe.unlink()
        except OSError as exc:
            raise OutputDirectoryError(f"output directory {self.root} is not writable: {exc}") from exc

    def path(self, relative: str) -> Path:
        target = self.root / relative
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def register(self, relative: str, kind: str) -> str:
        self._kinds[relative] = kind
        return relative

    def write_csv(self, relative: str, columns: list[tuple[str, str]], rows, kind: str = "table") -> str:
        """CSV with one ``# column: name [unit]`` comment line per column ahead of the header row."""
        with self.path(relative).open("w", newline="", encoding="utf-8") as fh:
            for name, unit in columns:
                fh.write(f"# column: {name} [{unit}]\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([name for name, _ in columns])
            for row in rows:
                writer.writerow([format_value(v) for v in row])
        return self.register(relative, kind)

    def write_matrix(
        self,
        relative: str,
        row_axis: tuple[str, str, list],
        column_axis: tuple[str, str, list],
        value: tuple[str, str],
        matrix,
    ) -> str:
        """2D map: first row holds the column-axis values, first column the row-axis values."""
        row_name, row_unit, row_values = row_axis
        col_name, col_unit, col_values = column_axis
        with self.path(relative).open("w", newline="", encoding="utf-8") as fh:
            fh.write(f"# column: {row_name} [{row_unit}]\n")
            fh.write(f"# row: {col_name} [{col_unit}]\n")
            fh.write(f"# value: {value[0]} [{value[1]}]\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"{row_name}\\{col_name}"] + [format_value(v) for v in col_values])
            for label, values in zip(row_values, matrix):
                writer.writerow([format_value(label)] + [format_value(v) for v in values])
        return self.register(relative, "map")

    def write_json(self, relative: str, payload: dict, kind: str | None = None) -> str:
        text = json.dumps(payload, indent=2, sort_keys=True, default=str)
        self.path(relative).write_text(text + "\n", encoding="utf-8")
        if kind is not None:
            self.register(relative, kind)
        return relative

    def artifacts(self) -> list[Artifact]:
        entries = []
        for relative in sorted(self._kinds):
            target = self.root / relative
            entries.append(Artifact(relative, self._kinds[relative], target.stat().st_size, sha256_file(target)))
        return entries


def _create_client(settings: Settings):
    session = boto3.session.Session(
        aws_access_key_id=settings.aws_access_key_id,
        aws_secret_access_key=settings.aws_secret_access_key,
        region_name=settings.aws_region,
    )
    return session.client(
        "s3",
        endpoint_url=settings.s3_endpoint_url,
        config=Config(signature_version="s3v4"),
    )


class S3Mirror:
    """Uploads finished run artifacts to ``<prefix>/<run name>/<relative path>``."""

    def __init__(self, settings: Settings | None = None, client=None):
        self.settings = settings or get_settings()
        self.bucket = self.settings.s3_bucket_name
        self.client = client or _create_client(self.settings)

    @classmethod
    def from_settings(cls, settings: Settings | None = None) -> "S3Mirror | None":
        settings = settings or get_settings()
        if not settings.s3_bucket_name:
            return None
        return cls(settings)

    def key_for(self, run_name: str, relative: str) -> str:
        return f"{self.settings.s3_prefix}/{run_name}/{relative}"

    def upload_run(self, run_name: str, root: Path, relatives: list[str]) -> dict:
        uploaded, failed = [], []
        for relative in relatives:
            key = self.key_for(run_name, relative)
            try:
                self.client.upload_file(Filename=str(root / relative), Bucket=self.bucket, Key=key)
                uploaded.append(key)
            except Exception as exc:
                logger.warning("mirror upload of %s failed: %s", relative, exc)
                failed.append({"path": relative, "error": str(exc)})
        return {
            "bucket": self.bucket,
            "prefix": self.key_for(run_name, ""),
            "uploaded": len(uploaded),
            "failed": failed,
            "status": "ok" if not failed else "partial",
        }
