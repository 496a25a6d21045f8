from functools import lru_cache
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    app_name: str = "Talbot Run Ledger"
    database_url: str = "sqlite:///./talbot_runs.db"
    output_root: str = "runs"
    parallelism: int = 1
    log_level: str = "INFO"
    max_lattice_points: int = 50_000_000
    aws_access_key_id: str | None = None
    aws_secret_access_key: str | None = None
    aws_region: str = "eu-central-1"
    s3_bucket_name: str | None = None  # mirror is off when unset
    s3_prefix: str = "talbot"
    s3_endpoint_url: str | None = None  # allows localstack/minio

    class Config:
        env_file = ".env"
        env_prefix = "TALBOT_"
        case_sensitive = False


@lru_cache
def get_settings() -> Settings:
    return Settings()
