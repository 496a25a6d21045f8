from datetime import datetime

from sqlalchemy import BigInteger, Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import relationship

from talbot.database import Base


class RunRecord(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    name = Column(String, nullable=False, index=True)
    config_hash = Column(String(64), nullable=False, index=True)
    output_dir = Column(String, nullable=False)
    manifest_path = Column(String, nullable=False)
    software_version = Column(String, nullable=False)
    status = Column(String, nullable=False)
    point_count = Column(Integer, default=0)
    failed_count = Column(Integer, default=0)
    wall_time = Column(Float, default=0.0)
    created_at = Column(DateTime, default=datetime.utcnow)

    points = relationship("PointRecord", back_populates="run", cascade="all, delete-orphan", order_by="PointRecord.index")
    artifacts = relationship("ArtifactRecord", back_populates="run", cascade="all, delete-orphan", order_by="ArtifactRecord.path")


class PointRecord(Base):
    __tablename__ = "sweep_points"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("runs.id"), nullable=False)
    index = Column(Integer, nullable=False)
    label = Column(String, nullable=False)
    role = Column(String, nullable=False)
    parameters = Column(Text, nullable=False, default="{}")
    status = Column(String, nullable=False)
    error = Column(Text, nullable=True)
    wall_time = Column(Float, default=0.0)

    run = relationship("RunRecord", back_populates="points")


class ArtifactRecord(Base):
    __tablename__ = "artifacts"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("runs.id"), nullable=False)
    path = Column(String, nullable=False)
    kind = Column(String, nullable=False)
    size = Column(BigInteger, nullable=False)
    sha256 = Column(String(64), nullable=False)

    run = relationship("RunRecord", back_populates="artifacts")
