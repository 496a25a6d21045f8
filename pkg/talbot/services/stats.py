from sqlalchemy import func
from sqlalchemy.orm import Session

from talbot import models


def ledger_summary(db: Session) -> dict:
    total_runs = db.query(func.count(models.RunRecord.id)).scalar() or 0
    total_points = db.query(func.count(models.PointRecord.id)).scalar() or 0
    failed_points = (
        db.query(func.count(models.PointRecord.id)).filter(models.PointRecord.status != "ok").scalar() or 0
    )
    total_bytes = db.query(func.coalesce(func.sum(models.ArtifactRecord.size), 0)).scalar() or 0
    slowest = (
        db.query(models.RunRecord.id, models.RunRecord.name, models.RunRecord.wall_time)
        .order_by(models.RunRecord.wall_time.desc())
        .limit(5)
        .all()
    )
    return {
        "runs": total_runs,
        "points": total_points,
        "failed_points": failed_points,
        "artifact_bytes": total_bytes,
        "slowest": [{"id": row[0], "name": row[1], "wall_time": row[2]} for row in slowest],
    }
