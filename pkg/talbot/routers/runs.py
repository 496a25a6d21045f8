from typing import Optional

from fastapi import APIRouter, Depends, HTTPException, Query, status
from sqlalchemy.orm import Session

from talbot import models
from talbot.database import get_db
from talbot.schemas import ArtifactRead, LedgerSummary, RunDetail, RunRead
from talbot.services.stats import ledger_summary

router = APIRouter(prefix="/runs", tags=["Runs"])
summary_router = APIRouter(tags=["Ledger"])


def _get_run(db: Session, run_id: int) -> models.RunRecord:
    run = db.get(models.RunRecord, run_id)
    if run is None:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail="Run not found")
    return run


@router.get("/", response_model=list[RunRead])
def list_runs(
    run_status: Optional[str] = Query(None, alias="status", description="Filter by run status (ok, partial, failed)"),
    name: Optional[str] = Query(None, description="Filter by scenario name"),
    db: Session = Depends(get_db),
) -> list[models.RunRecord]:
    query = db.query(models.RunRecord)
    if run_status:
        query = query.filter(models.RunRecord.status == run_status)
    if name:
        query = query.filter(models.RunRecord.name == name)
    return query.order_by(models.RunRecord.created_at.desc(), models.RunRecord.id.desc()).all()


@summary_router.get("/summary", response_model=LedgerSummary)
def summary(db: Session = Depends(get_db)) -> dict:
    return ledger_summary(db)


@router.get("/{run_id}", response_model=RunDetail)
def get_run(run_id: int, db: Session = Depends(get_db)) -> models.RunRecord:
    return _get_run(db, run_id)


@router.get("/{run_id}/artifacts", response_model=list[ArtifactRead])
def list_artifacts(
    run_id: int,
    kind: Optional[str] = Query(None, description="Filter by artifact kind"),
    db: Session = Depends(get_db),
) -> list[models.ArtifactRecord]:
    run = _get_run(db, run_id)
    return [a for a in run.artifacts if kind is None or a.kind == kind]
