from fastapi import FastAPI

from talbot import __version__
from talbot.config import get_settings
from talbot.database import init_db
from talbot.routers import runs

app = FastAPI(title=get_settings().app_name, version=__version__)

app.include_router(runs.router)
app.include_router(runs.summary_router)


@app.on_event("startup")
def on_startup() -> None:
    init_db()


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}
