"""HTTP/JSON front door for annotation campaigns.

Mutations are serialized through a single lock; reads see a consistent
snapshot because every handler runs under it. Votes are appended to the
campaign event log before the response is sent.
"""

from __future__ import annotations

import csv
import json
import threading
from pathlib import Path

from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from nlifoundry.annotate import (
    DEFAULT_GUIDELINES,
    Campaign,
    NotFound,
    VoteRejected,
    agreement_report,
    append_vote_event,
)
from nlifoundry.relations import parse_relation


class LabelSubmission(BaseModel):
    annotator: str
    label: str


def load_group_file(path) -> dict[str, set[str]]:
    """CSV of pair_id,group rows used to filter agreement statistics."""
    groups: dict[str, set[str]] = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.reader(handle):
            if len(row) < 2 or row[0] == "pair_id":
                continue
            groups.setdefault(row[1].strip(), set()).add(row[0].strip())
    return groups


def build_app(
    campaign: Campaign,
    log_path: str | Path | None = None,
    guidelines: str = DEFAULT_GUIDELINES,
    static_dir: str | Path | None = None,
    groups: dict[str, set[str]] | None = None,
) -> FastAPI:
    app = FastAPI(title="annotation campaign")
    lock = threading.Lock()

    @app.get("/api/tasks/next")
    def next_task(annotator: str) -> Response:
        with lock:
            try:
                task = campaign.next_task_for(annotator)
            except NotFound as exc:
                return JSONResponse({"error": str(exc)}, status_code=404)
            if task is None:
                return Response(status_code=204)
            return JSONResponse(task.to_view())

    @app.post("/api/tasks/{task_id}/label")
    def submit(task_id: str, submission: LabelSubmission) -> Response:
        try:
            label = parse_relation(submission.label)
        except ValueError as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        with lock:
            try:
                task = campaign.submit_label(task_id, submission.annotator, label)
            except NotFound as exc:
                return JSONResponse({"error": str(exc)}, status_code=404)
            except VoteRejected as exc:
                return JSONResponse({"error": str(exc)}, status_code=409)
            if log_path is not None:
                append_vote_event(log_path, task_id, submission.annotator, label)
            return JSONResponse({"status": task.status})

    @app.get("/api/progress")
    def progress() -> Response:
        with lock:
            return JSONResponse(campaign.progress())

    @app.get("/api/agreement")
    def agreement(group: str | None = None) -> Response:
        with lock:
            pair_ids = None
            if group is not None:
                if not groups or group not in groups:
                    return JSONResponse(
                        {"error": f"unknown group {group!r}"}, status_code=404
                    )
                pair_ids = groups[group]
            return JSONResponse(agreement_report(campaign, pair_ids).to_json())

    @app.get("/api/export")
    def export() -> Response:
        with lock:
            lines = [
                json.dumps(
                    {"pair_id": task.pair_id, "final_label": task.final_label.value}
                )
                for task in campaign.completed_tasks()
            ]
        body = "\n".join(lines) + ("\n" if lines else "")
        return PlainTextResponse(body, media_type="application/x-ndjson")

    @app.get("/api/guidelines")
    def get_guidelines() -> Response:
        return PlainTextResponse(guidelines, media_type="text/markdown")

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app


def serve(
    campaign: Campaign,
    log_path: str | Path | None,
    port: int,
    guidelines: str = DEFAULT_GUIDELINES,
    static_dir: str | Path | None = None,
    groups: dict[str, set[str]] | None = None,
) -> None:
    import uvicorn

    app = build_app(campaign, log_path, guidelines, static_dir, groups)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="info")
