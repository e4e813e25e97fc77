"""Local HTTP facade over one project: JSON API plus the static correction UI.

Every capability of the loop/metrics/agreement modules is reachable here, and
everything the API can do the CLI can do too (both call the same Project).
Errors always carry exactly one ``{"error": {code, message, details}}``
document. Long operations (next-batch, finetune) run as a single background
job polled at /api/jobs/{id}; mutations serialize through the project's file
lock.
"""

from __future__ import annotations

import itertools
import threading
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import adapter, agreement, conllu, loop

ANNOTATOR_HEADER = "x-annotator"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details: Any = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details

    def response(self) -> JSONResponse:
        return JSONResponse(
            status_code=self.status,
            content={"error": {"code": self.code, "message": self.message, "details": self.details}},
        )


class TokenPatch(BaseModel):
    head: int | None = None
    deprel: str | None = None
    upos: str | None = None


class ActionBody(BaseModel):
    idempotency_key: str | None = None


class _Jobs:
    """At most one background job at a time; finished jobs stay queryable."""

    def __init__(self):
        self._lock = threading.Lock()
        self._jobs: dict[str, dict] = {}
        self._active: str | None = None
        self._counter = itertools.count(1)

    def start(self, kind: str, fn) -> dict:
        with self._lock:
            if self._active is not None and self._jobs[self._active]["state"] == "running":
                raise ApiError(409, "job_running",
                               f"job {self._active} is still running; poll /api/jobs/{self._active}")
            job_id = f"job-{next(self._counter)}"
            job = {"id": job_id, "kind": kind, "state": "running", "result": None, "error": None}
            self._jobs[job_id] = job
            self._active = job_id

        def run():
            try:
                job["result"] = fn()
                job["state"] = "done"
            except Exception as e:  # surfaced through the poll endpoint
                job["error"] = _error_doc(e)
                job["state"] = "failed"

        threading.Thread(target=run, daemon=True).start()
        return job

    def get(self, job_id: str) -> dict:
        job = self._jobs.get(job_id)
        if job is None:
            raise ApiError(404, "not_found", f"no job {job_id}")
        return job


def _error_doc(e: Exception) -> dict:
    if isinstance(e, loop.ValidationFailed):
        return {"code": "validation_failed", "message": str(e), "details": e.violations}
    if isinstance(e, adapter.AdapterError):
        return {"code": "backend_error", "message": str(e), "details": None}
    return {"code": "conflict", "message": str(e), "details": None}


def _sentence_payload(project: loop.Project, record: loop.BatchRecord | None,
                      sentence: conllu.Sentence, pseudo: conllu.Sentence | None) -> dict:
    orig_key = project.manifest.settings.misc_orig_key
    tokens = []
    for i, t in enumerate(sentence.tokens):
        p = pseudo.tokens[i] if pseudo is not None else None
        changed = p is not None and (t.head != p.head or t.deprel != p.deprel or t.upos != p.upos)
        tokens.append({
            "id": t.id, "form": t.form, "lemma": t.lemma, "upos": t.upos, "xpos": t.xpos,
            "feats": list(t.feats), "head": t.head, "deprel": t.deprel,
            "misc": list(t.misc), "orig": t.misc_value(orig_key),
            "changed": changed,
        })
    editable = record is not None and record.state in (loop.PSEUDO_ANNOTATED, loop.IN_CORRECTION)
    return {
        "sent_id": sentence.sent_id,
        "batch": record.index if record else None,
        "text": sentence.text,
        "text_orig": sentence.text_orig,
        "editable": editable,
        "tokens": tokens,
        "violations": conllu.validate(sentence),
    }


def _find_batch_of(project: loop.Project, sent_id: str) -> loop.BatchRecord | None:
    for b in project.manifest.batches:
        if sent_id in b.sentence_ids:
            return b
    return None


def create_app(project_dir, ui_dir=None) -> FastAPI:
    project = loop.Project.load(project_dir)
    jobs = _Jobs()
    app = FastAPI(title="treebench", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        return exc.response()

    @app.exception_handler(loop.LoopError)
    async def on_loop_error(request: Request, exc: loop.LoopError):
        doc = _error_doc(exc)
        status = 409 if doc["code"] in ("validation_failed", "conflict") else 500
        return ApiError(status, doc["code"], doc["message"], doc["details"]).response()

    def batch_or_404(index: int) -> loop.BatchRecord:
        try:
            return project.batch(index)
        except loop.LoopError as e:
            raise ApiError(404, "not_found", str(e)) from None

    @app.get("/api/project")
    def get_project():
        doc = project.manifest.as_dict()
        doc["remaining_pool"] = len(project.remaining_pool())
        doc["project_dir"] = str(project.dir)
        return doc

    @app.get("/api/labels")
    def get_labels():
        return {"labels": project.labels()}

    @app.post("/api/batches/next", status_code=202)
    def post_next_batch():
        stuck = project.in_progress_batch()
        if stuck is not None:
            raise ApiError(409, "conflict",
                           f"batch {stuck.index} is still in progress (state {stuck.state})")
        job = jobs.start("next-batch", lambda: {"batch": project.next_batch().index})
        return {"job": job["id"]}

    @app.get("/api/batches/{index}")
    def get_batch(index: int):
        return batch_or_404(index).as_dict()

    @app.get("/api/batches/{index}/sentences")
    def get_batch_sentences(index: int):
        record = batch_or_404(index)
        draft = project.draft(index)
        pseudo = project.pseudo(index)
        return [
            _sentence_payload(project, record, s, pseudo.sentence(s.sent_id))
            for s in draft.sentences
        ]

    @app.get("/api/sentences/{sent_id}")
    def get_sentence(sent_id: str):
        record = _find_batch_of(project, sent_id)
        if record is not None:
            draft = project.draft(record.index)
            pseudo = project.pseudo(record.index)
            return _sentence_payload(project, record, draft.sentence(sent_id),
                                     pseudo.sentence(sent_id))
        try:
            s = project.pool().sentence(sent_id)
        except KeyError:
            raise ApiError(404, "not_found", f"no sentence {sent_id!r}") from None
        return _sentence_payload(project, None, s, None)

    @app.patch("/api/sentences/{sent_id}/tokens/{token_id}")
    def patch_token(sent_id: str, token_id: int, patch: TokenPatch, request: Request):
        record = _find_batch_of(project, sent_id)
        if record is None:
            raise ApiError(404, "not_found", f"sentence {sent_id!r} is not in any batch")
        annotator = request.headers.get(ANNOTATOR_HEADER, "")
        edit = loop.Edit(token_id=token_id, head=patch.head, deprel=patch.deprel, upos=patch.upos)
        project.submit_correction(record.index, sent_id, [edit], annotator=annotator)
        draft = project.draft(record.index)
        pseudo = project.pseudo(record.index)
        return _sentence_payload(project, project.batch(record.index),
                                 draft.sentence(sent_id), pseudo.sentence(sent_id))

    @app.post("/api/batches/{index}/finalize")
    def post_finalize(index: int, body: ActionBody | None = None):
        batch_or_404(index)
        key = body.idempotency_key if body else None
        report = project.finalize_batch(index, idempotency_key=key)
        return report.as_dict()

    @app.post("/api/batches/{index}/finetune", status_code=202)
    def post_finetune(index: int, body: ActionBody | None = None):
        record = batch_or_404(index)
        key = body.idempotency_key if body else None
        if record.state == loop.FINETUNED and key and record.idempotency.get("finetune") == key:
            return {"job": None, "model": record.model_produced}
        if record.state != loop.GOLD_FINALIZED:
            raise ApiError(409, "conflict",
                           f"batch {index} is not finalized (state {record.state})")
        job = jobs.start("finetune",
                         lambda: {"model": project.finetune_step(index, idempotency_key=key)})
        return {"job": job["id"]}

    @app.get("/api/batches/{index}/report")
    def get_report(index: int):
        record = batch_or_404(index)
        if record.report is None:
            raise ApiError(404, "not_found", f"batch {index} has no report yet")
        doc = record.report.as_dict()
        doc["batch"] = index
        doc["model_used"] = record.model_used
        return doc

    @app.get("/api/batches/{index}/confusion.csv")
    def get_confusion_csv(index: int):
        record = batch_or_404(index)
        if record.report is None:
            raise ApiError(404, "not_found", f"batch {index} has no report yet")
        return PlainTextResponse(record.report.confusion.to_csv(), media_type="text/csv")

    @app.get("/api/trend")
    def get_trend():
        try:
            return {"series": project.trend_report()}
        except loop.LoopError:
            return {"series": []}

    @app.get("/api/agreement/{study_name}")
    def get_agreement(study_name: str):
        study_dir = project.dir / "agreement" / study_name
        if not study_dir.is_dir():
            raise ApiError(404, "not_found", f"no agreement study {study_name!r}")
        files = sorted(p for p in study_dir.glob("*.conllu") if p.stem != "adjudicated")
        if len(files) != 2:
            raise ApiError(409, "conflict",
                           f"study {study_name!r} needs exactly two annotator files, found {len(files)}")
        try:
            study = agreement.study_from_files(files[0], files[1])
            st = project.manifest.settings
            report = agreement.agreement_report(study, ignore_punct=st.ignore_punct,
                                                strip_subtypes=st.strip_subtypes)
        except (agreement.AgreementError, conllu.ConlluError) as e:
            raise ApiError(409, "conflict", str(e)) from None
        kappa_doc = report.kappa.as_dict()
        if report.kappa.degenerate:
            kappa_doc["kappa"] = None  # NaN is not valid JSON
        return {
            "study": study_name,
            "annotators": [report.annotator_a, report.annotator_b],
            "kappa": kappa_doc,
            "attachment": report.attachment.as_dict(),
            "flags": {"ignore_punct": report.ignore_punct, "strip_subtypes": report.strip_subtypes},
            "disagreements": [d.__dict__ for d in agreement.list_disagreements(study)],
        }

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        return jobs.get(job_id)

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index():
            return (
                "<!doctype html><title>treebench</title>"
                "<h1>treebench API</h1><p>No UI bundle configured. "
                "Pass --ui-dir to `treebench serve` or use the JSON API under /api/.</p>"
            )

    return app


def serve(project_dir, host: str = "127.0.0.1", port: int = 8000, ui_dir=None) -> None:
    import uvicorn

    app = create_app(project_dir, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
