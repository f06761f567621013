"""HTTP service: submit materials, track jobs, fetch graphs, run evaluation
sessions. The annotator UI is served as a static bundle when present."""

from __future__ import annotations

import json
import threading
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Query
from fastapi.responses import Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field, field_validator

from .config import Settings
from .embedding import HashEmbedder
from .errors import ContractViolation, EmptyGraphError, NotFoundError
from .evaluation import SrsSession, format_accuracy
from .graph import export_jsonl, parse_jsonl
from .kb import KBStore, preprocess_dump
from .materials import MaterialStore
from .orchestration import InMemoryBroker, JobStore, WorkerPool, enqueue, job_status
from .pipeline import PipelineConfig, PipelineDeps, build_material


class ConfigOverrides(BaseModel):
    threshold: Optional[float] = None
    keyphrase_n: Optional[int] = Field(default=None, ge=1)
    related_cap: Optional[int] = Field(default=None, ge=0)
    category_cap: Optional[int] = Field(default=None, ge=0)
    extractor: Optional[str] = None
    disambiguation: Optional[bool] = None

    @field_validator("threshold")
    @classmethod
    def _threshold_range(cls, v):
        if v is not None and not -1.0 <= v <= 1.0:
            raise ValueError("threshold must be in [-1, 1]")
        return v

    @field_validator("extractor")
    @classmethod
    def _extractor_known(cls, v):
        if v is not None and v not in ("embedrank", "singlerank"):
            raise ValueError("extractor must be 'embedrank' or 'singlerank'")
        return v


class MaterialSubmission(BaseModel):
    material_id: str = Field(min_length=1)
    name: str = ""
    elements: dict
    config: ConfigOverrides = Field(default_factory=ConfigOverrides)


class SubmitResponse(BaseModel):
    job_id: str
    material_id: str


class JobResponse(BaseModel):
    job_id: str
    kind: str
    status: str
    attempts: int
    max_attempts: int
    error: Optional[str] = None


class SessionCreate(BaseModel):
    material_id: str
    seed: int = 0
    batch_size: int = Field(default=30, ge=1)
    annotator_id: str = ""


class SessionResponse(BaseModel):
    session_id: str
    material_id: str


class TripleResponse(BaseModel):
    triple_id: str
    subject: str
    predicate: str
    object: str
    subject_label: str
    object_label: str
    provenance: str
    context: dict


class JudgmentRequest(BaseModel):
    triple_id: str
    verdict: str
    task: str = "entity"

    @field_validator("verdict")
    @classmethod
    def _verdict_known(cls, v):
        if v not in ("correct", "incorrect"):
            raise ValueError("verdict must be 'correct' or 'incorrect'")
        return v


class StatsResponse(BaseModel):
    n: int
    mu: float
    sigma: float
    moe: float
    stopped: bool
    readout: str


class AppState:
    def __init__(self, settings: Settings, kb: KBStore | None = None):
        self.settings = settings
        self.embedder = HashEmbedder()
        self._kb = kb
        self.materials = MaterialStore(settings.materials_dir)
        self.job_store = JobStore()
        self.broker = InMemoryBroker()
        self.sessions: dict[str, tuple[SrsSession, str]] = {}
        self.submitted: set[str] = set()
        self.lock = threading.Lock()
        self.pool = WorkerPool(self.broker, self.job_store,
                               {"build_kg": self._build_kg,
                                "expand_kg": self._build_kg,
                                "preprocess_dump": self._preprocess_dump},
                               size=settings.workers)

    @property
    def kb(self) -> KBStore:
        if self._kb is None:
            self._kb = KBStore.load(self.settings.kb_path)
        return self._kb

    def pipeline_config(self, overrides: dict) -> PipelineConfig:
        base = dict(threshold=self.settings.threshold,
                    extractor=self.settings.extractor,
                    keyphrase_n=self.settings.keyphrase_n,
                    related_cap=self.settings.related_cap,
                    category_cap=self.settings.category_cap)
        base.update({k: v for k, v in overrides.items() if v is not None})
        return PipelineConfig(**base)

    def _build_kg(self, payload: dict) -> None:
        config = self.pipeline_config(payload.get("config", {}))
        deps = PipelineDeps.local(self.kb, self.embedder, config)
        build_material(payload["material_id"], payload.get("name", ""),
                       payload["elements"], deps, config, store=self.materials)

    def _preprocess_dump(self, payload: dict) -> None:
        preprocess_dump(Path(payload["dump_path"]).read_bytes(),
                        self.embedder, payload["store_path"])


def create_app(settings: Settings | None = None, kb: KBStore | None = None) -> FastAPI:
    settings = settings or Settings()
    state = AppState(settings, kb=kb)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        state.pool.start()
        yield
        state.pool.stop()

    app = FastAPI(title="edukg", lifespan=lifespan)
    app.state.edukg = state

    def auth(x_api_token: str = Header(default="")):
        if settings.api_token and x_api_token != settings.api_token:
            raise HTTPException(status_code=401, detail="invalid token")

    @app.post("/materials", response_model=SubmitResponse, status_code=202,
              dependencies=[Depends(auth)])
    def submit(material: MaterialSubmission):
        with state.lock:
            if material.material_id in state.submitted:
                raise HTTPException(status_code=409,
                                    detail=f"material {material.material_id} already submitted")
            state.submitted.add(material.material_id)
        job_id = enqueue(state.broker, state.job_store, "build_kg", {
            "material_id": material.material_id,
            "name": material.name,
            "elements": material.elements,
            "config": material.config.model_dump(),
        })
        return SubmitResponse(job_id=job_id, material_id=material.material_id)

    @app.get("/jobs/{job_id}", response_model=JobResponse,
             dependencies=[Depends(auth)])
    def get_job(job_id: str):
        try:
            job = job_status(state.job_store, job_id)
        except NotFoundError:
            raise HTTPException(status_code=404, detail=f"no job {job_id}")
        return JobResponse(job_id=job.job_id, kind=job.kind, status=job.status,
                           attempts=job.attempts, max_attempts=job.max_attempts,
                           error=job.error)

    @app.get("/materials/{material_id}/kg", dependencies=[Depends(auth)])
    def get_kg(material_id: str, level: str = Query(default="material"),
               slide_no: Optional[int] = None):
        if level == "slide":
            if slide_no is None:
                raise HTTPException(status_code=422, detail="slide_no required for level=slide")
            try:
                kg = state.materials.read_fragment(material_id, slide_no)
            except NotFoundError as exc:
                raise HTTPException(status_code=404, detail=str(exc))
        elif level == "material":
            if not state.materials.exists(material_id):
                raise HTTPException(status_code=404, detail=f"unknown material {material_id}")
            if not state.materials.material_ready(material_id):
                raise HTTPException(status_code=409, detail="material-level merge pending")
            kg = state.materials.read_material(material_id)
        else:
            raise HTTPException(status_code=422, detail=f"unknown level {level!r}")
        records = [json.loads(line) for line in
                   export_jsonl(kg).decode().splitlines()]
        return {"material_id": material_id, "level": level, "records": records}

    @app.get("/materials/{material_id}/slides", dependencies=[Depends(auth)])
    def list_slides(material_id: str):
        try:
            slides = state.materials.slide_numbers(material_id)
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {"material_id": material_id, "slides": slides,
                "material_ready": state.materials.material_ready(material_id)}

    @app.post("/eval/sessions", response_model=SessionResponse,
              dependencies=[Depends(auth)])
    def create_session(req: SessionCreate):
        try:
            kg = state.materials.read_material(req.material_id)
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        sessions_dir = Path(settings.sessions_dir)
        sessions_dir.mkdir(parents=True, exist_ok=True)
        try:
            session = SrsSession(kg, seed=req.seed, batch_size=req.batch_size,
                                 annotator_id=req.annotator_id)
        except EmptyGraphError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        session.log_path = sessions_dir / f"{session.session_id}.jsonl"
        with state.lock:
            state.sessions[session.session_id] = (session, req.material_id)
        return SessionResponse(session_id=session.session_id,
                               material_id=req.material_id)

    def _session(session_id: str) -> tuple[SrsSession, str]:
        entry = state.sessions.get(session_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return entry

    def _label(kg_node) -> str:
        if kg_node is None:
            return ""
        return str(kg_node.prop("title") or kg_node.prop("name") or kg_node.id)

    @app.get("/eval/sessions/{session_id}/next", response_model=TripleResponse,
             dependencies=[Depends(auth)])
    def next_triple(session_id: str):
        session, material_id = _session(session_id)
        if session.stats.stopped:
            raise HTTPException(status_code=409, detail="session stopped")
        triple = session.next_triple()
        if triple is None:
            raise HTTPException(status_code=409, detail="sample pool exhausted")
        kg = state.materials.read_material(material_id)
        meta = state.materials.meta(material_id)
        context: dict = {}
        if triple.provenance.startswith("slide:"):
            idx = int(triple.provenance.split(":")[1]) - 1
            texts = meta.get("slide_texts", [])
            if 0 <= idx < len(texts):
                context["slide_snippet"] = texts[idx][:400]
        if triple.object.startswith("page:") and state._kb is not None:
            try:
                context["object_abstract"] = state.kb.get(
                    int(triple.object.split(":")[1])).abstract[:400]
            except NotFoundError:
                pass
        return TripleResponse(
            triple_id=triple.key, subject=triple.subject,
            predicate=triple.predicate, object=triple.object,
            subject_label=_label(kg.node(triple.subject)),
            object_label=_label(kg.node(triple.object)),
            provenance=triple.provenance, context=context)

    @app.post("/eval/sessions/{session_id}/judgments", response_model=StatsResponse,
              dependencies=[Depends(auth)])
    def judge(session_id: str, req: JudgmentRequest):
        session, _ = _session(session_id)
        if session.stats.stopped:
            raise HTTPException(status_code=409, detail="session stopped")
        try:
            stats = session.judge(req.triple_id,
                                  1 if req.verdict == "correct" else 0, req.task)
        except ContractViolation as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return StatsResponse(readout=format_accuracy(stats.mu, stats.sigma),
                             **stats.to_dict())

    @app.get("/eval/sessions/{session_id}/stats", response_model=StatsResponse,
             dependencies=[Depends(auth)])
    def stats(session_id: str):
        session, _ = _session(session_id)
        s = session.stats
        return StatsResponse(readout=format_accuracy(s.mu, s.sigma), **s.to_dict())

    ui_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
