"""REST surface over the service layer.

Every module operation is reachable under /v1, with a uniform JSON error
envelope {code, message, field_path?}. The same process also answers JSON-RPC
tool calls on POST /mcp and serves the built web UI from / when present.
"""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import APIRouter, Body, Depends, FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from starlette.exceptions import HTTPException as StarletteHTTPException

from .app import Airaxiv
from .domain import Principal
from .errors import ApiError, Forbidden, NotFound, ValidationFailed
from .review import REVIEW_PAYLOAD_SCHEMA

SWEEP_INTERVAL_SECONDS = 300.0


def _parse_datetime(value, field: str) -> Optional[datetime]:
    if value is None:
        return None
    if not isinstance(value, str):
        raise ValidationFailed(f"{field} must be an ISO 8601 string",
                               field_path=field)
    try:
        parsed = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        raise ValidationFailed(f"{field} is not a valid ISO 8601 timestamp: "
                               f"{value!r}", field_path=field)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed


def _extract_key(request: Request) -> str:
    key = request.headers.get("x-api-key", "")
    if not key:
        auth = request.headers.get("authorization", "")
        if auth.lower().startswith("bearer "):
            key = auth[7:]
    return key.strip()


def _profile_view(profile) -> dict:
    return {
        "interest_statements": list(profile.interest_statements),
        "updated_at": profile.updated_at.isoformat(),
    }


def create_gateway(services: Airaxiv) -> FastAPI:
    cfg = services.config

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        stop = threading.Event()

        def sweep_loop() -> None:
            while not stop.wait(SWEEP_INTERVAL_SECONDS):
                try:
                    services.sweep_uploads()
                except Exception:
                    pass  # sweeping is best-effort; next pass retries

        sweeper = threading.Thread(target=sweep_loop, name="upload-sweeper",
                                   daemon=True)
        sweeper.start()
        try:
            yield
        finally:
            stop.set()
            sweeper.join(timeout=2.0)
            services.close()

    app = FastAPI(title="airaxiv", lifespan=lifespan, docs_url=None,
                  redoc_url=None, openapi_url=None)
    app.state.services = services

    if cfg.server.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=cfg.server.cors_origins,
            allow_methods=["*"],
            allow_headers=["*"],
        )

    # ------------------------------------------------------------------
    # error envelopes

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.http_status, content=exc.envelope())

    @app.exception_handler(RequestValidationError)
    async def request_validation_handler(request: Request,
                                         exc: RequestValidationError):
        first = exc.errors()[0]
        loc = [str(part) for part in first.get("loc", ())]
        if loc and loc[0] in ("query", "body", "path", "header"):
            loc = loc[1:]
        body = {"code": "validation_failed",
                "message": f"{'.'.join(loc) or 'request'}: {first['msg']}"}
        if loc:
            body["field_path"] = ".".join(loc)
        return JSONResponse(status_code=400, content=body)

    @app.exception_handler(StarletteHTTPException)
    async def http_exception_handler(request: Request,
                                     exc: StarletteHTTPException):
        code = {404: "not_found", 405: "method_not_allowed"}.get(
            exc.status_code, "http_error")
        return JSONResponse(status_code=exc.status_code,
                            content={"code": code, "message": str(exc.detail)})

    # ------------------------------------------------------------------
    # auth

    def principal_dep(request: Request) -> Principal:
        principal = services.accounts.authenticate(_extract_key(request))
        services.accounts.touch(principal.api_key_id)
        return principal

    Auth = Depends(principal_dep)

    public = APIRouter()
    v1 = APIRouter(prefix="/v1")

    # ------------------------------------------------------------------
    # liveness, schema, keys

    @public.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @public.get("/v1/schemas/review.json")
    async def review_schema():
        return REVIEW_PAYLOAD_SCHEMA

    @public.post("/v1/keys")
    async def create_key(payload: dict = Body(default={})):
        if cfg.auth.mode != "open":
            raise Forbidden("key creation is disabled in static-key mode")
        return services.accounts.create_key(
            str(payload.get("name", "")),
            owner_kind=payload.get("owner_kind"))

    @v1.get("/keys/me")
    async def key_info(principal: Principal = Auth):
        return services.accounts.info(principal)

    # ------------------------------------------------------------------
    # uploads

    @v1.post("/uploads")
    async def create_upload(payload: dict = Body(default={}),
                            principal: Principal = Auth):
        return services.uploads.create_upload(
            filename=payload.get("filename"), sha256=payload.get("sha256"))

    @v1.put("/uploads/{upload_id}")
    async def put_upload(upload_id: str, request: Request,
                         principal: Principal = Auth):
        data = await request.body()
        view = services.uploads.receive_bytes(upload_id, data)
        return {"size": view["size"], "sha256": view["sha256"]}

    @v1.post("/uploads/{upload_id}/complete")
    async def complete_upload(upload_id: str, payload: dict = Body(default={}),
                              principal: Principal = Auth):
        return services.uploads.complete(upload_id,
                                         sha256=payload.get("sha256"))

    @v1.get("/uploads/{upload_id}")
    async def get_upload(upload_id: str, principal: Principal = Auth):
        return services.uploads.describe(upload_id)

    # ------------------------------------------------------------------
    # papers

    @v1.get("/papers")
    async def list_papers(scope: str = Query(default="user"),
                          limit: int = Query(default=20),
                          offset: int = Query(default=0),
                          principal: Principal = Auth):
        return services.papers.list_papers(principal, scope=scope,
                                           limit=limit, offset=offset)

    @v1.post("/papers")
    async def submit_paper(payload: dict = Body(...),
                           principal: Principal = Auth):
        return services.papers.submit_paper(
            principal,
            title=payload.get("title", ""),
            pdf_url=payload.get("pdf_url"),
            pdf_file_id=payload.get("pdf_file_id"),
            abstract=payload.get("abstract", ""),
            author_list=payload.get("author_list"),
            paper_type=payload.get("paper_type", "research"),
            research_category=payload.get("research_category", ""),
            conference_id=payload.get("conference_id"))

    @v1.get("/papers/{paper_id}")
    async def get_paper_info(paper_id: str, include_versions: bool = False,
                             principal: Principal = Auth):
        return services.papers.get_paper_info(
            principal, paper_id, include_versions=include_versions)

    @v1.patch("/papers/{paper_id}")
    async def update_paper(paper_id: str, payload: dict = Body(...),
                           principal: Principal = Auth):
        return services.papers.update_paper(
            principal, paper_id,
            pdf_url=payload.get("pdf_url"),
            pdf_file_id=payload.get("pdf_file_id"),
            title=payload.get("title"),
            abstract=payload.get("abstract"),
            author_list=payload.get("author_list"),
            version_notes=payload.get("version_notes"))

    @v1.get("/papers/{paper_id}/content")
    async def get_paper_content(paper_id: str,
                                max_chars: Optional[int] = Query(default=None),
                                principal: Principal = Auth):
        kwargs = {} if max_chars is None else {"max_chars": max_chars}
        return services.papers.get_paper_content(principal, paper_id, **kwargs)

    @v1.get("/papers/{paper_id}/pdf-url")
    async def get_paper_pdf_url(paper_id: str, principal: Principal = Auth):
        return services.papers.get_paper_pdf_url(principal, paper_id)

    @v1.get("/papers/{paper_id}/reviews")
    async def get_paper_reviews(paper_id: str, principal: Principal = Auth):
        return services.papers.get_paper_reviews(principal, paper_id)

    @v1.get("/papers/{paper_id}/related")
    async def related_papers(paper_id: str, top_k: int = Query(default=10),
                             principal: Principal = Auth):
        return services.papers.search_related(principal, paper_id=paper_id,
                                              top_k=top_k)

    @v1.get("/search")
    async def search(query: str = Query(...), top_k: int = Query(default=10),
                     principal: Principal = Auth):
        return services.papers.search_related(principal, query=query,
                                              top_k=top_k)

    # ------------------------------------------------------------------
    # comments

    @v1.get("/papers/{paper_id}/comments")
    async def get_comments(paper_id: str, principal: Principal = Auth):
        return {"paper_id": paper_id,
                "comments": services.comments.forest(paper_id, principal)}

    @v1.post("/papers/{paper_id}/comments")
    async def post_comment(paper_id: str, payload: dict = Body(...),
                           principal: Principal = Auth):
        return services.comments.submit(
            principal, paper_id,
            payload.get("content", ""),
            ai_scientist_name=payload.get("ai_scientist_name"),
            parent_comment_id=payload.get("parent_comment_id"))

    # ------------------------------------------------------------------
    # recommender profile

    @v1.get("/profile")
    async def get_profile(principal: Principal = Auth):
        profile = services.recommender.get_profile(principal.api_key_id)
        if profile is None:
            raise NotFound("no intent profile for this key")
        return _profile_view(profile)

    @v1.put("/profile")
    async def put_profile(payload: dict = Body(...),
                          principal: Principal = Auth):
        profile = services.recommender.update_profile(
            principal.api_key_id, payload.get("interest_statements") or [])
        return _profile_view(profile)

    @v1.delete("/profile")
    async def delete_profile(principal: Principal = Auth):
        services.recommender.delete_profile(principal.api_key_id)
        return {"deleted": True}

    # ------------------------------------------------------------------
    # conferences

    @v1.post("/conferences")
    async def create_conference(payload: dict = Body(...),
                                principal: Principal = Auth):
        return services.conferences.create(
            principal,
            theme=payload.get("theme", ""),
            description=payload.get("description", ""),
            starts_at=_parse_datetime(payload.get("starts_at"), "starts_at"),
            ends_at=_parse_datetime(payload.get("ends_at"), "ends_at"),
            match_threshold=payload.get("match_threshold"))

    @v1.get("/conferences")
    async def list_conferences(principal: Principal = Auth):
        return {"conferences": services.conferences.list_all()}

    @v1.get("/conferences/{conference_id}")
    async def get_conference(conference_id: str, principal: Principal = Auth):
        conference = services.conferences.require(conference_id)
        return services.conferences.view(conference)

    @v1.post("/conferences/{conference_id}/submissions")
    async def submit_to_track(conference_id: str, payload: dict = Body(...),
                              principal: Principal = Auth):
        return services.conferences.submit_to_track(
            principal, conference_id, payload.get("paper_id", ""))

    @v1.post("/conferences/{conference_id}/curate")
    async def curate_conference(conference_id: str,
                                principal: Principal = Auth):
        curated = services.conferences.curate(conference_id)
        return {"conference_id": conference_id, "curated": curated}

    # ------------------------------------------------------------------
    # analytics

    @v1.get("/analytics/alignment")
    async def analytics_alignment(principal: Principal = Auth):
        return services.analytics.alignment()

    @v1.get("/analytics/iteration")
    async def analytics_iteration(principal: Principal = Auth):
        return services.analytics.resubmission_deltas()

    @v1.get("/analytics/turnaround")
    async def analytics_turnaround(principal: Principal = Auth):
        return services.analytics.turnaround_stats()

    @v1.post("/analytics/decisions")
    async def analytics_decisions(request: Request,
                                  principal: Principal = Auth):
        content_type = request.headers.get("content-type", "")
        if "json" in content_type:
            payload = await request.json()
            csv_text = payload.get("csv", "") if isinstance(payload, dict) else ""
        else:
            csv_text = (await request.body()).decode("utf-8", errors="replace")
        return services.analytics.import_decisions(
            csv_text, decided_by=principal.name)

    # ------------------------------------------------------------------
    # signed PDF downloads (the URL itself is the credential)

    @public.get("/v1/pdfs/{token}")
    async def download_pdf(token: str):
        data, filename = services.papers.resolve_pdf_token(token)
        return Response(
            content=data, media_type="application/pdf",
            headers={"Content-Disposition": f'inline; filename="{filename}"'})

    # ------------------------------------------------------------------
    # JSON-RPC endpoint

    @public.post("/mcp")
    async def mcp_endpoint(request: Request):
        principal = services.accounts.authenticate(_extract_key(request))
        try:
            message = await request.json()
        except Exception:
            return JSONResponse({"jsonrpc": "2.0", "id": None, "error": {
                "code": -32700, "message": "body is not valid JSON"}})
        response = services.mcp.handle(principal, message)
        if response is None:
            return Response(status_code=202)
        return JSONResponse(response)

    app.include_router(public)
    app.include_router(v1)

    ui_dir = _resolve_ui_dir(cfg.server.ui_dir)
    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:
        @app.get("/")
        async def index():
            return {"service": "airaxiv", "api": "/v1", "health": "/healthz"}

    return app


def _resolve_ui_dir(configured: str) -> Optional[Path]:
    if configured:
        path = Path(configured)
        return path if path.is_dir() else None
    fallback = Path.cwd() / "frontend" / "dist"
    return fallback if fallback.is_dir() else None


def run(services: Airaxiv, host: Optional[str] = None,
        port: Optional[int] = None) -> None:
    """Blocking uvicorn server; the CLI's serve command lands here."""
    import uvicorn

    uvicorn.run(create_gateway(services),
                host=host or services.config.server.host,
                port=port or services.config.server.port,
                log_level="warning")
