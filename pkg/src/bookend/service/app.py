"""HTTP service for interactive bookended-generation sessions.

A session starts from one start sentence. Each attempt owns a phrase list
(generated or user-edited), then a stop, then stepwise or one-shot
infilling, then scores. Attempts are append-only so edits can be compared
side by side.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..backends import BackendError, BackendSuite, GenerationParams, remote_suite, stub_suite
from ..chat_pipeline import PromptMethod, generate_stop_llm, infill_all_llm
from ..config import DEFAULT_GAMMA, DEFAULT_LENGTH, DEFAULT_SEED, Markers
from ..corpus import Sentence, Story, split_sentences
from ..endpoints import SOURCE_GENERATED, SOURCE_USER_EDITED, generate_phrase_list, generate_stop
from ..infill import InfillState, infill_once
from ..metrics import TokenShapeParser, evaluate_story
from ..sampling import PhraseList
from .store import SessionNotFound, SessionStore

log = logging.getLogger(__name__)

_SCHEME_RE = re.compile(r"^(lm|llm-method-[1-6])$")


@dataclass
class ServiceConfig:
    data_dir: str = "./sessions"
    seed: int = DEFAULT_SEED
    n: int = DEFAULT_LENGTH
    gamma: float = DEFAULT_GAMMA
    markers: Markers = field(default_factory=Markers)
    backend: str = "stub"
    backend_url: str | None = None
    frontend_dir: str | None = None

    def make_suite(self) -> BackendSuite:
        if self.backend == "stub":
            return stub_suite(seed=self.seed, mask_marker=self.markers.mask)
        if self.backend == "remote":
            if not self.backend_url:
                raise ValueError("remote backend needs backend_url")
            return remote_suite(self.backend_url, mask_marker=self.markers.mask)
        raise ValueError(f"unknown backend kind: {self.backend!r}")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: dict | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail or {}


class CreateSessionBody(BaseModel):
    start: str
    scheme: str = "lm"
    n: int | None = None


class PhraseListBody(BaseModel):
    tokens: list[str]


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    suite = config.make_suite()
    store = SessionStore(config.data_dir)
    parser = TokenShapeParser()
    params = GenerationParams(seed=config.seed)

    app = FastAPI(title="bookend session service")
    app.state.store = store
    app.state.config = config

    @app.exception_handler(ApiError)
    async def handle_api_error(_: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.exception_handler(SessionNotFound)
    async def handle_not_found(_: Request, exc: SessionNotFound) -> JSONResponse:
        return JSONResponse(
            status_code=404,
            content={"code": "not-found", "message": f"no such session: {exc.args[0]}", "detail": {}},
        )

    def session_config(n: int) -> dict:
        return {
            "n": n,
            "gamma": config.gamma,
            "markers": config.markers.to_dict(),
            "backends": suite.describe(),
            "seed": config.seed,
        }

    def scheme_method(scheme: str) -> PromptMethod | None:
        return PromptMethod(int(scheme.rsplit("-", 1)[1])) if scheme.startswith("llm-") else None

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        pieces = split_sentences(body.start)
        if len(pieces) != 1:
            raise ApiError(400, "invalid-start", f"start must be exactly one sentence, got {len(pieces)}")
        try:
            start = Sentence(pieces[0])
        except ValueError as exc:
            raise ApiError(400, "invalid-start", str(exc))
        if not _SCHEME_RE.match(body.scheme):
            raise ApiError(400, "invalid-scheme", f"scheme must be 'lm' or 'llm-method-1..6', got {body.scheme!r}")
        n = body.n if body.n is not None else config.n
        if n < 2:
            raise ApiError(400, "invalid-length", f"n must be >= 2, got {n}")

        phrase_list: list[str] = []
        warnings: list[str] = []
        if body.scheme == "lm":
            try:
                phrase_list = list(generate_phrase_list(start, suite.text, config.markers, params))
            except BackendError as exc:
                warnings.append(f"phrase generation failed: {exc}")
        state = store.create(start.text, body.scheme, session_config(n))
        with store.lock(state.id):
            store.append(
                state.id,
                {"event": "attempt_added", "phrase_list": phrase_list, "source": SOURCE_GENERATED, "warnings": warnings},
            )
        return store.get(state.id).to_dict()

    @app.get("/sessions")
    def list_sessions() -> list[dict]:
        return [
            {
                "id": s.id,
                "start": s.start,
                "scheme": s.scheme,
                "attempts": len(s.attempts),
                "created_at": s.created_at,
            }
            for s in store.list_sessions()
        ]

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return store.get(session_id).to_dict()

    @app.post("/sessions/{session_id}/phrase-list", status_code=201)
    def edit_phrase_list(session_id: str, body: PhraseListBody) -> dict:
        tokens = [t.strip() for t in body.tokens if t.strip()]
        deduped = list(PhraseList.dedup(tokens))
        warnings = []
        if len(deduped) != len(tokens):
            warnings.append("duplicate tokens removed")
        with store.lock(session_id):
            state = store.append(
                session_id,
                {"event": "attempt_added", "phrase_list": deduped, "source": SOURCE_USER_EDITED, "warnings": warnings},
            )
            return state.attempts[-1].to_dict()

    def _attempt_or_404(state, index: int):
        try:
            return state.attempt(index)
        except IndexError as exc:
            raise ApiError(404, "not-found", str(exc))

    @app.post("/sessions/{session_id}/attempts/{index}/stop")
    def make_stop(session_id: str, index: int) -> dict:
        with store.lock(session_id):
            state = store.get(session_id)
            attempt = _attempt_or_404(state, index)
            if attempt.stop is not None:
                raise ApiError(409, "stop-exists", f"attempt {index} already has a stop")
            start = Sentence(state.start)
            method = scheme_method(state.scheme)
            intermediates = None
            try:
                if method is None:
                    stop = generate_stop(start, PhraseList(tuple(attempt.phrase_list)), suite.text, config.markers, params)
                else:
                    stop, inter, _ = generate_stop_llm(method, start, suite.chat, params)
                    intermediates = inter.to_dict()
            except BackendError as exc:
                raise ApiError(502, "backend-error", f"stop generation failed: {exc}")
            sentences = [state.start, stop.text]
            store.append(
                session_id,
                {"event": "stop_set", "attempt": index, "stop": stop.text, "sentences": sentences, "intermediates": intermediates},
            )
            if state.config["n"] == 2:
                store.append(session_id, {"event": "completed", "attempt": index, "final_story": sentences})
            return store.get(session_id).attempt(index).to_dict()

    def _infill_state(state, attempt) -> InfillState:
        if attempt.stop is None:
            raise ApiError(409, "no-stop", f"attempt {attempt.index} has no stop sentence yet")
        if len(attempt.sentences) >= state.config["n"]:
            raise ApiError(409, "already-complete", "story already has its target length")
        return InfillState(
            sentences=[Sentence(t) for t in attempt.sentences],
            target_length=state.config["n"],
        )

    def _do_step(session_id: str, state, attempt) -> dict:
        infill = _infill_state(state, attempt)
        try:
            step = infill_once(infill, suite.positions, suite.text, config.markers, params)
        except BackendError as exc:
            raise ApiError(502, "backend-error", f"infill step failed: {exc}")
        sentences = [s.text for s in infill.sentences]
        store.append(
            session_id,
            {"event": "infill_step", "attempt": attempt.index, "step": step.to_dict(), "sentences": sentences},
        )
        if len(sentences) == state.config["n"]:
            store.append(session_id, {"event": "completed", "attempt": attempt.index, "final_story": sentences})
        return {"step": step.to_dict(), "sentences": sentences}

    @app.post("/sessions/{session_id}/attempts/{index}/infill-step")
    def infill_step(session_id: str, index: int) -> dict:
        with store.lock(session_id):
            state = store.get(session_id)
            attempt = _attempt_or_404(state, index)
            if state.scheme != "lm":
                raise ApiError(400, "unsupported-for-scheme", "stepwise infilling only applies to the lm scheme")
            return _do_step(session_id, state, attempt)

    @app.post("/sessions/{session_id}/attempts/{index}/infill-complete")
    def infill_complete(session_id: str, index: int) -> dict:
        with store.lock(session_id):
            state = store.get(session_id)
            attempt = _attempt_or_404(state, index)
            n = state.config["n"]
            if state.scheme == "lm":
                if attempt.stop is None:
                    raise ApiError(409, "no-stop", f"attempt {index} has no stop sentence yet")
                if len(attempt.sentences) >= n:
                    raise ApiError(409, "already-complete", "story already has its target length")
                while len(store.get(session_id).attempt(index).sentences) < n:
                    _do_step(session_id, state, store.get(session_id).attempt(index))
            else:
                if attempt.stop is None:
                    raise ApiError(409, "no-stop", f"attempt {index} has no stop sentence yet")
                if attempt.final_story is not None:
                    raise ApiError(409, "already-complete", "story already has its target length")
                start, stop = Sentence(state.start), Sentence(attempt.stop)
                try:
                    middles, _ = infill_all_llm(start, stop, n - 2, suite.chat, params)
                except BackendError as exc:
                    raise ApiError(502, "backend-error", f"infilling failed: {exc}")
                final = [start.text, *[m.text for m in middles], stop.text]
                store.append(session_id, {"event": "completed", "attempt": index, "final_story": final})
            return store.get(session_id).attempt(index).to_dict()

    @app.post("/sessions/{session_id}/attempts/{index}/score")
    def score_attempt(session_id: str, index: int) -> dict:
        with store.lock(session_id):
            state = store.get(session_id)
            attempt = _attempt_or_404(state, index)
            if attempt.final_story is None:
                raise ApiError(409, "not-finished", f"attempt {index} has no finished story to score")
            story = Story.from_texts(attempt.final_story)
            relatedness, quality = evaluate_story(story, suite.sentences, parser)
            scores = {**relatedness.to_dict(), "distinct_ngrams": quality.distinct_ngrams}
            store.append(session_id, {"event": "scored", "attempt": index, "scores": scores})
            return scores

    if config.frontend_dir and Path(config.frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.frontend_dir, html=True), name="ui")

    return app
