"""HTTP service around the revenue-management engine.

The pipeline endpoints execute batch commands on server-local paths; the
``/score`` and ``/decide`` endpoints serve the production flow for an
incoming booking: DMV check, volume prediction, and the accept/reject
suggestion against a prebuilt value table. Artifacts are loaded lazily
and cached by path and modification time.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..boosting import BoostedModel
from ..config import RunConfig
from ..dmv import DmvDirectory, flag
from ..errors import ConfigError, DataError, EngineError
from ..pipeline import COMMANDS
from ..policies import BookingDraw, Policy, decide
from ..prediction import model_predictor, predict_record
from ..value_function import ScalarValueTable, VectorValueTable, load_table
from .schemas import (
    DecideRequest,
    DecideResponse,
    HealthResponse,
    PipelineRequest,
    ScoreRequest,
    ScoreResponse,
)


class ArtifactCache:
    """Path-keyed cache invalidated when the file changes on disk."""

    def __init__(self):
        self._entries: dict[tuple[str, str], tuple[float, object]] = {}

    def _get(self, kind: str, path: Path, loader):
        if not path.exists():
            raise ConfigError(f"artifact does not exist: {path}")
        stamp = path.stat().st_mtime
        key = (kind, str(path))
        cached = self._entries.get(key)
        if cached is not None and cached[0] == stamp:
            return cached[1]
        loaded = loader()
        self._entries[key] = (stamp, loaded)
        return loaded

    def model(self, path: str) -> BoostedModel:
        resolved = Path(path)
        return self._get("model", resolved, lambda: BoostedModel.load(resolved))

    def directory(self, path: str) -> DmvDirectory:
        resolved = Path(path)
        return self._get("dmv", resolved, lambda: DmvDirectory.load(resolved))

    def table(self, stem: str):
        resolved = Path(stem)
        return self._get("table", resolved.with_suffix(".json"), lambda: load_table(resolved))


def _score(cache: ArtifactCache, request: ScoreRequest) -> ScoreResponse:
    record = request.booking.to_record()
    directory = cache.directory(request.dmv_directory) if request.dmv_directory else None
    flagged = directory is not None and flag(record, directory)
    model = cache.model(request.model)
    return ScoreResponse(
        dmv=flagged, predicted_rcsvol=predict_record(model, record, directory)
    )


def _decide(cache: ArtifactCache, request: DecideRequest) -> DecideResponse:
    record = request.booking.to_record()
    directory = cache.directory(request.dmv_directory) if request.dmv_directory else None
    flagged = flag(record, directory) if directory is not None else None

    if request.rule == "FCFS":
        capacity = request.capacity
        if capacity is None and request.value_table:
            capacity = cache.table(request.value_table).capacity
        policy = Policy(rule="FCFS", capacity=capacity)
        if isinstance(request.load, list):
            raise ConfigError("FCFS needs a scalar load")
        load = float(request.load)
        draw = BookingDraw(step=request.time_step, type_index=0,
                           bkvol=record.bkvol, rcsvol=0.0, record=record)
        return DecideResponse(
            accept=decide(policy, load, request.time_step, draw),
            rule="FCFS",
            planned_volume=record.bkvol,
            dmv=flagged,
        )

    if not request.value_table:
        raise ConfigError(f"rule {request.rule} needs a value_table")
    table = cache.table(request.value_table)
    expect_vector = request.rule in ("D1V", "D2V")
    if expect_vector and not isinstance(table, VectorValueTable):
        raise ConfigError(f"rule {request.rule} needs a vector value table")
    if not expect_vector and not isinstance(table, ScalarValueTable):
        raise ConfigError(f"rule {request.rule} needs a scalar value table")

    predictor = None
    if request.rule in ("D2V", "D2S"):
        if not request.model:
            raise ConfigError(f"rule {request.rule} needs a model")
        predictor = model_predictor(cache.model(request.model), directory, cache=False)

    policy = Policy(rule=request.rule, table=table, predictor=predictor)
    type_index = table.arrival.type_index(record.product_type)
    draw = BookingDraw(step=request.time_step, type_index=type_index,
                       bkvol=record.bkvol, rcsvol=0.0, record=record)
    if expect_vector:
        if not isinstance(request.load, list):
            raise ConfigError(f"rule {request.rule} needs the load as per-type counts")
        state = tuple(int(v) for v in request.load)
    else:
        if isinstance(request.load, list):
            raise ConfigError(f"rule {request.rule} needs a scalar load")
        state = float(request.load)

    accept = decide(policy, state, request.time_step, draw)
    planned = policy.planned_volume(draw)
    revenue = table.revenue.revenue(type_index, planned)
    reject_value = table.lookup(state, request.time_step - 1)
    grown = policy.next_state(state, draw, planned)
    accept_value = revenue + table.lookup(grown, request.time_step - 1)
    return DecideResponse(
        accept=accept,
        rule=request.rule,
        planned_volume=planned,
        dmv=flagged,
        accept_value=accept_value,
        reject_value=reject_value,
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="aircargo-rm",
        description="Air-cargo revenue management service",
        version=__version__,
    )
    cache = ArtifactCache()

    @app.exception_handler(EngineError)
    async def engine_error_handler(_: Request, exc: EngineError):
        kind = "data" if isinstance(exc, DataError) else "config"
        return JSONResponse(status_code=400, content={"detail": str(exc), "error_kind": kind})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/score", response_model=ScoreResponse)
    def score(request: ScoreRequest):
        return _score(cache, request)

    @app.post("/decide", response_model=DecideResponse)
    def decide_endpoint(request: DecideRequest):
        return _decide(cache, request)

    def _register_pipeline(command: str):
        @app.post(f"/pipeline/{command}", name=f"pipeline_{command}")
        def pipeline_endpoint(request: PipelineRequest):
            cfg = RunConfig(request.config, base_dir=request.base_dir)
            return COMMANDS[command](cfg)

    for command in COMMANDS:
        _register_pipeline(command)

    return app
