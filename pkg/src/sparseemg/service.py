"""Long-running design service: dataset browsing, streamed sweeps, stencils.

HTTP surface:
    GET  /datasets                 -> manifest summaries
    GET  /datasets/{name}/map.svg  -> selectable electrode map (SVG)
    POST /stencil                  -> printable stencil (SVG)
    GET  /models/{id}              -> persisted model artifact (JSON)

WebSocket surface (``/ws``): JSON messages with a top-level ``type``
discriminator and schema version ``v``. The client sends ``sweep`` and
``cancel``; the server streams ``progress`` events ascending in electrode
count and terminates every job with exactly one of ``result``, ``error`` or
``cancelled``. One sweep may be in flight per connection; further requests
get a busy error. Identical requests (same seed) produce identical terminal
results across restarts because all randomness is derived from the request
seed.

Configuration comes from flags or the environment: ``SPARSEEMG_PORT``,
``SPARSEEMG_DATA_DIR``, ``SPARSEEMG_WORKERS``, ``SPARSEEMG_MODEL_TTL_HOURS``.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Response, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .classifiers import CLASSIFIER_KINDS, ClassifierSpec, model_to_json, train
from .dataset import DatasetManifest, load_manifest, load_trials
from .features import build_feature_matrix
from .rng import derive_seed
from .selection import SCHEMES
from .stencil import ArmMeasurements, generate_electrode_map, generate_stencil
from .sweep import (
    DEFAULT_E_MAX,
    SparsityConfig,
    SweepCancelled,
    SweepResult,
    run_sweep,
)
from .validation import ValidationError

PROTOCOL_VERSION = 1


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8000
    data_dir: Path | None = None
    workers: int = 2
    model_ttl_hours: float = 24.0
    model_dir: Path | None = None  # defaults to <data_dir>/.models

    @classmethod
    def from_env(cls) -> "ServiceConfig":
        data_dir = os.environ.get("SPARSEEMG_DATA_DIR")
        return cls(
            port=int(os.environ.get("SPARSEEMG_PORT", "8000")),
            data_dir=Path(data_dir) if data_dir else None,
            workers=int(os.environ.get("SPARSEEMG_WORKERS", "2")),
            model_ttl_hours=float(os.environ.get("SPARSEEMG_MODEL_TTL_HOURS", "24")),
        )


@dataclass(frozen=True)
class SweepRequest:
    dataset: str
    user: str
    gestures: tuple[int, ...]
    candidate_electrodes: tuple[int, ...]  # empty = all manifest electrodes
    max_electrodes: int = DEFAULT_E_MAX
    scheme: str = "PI"
    classifier: str = "RF"
    seed: int = 0
    sparsity: SparsityConfig = field(default_factory=SparsityConfig)


def _require(data: dict, key: str, kind, default=None, required=True):
    if key not in data or data[key] is None:
        if required:
            raise ValidationError(key, "is required")
        return default
    value = data[key]
    if kind is int and isinstance(value, bool):
        raise ValidationError(key, "must be an integer")
    if not isinstance(value, kind):
        raise ValidationError(key, f"must be of type {kind.__name__}")
    return value


def _int_list(data: dict, key: str, required: bool) -> list[int]:
    raw = _require(data, key, list, default=[], required=required)
    out = []
    for i, item in enumerate(raw):
        if isinstance(item, bool) or not isinstance(item, int):
            raise ValidationError(f"{key}[{i}]", "must be an integer")
        out.append(item)
    return out


def parse_sweep_request(data: dict, registry: dict[str, DatasetManifest]) -> SweepRequest:
    """Validate a raw request dict; errors name the offending field path."""
    if not isinstance(data, dict):
        raise ValidationError("request", "must be a JSON object")
    dataset = _require(data, "dataset", str)
    if dataset not in registry:
        raise ValidationError("dataset", f"unknown dataset {dataset!r}")
    manifest = registry[dataset]

    user = _require(data, "user", str)
    if user not in manifest.users:
        raise ValidationError("user", f"unknown user {user!r} in dataset {dataset!r}")

    gestures = _int_list(data, "gestures", required=True)
    if not gestures:
        raise ValidationError("gestures", "must be non-empty")
    known_gestures = set(manifest.gesture_ids())
    for i, g in enumerate(gestures):
        if g not in known_gestures:
            raise ValidationError(f"gestures[{i}]", f"unknown gesture id {g}")

    candidates = _int_list(data, "candidate_electrodes", required=False)
    known_electrodes = set(manifest.electrode_ids())
    for i, e in enumerate(candidates):
        if e not in known_electrodes:
            raise ValidationError(f"candidate_electrodes[{i}]", f"unknown electrode id {e}")

    max_electrodes = _require(data, "max_electrodes", int, DEFAULT_E_MAX, required=False)
    if max_electrodes < 2:
        raise ValidationError("max_electrodes", "must be >= 2")

    scheme = _require(data, "scheme", str, "PI", required=False)
    if scheme not in SCHEMES:
        raise ValidationError("scheme", f"must be one of {', '.join(SCHEMES)}")
    classifier = _require(data, "classifier", str, "RF", required=False)
    if classifier not in CLASSIFIER_KINDS:
        raise ValidationError("classifier", f"must be one of {', '.join(CLASSIFIER_KINDS)}")
    seed = _require(data, "seed", int, 0, required=False)

    sparsity = SparsityConfig()
    if data.get("sparsity") is not None:
        raw = data["sparsity"]
        if not isinstance(raw, dict):
            raise ValidationError("sparsity", "must be an object with w1/w2")
        try:
            sparsity = SparsityConfig(float(raw.get("w1", 0.5)), float(raw.get("w2", 0.5)))
        except (TypeError, ValueError):
            raise ValidationError("sparsity", "w1/w2 must be numbers")

    return SweepRequest(
        dataset=dataset, user=user, gestures=tuple(gestures),
        candidate_electrodes=tuple(candidates), max_electrodes=max_electrodes,
        scheme=scheme, classifier=classifier, seed=seed, sparsity=sparsity,
    )


class ModelStore:
    """Content-addressed on-disk model artifacts with a TTL."""

    def __init__(self, directory: Path, ttl_hours: float):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.ttl_seconds = ttl_hours * 3600.0
        self._lock = threading.Lock()

    def _path(self, artifact_id: str) -> Path:
        return self.directory / f"{artifact_id}.json"

    def put(self, payload: str) -> str:
        artifact_id = hashlib.sha256(payload.encode()).hexdigest()[:16]
        with self._lock:
            self.purge_expired()
            path = self._path(artifact_id)
            if not path.exists():
                path.write_text(payload)
        return artifact_id

    def get(self, artifact_id: str) -> str | None:
        with self._lock:
            self.purge_expired()
            path = self._path(artifact_id)
            if not path.exists():
                return None
            return path.read_text()

    def purge_expired(self) -> None:
        cutoff = time.time() - self.ttl_seconds
        for path in self.directory.glob("*.json"):
            if path.stat().st_mtime < cutoff:
                path.unlink(missing_ok=True)


def load_registry(data_dir: Path) -> dict[str, DatasetManifest]:
    """Scan ``data_dir`` for ``<dataset>/manifest.json`` entries."""
    registry: dict[str, DatasetManifest] = {}
    if data_dir is None or not Path(data_dir).is_dir():
        return registry
    for manifest_path in sorted(Path(data_dir).glob("*/manifest.json")):
        manifest = load_manifest(manifest_path)
        registry[manifest.name] = manifest
    return registry


def _manifest_summary(m: DatasetManifest) -> dict:
    return {
        "name": m.name,
        "channel_count": m.channel_count,
        "sampling_rate_hz": m.sampling_rate_hz,
        "gestures": [{"id": g.id, "name": g.name} for g in m.gestures],
        "electrodes": [{"id": e.id, "x_mm": e.x_mm, "y_mm": e.y_mm} for e in m.electrodes],
        "electrode_diameter_mm": m.electrode_diameter_mm,
        "users": list(m.users),
        "sessions_per_user": m.sessions_per_user,
    }


def _error_response(err: ValidationError, status: int = 422) -> JSONResponse:
    return JSONResponse({"error": {"field": err.field, "message": err.message}},
                        status_code=status)


def _event(kind: str, **payload) -> dict:
    return {"type": kind, "v": PROTOCOL_VERSION, **payload}


def execute_sweep(request: SweepRequest, manifest: DatasetManifest,
                  store: ModelStore, workers: int = 1,
                  progress=None, should_stop=None) -> tuple[SweepResult, str]:
    """Run the sweep for a validated request and persist the chosen model.

    Returns the result plus the stored model artifact id. Blocking; the
    service calls this on its worker pool.
    """
    sessions = list(range(1, manifest.sessions_per_user + 1))
    trials = load_trials(manifest, request.user, sessions)
    candidates = list(request.candidate_electrodes) or manifest.electrode_ids()
    result = run_sweep(
        trials, candidates, list(request.gestures), request.scheme,
        ClassifierSpec(request.classifier), request.sparsity,
        e_max=request.max_electrodes, seed=request.seed,
        workers=workers, progress=progress, should_stop=should_stop,
    )
    chosen = list(result.chosen.electrodes)
    wanted = set(request.gestures)
    features = build_feature_matrix(
        [t for t in trials if t.gesture_id in wanted], chosen
    )
    spec = ClassifierSpec(request.classifier,
                          seed=derive_seed(request.seed, "final-model"))
    model = train(spec, features)
    model_id = store.put(model_to_json(model))
    return result, model_id


def create_app(config: ServiceConfig | None = None,
               registry: dict[str, DatasetManifest] | None = None) -> FastAPI:
    config = config or ServiceConfig.from_env()
    if registry is None:
        registry = load_registry(config.data_dir)
    model_dir = config.model_dir or (
        (config.data_dir or Path(".")) / ".models"
    )
    store = ModelStore(model_dir, config.model_ttl_hours)
    executor = ThreadPoolExecutor(max_workers=max(1, config.workers))

    app = FastAPI(title="sparseemg")
    app.state.registry = registry
    app.state.store = store
    app.state.executor = executor
    app.state.config = config

    @app.get("/datasets")
    def list_datasets():
        return {"datasets": [_manifest_summary(m) for m in registry.values()]}

    @app.get("/datasets/{name}/map.svg")
    def electrode_map(name: str):
        if name not in registry:
            return _error_response(ValidationError("dataset", f"unknown dataset {name!r}"), 404)
        return Response(generate_electrode_map(registry[name]),
                        media_type="image/svg+xml")

    @app.post("/stencil")
    async def stencil(payload: dict):
        try:
            name = _require(payload, "dataset", str)
            if name not in registry:
                raise ValidationError("dataset", f"unknown dataset {name!r}")
            layout = _int_list(payload, "layout", required=True)
            raw = _require(payload, "measurements", dict)
            samples = raw.get("circumference_samples", [])
            if not isinstance(samples, list):
                raise ValidationError("measurements.circumference_samples",
                                      "must be a list of [distance, circumference] pairs")
            measurements = ArmMeasurements(
                forearm_length_mm=float(raw.get("forearm_length_mm", 0.0)),
                circumference_samples=tuple(tuple(map(float, s)) for s in samples),
            )
            svg = generate_stencil(layout, registry[name], measurements)
        except ValidationError as err:
            return _error_response(err)
        except (TypeError, ValueError):
            return _error_response(ValidationError("measurements", "malformed measurements"))
        return Response(svg, media_type="image/svg+xml")

    @app.get("/models/{artifact_id}")
    def download_model(artifact_id: str):
        payload = store.get(artifact_id)
        if payload is None:
            return _error_response(
                ValidationError("id", f"unknown or expired model {artifact_id!r}"), 404)
        return Response(payload, media_type="application/json")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        send_lock = asyncio.Lock()
        job: asyncio.Task | None = None
        cancel_event = threading.Event()

        async def send(message: dict):
            async with send_lock:
                await ws.send_json(message)

        async def run_job(request: SweepRequest):
            loop = asyncio.get_running_loop()
            queue: asyncio.Queue = asyncio.Queue()

            def on_progress(electrode_count: int, accuracy: float):
                loop.call_soon_threadsafe(
                    queue.put_nowait,
                    _event("progress", electrode_count=electrode_count,
                           accuracy=accuracy),
                )

            def worker():
                try:
                    result, model_id = execute_sweep(
                        request, registry[request.dataset], store,
                        workers=config.workers, progress=on_progress,
                        should_stop=cancel_event.is_set,
                    )
                    return _event("result", result=result.to_dict(),
                                  model_id=model_id)
                except SweepCancelled:
                    return _event("cancelled")
                except ValidationError as err:
                    return _event("error", field=err.field, message=err.message)
                except Exception as err:  # surfaced, never a dropped stream
                    return _event("error", field="internal", message=str(err))

            future = loop.run_in_executor(executor, worker)
            try:
                while True:
                    if future.done() and queue.empty():
                        break
                    try:
                        message = await asyncio.wait_for(queue.get(), timeout=0.05)
                    except asyncio.TimeoutError:
                        continue
                    await send(message)
                await send(future.result())
            except asyncio.CancelledError:
                cancel_event.set()
                raise

        try:
            while True:
                data = await ws.receive_json()
                kind = data.get("type") if isinstance(data, dict) else None
                if kind == "sweep":
                    if job is not None and not job.done():
                        await send(_event(
                            "error", field="request",
                            message="busy: a sweep is already running on this connection",
                        ))
                        continue
                    try:
                        request = parse_sweep_request(data, registry)
                    except ValidationError as err:
                        await send(_event("error", field=err.field, message=err.message))
                        continue
                    cancel_event = threading.Event()
                    job = asyncio.create_task(run_job(request))
                elif kind == "cancel":
                    cancel_event.set()
                else:
                    await send(_event("error", field="type",
                                      message=f"unknown message type {kind!r}"))
        except WebSocketDisconnect:
            cancel_event.set()
            if job is not None and not job.done():
                job.cancel()

    return app


def main() -> None:
    import uvicorn

    config = ServiceConfig.from_env()
    uvicorn.run(create_app(config), host="127.0.0.1", port=config.port)


if __name__ == "__main__":
    main()
