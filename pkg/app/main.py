import asyncio
import json
import math
import uuid
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from typing import Any, Dict, Set

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from prometheus_client import CONTENT_TYPE_LATEST, generate_latest

from app.config import config
from app.experiments.lab import lab
from app.models.schemas import SweepSpec
from app.services.sweep import run_sweep
from app.utils.errors import LabError, RejectedInputError
from app.utils.logger import logger, log_api_call

# Global state
active_requests: Dict[str, dict] = {}
active_tasks: Set[asyncio.Task] = set()
sweep_jobs: Dict[str, dict] = {}


def _jsonable(value: Any) -> Any:
    """Non-finite floats become the strings 'inf', '-inf' and 'nan'."""
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


class LabJSONResponse(JSONResponse):
    def render(self, content: Any) -> bytes:
        return json.dumps(_jsonable(content), ensure_ascii=False, allow_nan=False).encode("utf-8")


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Handle startup and shutdown events."""
    logger.info("Starting up Fujita lab API...")
    config.validate()
    yield
    logger.info("Shutting down Fujita lab API...")
    # Cancel all active tasks
    for task in list(active_tasks):
        if not task.done():
            task.cancel()
            try:
                await task
            except asyncio.CancelledError:
                pass
    active_tasks.clear()
    active_requests.clear()
    sweep_jobs.clear()


app = FastAPI(title="Fujita Lab API", lifespan=lifespan, default_response_class=LabJSONResponse)

# Configure CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)



def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def _track(coro) -> asyncio.Task:
    task = asyncio.create_task(coro)
    active_tasks.add(task)
    task.add_done_callback(active_tasks.discard)
    return task


async def cleanup_request(store: Dict[str, dict], request_id: str):
    """Forget a finished request after a delay."""
    try:
        await asyncio.sleep(config.REQUEST_CLEANUP_DELAY)
        store.pop(request_id, None)
    except asyncio.CancelledError:
        pass
    except Exception as e:
        logger.error(f"Error cleaning up request {request_id}: {str(e)}")


@app.exception_handler(RejectedInputError)
async def rejected_input_handler(request: Request, exc: RejectedInputError):
    log_api_call(request.url.path, request.method, 422)
    return LabJSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(LabError)
async def lab_error_handler(request: Request, exc: LabError):
    logger.error(f"Lab error on {request.url.path}: {str(exc)}", exc_info=True)
    log_api_call(request.url.path, request.method, 500)
    return LabJSONResponse(status_code=500, content={"detail": str(exc)})


@app.get("/api/experiments")
async def list_experiments():
    return {"experiments": lab.catalogue()}


@app.post("/api/experiments/{name}")
async def run_experiment(name: str, payload: Dict[str, Any]):
    """Run one experiment on a worker thread, bounded by API_TIMEOUT."""
    if name == "sweep":
        raise HTTPException(status_code=400, detail="sweeps run as jobs: POST /api/sweeps")
    if name not in lab.experiments:
        raise HTTPException(status_code=404, detail=f"unknown experiment {name}")
    local = [field for field in lab.experiments[name].local_fields if payload.get(field) is not None]
    if local:
        raise HTTPException(status_code=400, detail=f"fields {local} write local files; use the command line")
    request_id = str(uuid.uuid4())
    active_requests[request_id] = {"start_time": _utcnow(), "status": "processing", "experiment": name}

    try:
        document = await lab.run_async(name, payload, timeout=config.API_TIMEOUT)
        active_requests[request_id]["status"] = "completed"
        log_api_call(f"/api/experiments/{name}", "POST", 200)
        return document
    except asyncio.TimeoutError:
        active_requests[request_id]["status"] = "timeout"
        logger.error(f"Experiment {name} timed out after {config.API_TIMEOUT}s")
        raise HTTPException(status_code=504, detail=f"experiment {name} exceeded {config.API_TIMEOUT}s")
    except LabError:
        active_requests[request_id]["status"] = "error"
        raise
    finally:
        _track(cleanup_request(active_requests, request_id))


async def _run_sweep_job(job_id: str, spec: SweepSpec):
    job = sweep_jobs[job_id]
    try:
        diagram = await asyncio.to_thread(run_sweep, spec)
        job["status"] = "completed"
        job["diagram"] = diagram.model_dump(mode="json")
        job["errored"] = diagram.errored
    except Exception as e:
        logger.error(f"Sweep job {job_id} failed: {str(e)}", exc_info=True)
        job["status"] = "error"
        job["error"] = str(e)
    finally:
        job["finished"] = _utcnow()
        _track(cleanup_request(sweep_jobs, job_id))


@app.post("/api/sweeps", status_code=202)
async def submit_sweep(spec: SweepSpec):
    job_id = str(uuid.uuid4())
    sweep_jobs[job_id] = {"job_id": job_id, "status": "running", "submitted": _utcnow()}
    _track(_run_sweep_job(job_id, spec))
    log_api_call("/api/sweeps", "POST", 202)
    return {"job_id": job_id, "status": "running"}


@app.get("/api/sweeps/{job_id}")
async def sweep_status(job_id: str):
    job = sweep_jobs.get(job_id)
    if job is None:
        raise HTTPException(status_code=404, detail=f"unknown sweep job {job_id}")
    return job


@app.get("/api/metrics")
async def metrics():
    return Response(content=generate_latest(), media_type=CONTENT_TYPE_LATEST)


@app.get("/api/health")
async def health_check():
    """Health check endpoint with request status."""
    try:
        active_count = len([r for r in active_requests.values() if r["status"] == "processing"])
        timeout_count = len([r for r in active_requests.values() if r["status"] == "timeout"])
        error_count = len([r for r in active_requests.values() if r["status"] == "error"])
        running_sweeps = len([j for j in sweep_jobs.values() if j["status"] == "running"])
        return {
            "status": "healthy",
            "environment": config.ENVIRONMENT,
            "timestamp": _utcnow(),
            "active_requests": active_count,
            "running_sweeps": running_sweeps,
            "recent_timeouts": timeout_count,
            "recent_errors": error_count,
        }
    except Exception as e:
        logger.error(f"Health check failed: {str(e)}")
        return LabJSONResponse(
            status_code=503,
            content={"status": "unhealthy", "error": str(e), "timestamp": _utcnow()},
        )


@app.middleware("http")
async def add_process_time_header(request: Request, call_next):
    """Add processing time header to responses."""
    start_time = datetime.now(timezone.utc)
    response = await call_next(request)
    process_time = (datetime.now(timezone.utc) - start_time).total_seconds()
    response.headers["X-Process-Time"] = str(process_time)
    return response
