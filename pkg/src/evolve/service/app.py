"""HTTP front end: start runs in the background, poll them, emit testbenches."""

from __future__ import annotations

import json
import logging
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException

from ..evaluator import ConfigError
from ..orchestrator import RunConfig
from ..stg import StgError, generate_testbench
from .schemas import PortInfo, RunRequest, RunStatus, StgRequest, StgResponse

log = logging.getLogger(__name__)

CONFIG_FIELDS = ("problem", "strategy", "max_nodes", "seed", "backend", "llm", "directive", "k", "m",
                 "expansion_rate", "c", "binary_feedback", "summaries", "landscape", "width")


def config_from_request(req: RunRequest) -> RunConfig:
    values = {f: getattr(req, f) for f in CONFIG_FIELDS}
    return RunConfig(clock_sweep=tuple(req.clock_sweep), **values)


def llm_config_from_request(req: RunRequest):
    from ..llm import LlmConfig

    overrides = {f: getattr(req, f) for f in ("endpoint", "model_name", "api_key_env", "temperature", "max_tokens")
                 if getattr(req, f) is not None}
    return LlmConfig(**overrides)


def create_app(runs_root: Optional[Path] = None, workers: int = 2) -> FastAPI:
    from ..orchestrator import run_from_config

    root = Path(runs_root or "runs").resolve()
    app = FastAPI(title="evolve", version="0.1.0")
    pool = ThreadPoolExecutor(max_workers=workers)
    runs: dict[str, RunStatus] = {}
    lock = threading.Lock()

    def _update(run_id: str, **changes):
        with lock:
            runs[run_id] = runs[run_id].model_copy(update=changes)

    def _work(run_id: str, req: RunRequest, config: RunConfig, out: Path):
        _update(run_id, status="running")
        try:
            code = run_from_config(config, out, resume=req.resume, llm_config=llm_config_from_request(req),
                                   fixtures=req.fixtures, lenient=req.lenient)
            _update(run_id, status="done", exit_code=code)
        except Exception as exc:  # surface anything unexpected to the poller
            log.exception("run %s crashed", run_id)
            _update(run_id, status="error", exit_code=4, error=f"{type(exc).__name__}: {exc}")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/runs", response_model=RunStatus, status_code=202)
    def start_run(req: RunRequest):
        try:
            config = config_from_request(req)
        except (ConfigError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        run_id = uuid.uuid4().hex[:12]
        out = Path(req.out_dir) if req.out_dir else root / run_id
        status = RunStatus(id=run_id, status="queued", out_dir=str(out))
        with lock:
            runs[run_id] = status
        pool.submit(_work, run_id, req, config, out)
        return status

    @app.get("/runs", response_model=list[RunStatus])
    def list_runs():
        with lock:
            return list(runs.values())

    @app.get("/runs/{run_id}", response_model=RunStatus)
    def get_run(run_id: str):
        with lock:
            if run_id not in runs:
                raise HTTPException(status_code=404, detail=f"no run {run_id}")
            return runs[run_id]

    @app.get("/runs/{run_id}/report")
    def get_report(run_id: str):
        status = get_run(run_id)
        out = Path(status.out_dir)
        path = out / "sweep.json" if (out / "sweep.json").exists() else out / "summary.json"
        if not path.exists():
            raise HTTPException(status_code=409, detail="no report yet")
        return json.loads(path.read_text())

    @app.post("/stg", response_model=StgResponse)
    def stg(req: StgRequest):
        try:
            bundle = generate_testbench(req.golden, req.top_module, req.clock_period_ns, seed=req.seed,
                                        dut_source=req.dut, random_vectors=req.random_vectors)
        except (StgError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        ports = [PortInfo(name=p.name, direction=p.direction.value, width=p.width, category=p.category.value)
                 for p in bundle.ports]
        return StgResponse(testbench=bundle.source, total_vectors=bundle.total_vectors, ports=ports)

    app.state.runs = runs
    app.state.pool = pool
    return app
