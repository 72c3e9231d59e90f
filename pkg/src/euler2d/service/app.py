"""HTTP facade over the scenario runner.

The service executes scenarios synchronously (runs are desk scale) and
writes artifacts on the host it runs on; remote clients therefore need a
shared filesystem to pick up the CSV/JSON outputs, while the default
in-process client sees them directly.

Error mapping: invalid config -> 400, hypothesis violation -> 409,
numerical blow-up -> 422.  The body always carries the CLI exit code.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__, growth
from ..errors import BadArgument, BlowUp, HypothesisViolation, InvalidConfig
from ..runner import config_from_mapping, run_config, run_convergence
from .schemas import (
    AuditRequest,
    AuditResponse,
    ConvergenceRequest,
    DiagnosticOut,
    ErrorBody,
    RunRequest,
    RunResponse,
)

BUILTIN_BOUNDS = ["const", "power:<alpha>", "quarterlog", "linear"]


def _error(status: int, kind: str, exit_code: int, detail: str) -> JSONResponse:
    body = ErrorBody(kind=kind, exit_code=exit_code, detail=detail)
    return JSONResponse(status_code=status, content=body.model_dump())


def create_app() -> FastAPI:
    app = FastAPI(title="euler2d scenario service", version=__version__)

    @app.exception_handler(InvalidConfig)
    async def _invalid_config(request, exc):
        return _error(400, "invalid_config", 2, str(exc))

    @app.exception_handler(BadArgument)
    async def _bad_argument(request, exc):
        return _error(400, "invalid_config", 2, str(exc))

    @app.exception_handler(HypothesisViolation)
    async def _hypothesis(request, exc):
        return _error(409, "hypothesis_violation", 3, str(exc))

    @app.exception_handler(BlowUp)
    async def _blowup(request, exc):
        return _error(422, "blow_up", 4, f"{exc} (t={exc.time})")

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/bounds")
    def bounds():
        return {"bounds": BUILTIN_BOUNDS}

    @app.post("/bounds/audit", response_model=AuditResponse)
    def audit(req: AuditRequest):
        bound = growth.builtin_bound(req.bound)
        report = growth.validate_tier(bound, samples=req.samples, rmax=req.rmax)
        return AuditResponse(
            bound=bound.label,
            tier=report.tier.name,
            diagnostics=[
                DiagnosticOut(name=d.name, passed=d.passed, detail=d.detail)
                for d in report.diagnostics
            ],
        )

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest):
        cfg = config_from_mapping(req.model_dump())
        result = run_config(cfg)
        return RunResponse(
            status="ok",
            summary=result.summary,
            constants=_jsonable(result.constants),
            artifacts=result.artifacts,
            manifest=result.manifest_path,
        )

    @app.post("/convergence", response_model=RunResponse)
    def convergence(req: ConvergenceRequest):
        payload = req.model_dump()
        levels = payload.pop("levels")
        cfg = config_from_mapping(payload)
        result = run_convergence(cfg, levels=levels)
        return RunResponse(
            status="ok",
            summary=result.summary,
            constants=_jsonable(result.constants),
            artifacts=result.artifacts,
            manifest=result.manifest_path,
        )

    return app


def _jsonable(value):
    """Coerce numpy scalars/arrays hiding inside constants dicts."""
    import numpy as np

    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


app = create_app()
