"""Request/response models for the scenario service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    scenario: str
    h: str = "const"
    zeta: str = "const"
    n: int = 48
    dt: float = 0.02
    T: float = 1.0
    lambdas: list[float] = Field(default=[0.5, 1.0, 2.0], alias="lambda")
    epsilon: float = 0.01
    out: str = "runs"
    seed: int = 0
    threads: int = 1
    a_axis: float = 2.0
    b_axis: float = 1.0
    omega0: float = 1.0
    radius: float = 1.0

    model_config = {"populate_by_name": True}


class ConvergenceRequest(RunRequest):
    levels: int = 3


class RunResponse(BaseModel):
    status: str
    summary: list[str]
    constants: dict
    artifacts: list[str]
    manifest: str


class AuditRequest(BaseModel):
    bound: str
    samples: int = 64
    rmax: float = 100.0


class DiagnosticOut(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class AuditResponse(BaseModel):
    bound: str
    tier: str
    diagnostics: list[DiagnosticOut]


class ErrorBody(BaseModel):
    kind: str
    exit_code: int
    detail: str
