"""Request and response models shared by the HTTP service and the CLI."""
from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class SolveRequest(BaseModel):
    example: int = Field(ge=1, le=4)
    method: str = "PD-I"
    alpha: Optional[float] = Field(default=None, gt=0)
    mu: float = Field(default=0.0, ge=0)
    a: Optional[float] = None
    b: Optional[float] = None
    k_s: Optional[float] = None
    k_a: Optional[float] = None
    nu: float = Field(default=1.0, gt=0)
    n_cells: Optional[int] = Field(default=None, ge=2)
    n_time_steps: Optional[int] = Field(default=None, ge=1)
    tol: float = Field(default=1e-5, gt=0)
    max_iter: int = Field(default=1000, ge=1)
    seed: int = 0
    r: Optional[float] = Field(default=None, gt=0)
    s: Optional[float] = Field(default=None, gt=0)
    model: Optional[str] = Field(default=None, description="path to a saved model file")
    backend: str = "auto"
    gate: bool = True
    input_scaling: str = "norm"
    log_every: int = Field(default=0, ge=0)
    include_fields: bool = False


class LogRowModel(BaseModel):
    k: int
    stop_measure: float
    objective: float
    energy: Optional[float] = None
    kkt: Optional[float] = None


class SolveResponse(BaseModel):
    example: int
    method: str
    rule: str
    r: float
    s: float
    mesh_h: float
    mesh_tau: Optional[float] = None
    converged: bool
    iterations: int
    pde_solves: int
    objective: float
    err_u_abs: Optional[float] = None
    err_u_rel: Optional[float] = None
    err_y_abs: Optional[float] = None
    err_y_rel: Optional[float] = None
    noz: Optional[float] = None
    norm_estimate: Optional[float] = None
    step_warning: bool = False
    wall_time_s: float
    log: list[LogRowModel] = []
    u: Optional[list[float]] = None
    y: Optional[list[float]] = None


class BenchRequest(BaseModel):
    config: str = Field(description="config file contents")
    base_dir: Optional[str] = Field(default=None, description="directory for relative model paths")
    log_every: int = Field(default=0, ge=0)


class BenchResponse(BaseModel):
    csv: str
    summary: dict[str, Any]
    exit_code: int


class TrainRequest(BaseModel):
    nu: float = Field(default=1.0, gt=0)
    c: float = Field(default=1.0, ge=0)
    n_cells: int = Field(default=64, ge=2)
    n_samples: int = Field(default=1000, ge=1)
    iterations: int = Field(default=20000, ge=0)
    lr: float = Field(default=1e-3, gt=0)
    seed: int = 0
    hidden: list[int] = [20, 20]
    n_basis: int = Field(default=20, ge=1)
    out: Optional[str] = Field(default=None, description="where to save the model file")
    log_every: int = Field(default=1000, ge=0)


class TrainResponse(BaseModel):
    final_loss: Optional[float]
    loss_curve: list[float]
    loss_every: int
    train_time_s: float
    saved_to: Optional[str] = None
    model: dict[str, Any]


class EvalRequest(BaseModel):
    model: Optional[str] = Field(default=None, description="path to a saved model file")
    model_doc: Optional[dict[str, Any]] = None
    nu: Optional[float] = Field(default=None, gt=0, description="defaults to the model's own")
    c: Optional[float] = Field(default=None, ge=0)
    n_draws: int = Field(default=100, ge=1)
    seed: int = 2024
    threshold: float = Field(default=5e-2, gt=0)
    input_scaling: str = "norm"


class EvalResponse(BaseModel):
    mean_rel_error: float
    max_rel_error: float
    n_draws: int
    threshold: float
    passed: bool
    nu: float
    c: float
