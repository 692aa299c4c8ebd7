"""Pydantic request/response models for the experiment service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


class HyperParamsModel(BaseModel):
    gamma: float = Field(gt=0)
    rho_r: float = Field(gt=0)
    rho_in: float = Field(gt=0)
    sigma: float = Field(ge=0, le=1)
    t0: float = Field(default=0.0, ge=0)
    delta_t: float = Field(default=0.0, ge=0)

    def searched_values(self) -> dict:
        return self.model_dump()


class ParityRequest(BaseModel):
    n: int = Field(ge=1)
    n_nodes: int = Field(ge=1)
    instances: int = Field(default=10, ge=1)
    budget: int = Field(default=60, ge=1)
    seed: int = 0
    eta_r: Optional[float] = Field(default=None, ge=0, le=1,
                                   description="None matches the parity order")
    eta_f: float = Field(default=0.0, ge=0, le=1)
    bias: float = 0.0
    alpha: float = Field(default=1e-6, ge=0)
    train: Literal["random", "minimal", "ladder", "exhaustive"] = "random"
    train_length: int = Field(default=1000, ge=1)
    test: Literal["random", "minimal", "ladder", "exhaustive"] = "random"
    test_length: int = Field(default=1000, ge=1)
    require_coverage: bool = False
    optimize: bool = True
    hyperparams: Optional[HyperParamsModel] = None
    stop_at_zero: bool = True
    workers: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _needs_hyperparams(self):
        if not self.optimize and self.hyperparams is None:
            raise ValueError("hyperparams is required when optimize is false")
        return self


class InferenceRequest(BaseModel):
    duration: float = Field(default=100.0, gt=0)
    n_nodes: int = Field(default=100, ge=1)
    instances: int = Field(default=10, ge=1)
    budget: int = Field(default=60, ge=1)
    seed: int = 0
    eta_r: float = Field(default=0.0, ge=0, le=1)
    eta_f: float = Field(default=0.0, ge=0, le=1)
    bias: float = 0.0
    alpha: float = Field(default=1e-6, ge=0)
    square_input: bool = False
    washout: float = Field(default=1.0, ge=0)
    sample_dt: float = Field(default=0.005, gt=0)
    optimize: bool = True
    hyperparams: Optional[HyperParamsModel] = None
    workers: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _needs_hyperparams(self):
        if not self.optimize and self.hyperparams is None:
            raise ValueError("hyperparams is required when optimize is false")
        return self


class SweepRequest(BaseModel):
    scheme: Literal["serial", "parallel"]
    n_values: list[int] = Field(min_length=1)
    n_nodes_values: list[int] = Field(min_length=1)
    instances: int = Field(default=10, ge=1)
    budget: int = Field(default=60, ge=1)
    seed: int = 0
    eta_r: Optional[float] = Field(default=None, ge=0, le=1)
    eta_f: float = Field(default=0.0, ge=0, le=1)
    bias: float = 0.0
    alpha: float = Field(default=1e-6, ge=0)
    train: Literal["random", "minimal", "ladder", "exhaustive"] = "minimal"
    train_length: int = Field(default=1000, ge=1)
    test: Literal["random", "minimal", "ladder", "exhaustive"] = "exhaustive"
    test_length: int = Field(default=1000, ge=1)
    require_coverage: bool = False
    stop_on_all_zero: bool = True
    workers: Optional[int] = Field(default=None, ge=1)


class FitScalingRequest(BaseModel):
    points: list[tuple[float, float]] = Field(min_length=3,
                                              description="(n, N) pairs")
    model: Literal["linear", "exponential"] = "linear"


class CoverageRequest(BaseModel):
    n: int = Field(ge=1)
    bits: Optional[list[int]] = None
    length: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _one_source(self):
        if self.bits is None and self.length is None:
            raise ValueError("provide either bits or length (+ optional seed)")
        return self


class RecordModel(BaseModel):
    """Wire form of an experiment record; a failed metric travels as null."""

    experiment_id: str
    task: str
    n: Optional[int]
    duration: Optional[float]
    n_nodes: int
    instance_seed: int
    optimizer_seed: Optional[int]
    data: dict
    hyperparams: dict
    symmetry: dict
    metric_name: str
    metric_value: Optional[float]
    wall_time_s: float
    budget: int
    budget_used: int
    library_version: str
    error: Optional[str] = None


class ExperimentResponse(BaseModel):
    records: list[RecordModel]
    metric_name: str
    best_metric: Optional[float]
    mean_metric: Optional[float]


class SweepRowModel(BaseModel):
    n: int
    n_nodes: int
    instances: int
    mean: Optional[float]
    min: Optional[float]
    q1: Optional[float]
    q3: Optional[float]
    max: Optional[float]
    zero_fraction: float
    complete: bool


class SweepResponse(BaseModel):
    rows: list[SweepRowModel]
    records: list[RecordModel]
    smallest_any_zero: dict[int, int]
    smallest_all_zero: dict[int, int]


class FitScalingResponse(BaseModel):
    model: str
    slope: float
    intercept: float
    r_squared: float


class CoverageResponse(BaseModel):
    n: int
    ok: bool
    n_patterns: int
    n_missing: int
    min_count: int
    counts: Optional[list[int]] = None  # included for n <= 12


class HealthResponse(BaseModel):
    status: str
    version: str
