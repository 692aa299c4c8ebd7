"""FastAPI service exposing the experiment harness.

Endpoints run synchronously and return full result payloads; desk-scale runs
take seconds to minutes, so clients should use generous timeouts. The CLI in
``symrc.cli`` is a thin client of this app.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, harness, tasks
from ..errors import SymrcError
from . import schemas

app = FastAPI(
    title="symrc service",
    description="Reservoir-computing benchmarks: parity classification and "
    "Lorenz '63 inference with symmetry-matching transforms.",
    version=__version__,
)


@app.exception_handler(SymrcError)
async def _symrc_error_handler(request: Request, exc: SymrcError):
    return JSONResponse(
        status_code=400,
        content={"detail": f"{type(exc).__name__}: {exc}"},
    )


def _no_nan(value):
    """JSON has no NaN; failed metrics travel as null."""
    return None if (isinstance(value, float) and math.isnan(value)) else value


def _wire_record(record) -> schemas.RecordModel:
    d = record.to_dict()
    d["metric_value"] = _no_nan(d["metric_value"])
    return schemas.RecordModel(**d)


def _experiment_response(records) -> schemas.ExperimentResponse:
    finite = [r.metric_value for r in records if math.isfinite(r.metric_value)]
    return schemas.ExperimentResponse(
        records=[_wire_record(r) for r in records],
        metric_name=records[0].metric_name if records else "",
        best_metric=min(finite) if finite else None,
        mean_metric=float(np.mean(finite)) if finite else None,
    )


def _data_spec(kind: str, length: int) -> harness.DataSpec:
    return harness.DataSpec(kind=kind, length=length if kind == "random" else 0)


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/experiments/parity-serial", response_model=schemas.ExperimentResponse)
def parity_serial(req: schemas.ParityRequest) -> schemas.ExperimentResponse:
    return _run_parity(req, "serial")


@app.post("/experiments/parity-parallel", response_model=schemas.ExperimentResponse)
def parity_parallel(req: schemas.ParityRequest) -> schemas.ExperimentResponse:
    return _run_parity(req, "parallel")


def _run_parity(req: schemas.ParityRequest, scheme: str) -> schemas.ExperimentResponse:
    spec = harness.ParityExperimentSpec(
        scheme=scheme,
        n=req.n,
        n_nodes=req.n_nodes,
        instances=req.instances,
        budget=req.budget,
        seed=req.seed,
        eta_r=req.eta_r,
        eta_f=req.eta_f,
        bias=req.bias,
        alpha=req.alpha,
        train=_data_spec(req.train, req.train_length),
        test=_data_spec(req.test, req.test_length),
        require_coverage=req.require_coverage,
        optimize=req.optimize,
        hyperparams=req.hyperparams.searched_values() if req.hyperparams else None,
        stop_at_zero=req.stop_at_zero,
    )
    records = harness.run_experiment(spec, workers=req.workers)
    return _experiment_response(records)


@app.post("/experiments/inference", response_model=schemas.ExperimentResponse)
def inference(req: schemas.InferenceRequest) -> schemas.ExperimentResponse:
    hp = None
    if req.hyperparams is not None:
        hp = {
            k: v
            for k, v in req.hyperparams.searched_values().items()
            if k not in ("t0", "delta_t")
        }
    spec = harness.InferenceExperimentSpec(
        duration=req.duration,
        n_nodes=req.n_nodes,
        instances=req.instances,
        budget=req.budget,
        seed=req.seed,
        eta_r=req.eta_r,
        eta_f=req.eta_f,
        bias=req.bias,
        alpha=req.alpha,
        square_input=req.square_input,
        washout=req.washout,
        sample_dt=req.sample_dt,
        optimize=req.optimize,
        hyperparams=hp,
    )
    records = harness.run_experiment(spec, workers=req.workers)
    return _experiment_response(records)


@app.post("/sweeps/parity", response_model=schemas.SweepResponse)
def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
    spec = harness.SweepSpec(
        scheme=req.scheme,
        n_values=tuple(req.n_values),
        n_nodes_values=tuple(req.n_nodes_values),
        instances=req.instances,
        budget=req.budget,
        seed=req.seed,
        eta_r=req.eta_r,
        eta_f=req.eta_f,
        bias=req.bias,
        alpha=req.alpha,
        train=_data_spec(req.train, req.train_length),
        test=_data_spec(req.test, req.test_length),
        require_coverage=req.require_coverage,
        stop_on_all_zero=req.stop_on_all_zero,
    )
    result = harness.run_sweep(spec, workers=req.workers)
    rows = [
        schemas.SweepRowModel(**{k: _no_nan(v) for k, v in row.items()})
        for row in result.table_rows()
    ]
    return schemas.SweepResponse(
        rows=rows,
        records=[_wire_record(r) for r in result.records],
        smallest_any_zero=result.smallest_any_zero(),
        smallest_all_zero=result.smallest_all_zero(),
    )


@app.post("/analysis/fit-scaling", response_model=schemas.FitScalingResponse)
def fit_scaling(req: schemas.FitScalingRequest) -> schemas.FitScalingResponse:
    fit = harness.fit_scaling(req.points, req.model)
    return schemas.FitScalingResponse(
        model=fit.model,
        slope=fit.slope,
        intercept=fit.intercept,
        r_squared=fit.r_squared,
    )


@app.post("/tasks/check-coverage", response_model=schemas.CoverageResponse)
def check_coverage(req: schemas.CoverageRequest) -> schemas.CoverageResponse:
    if req.bits is not None:
        series = tasks.BitSeries(bits=np.asarray(req.bits))
    else:
        series = tasks.random_bits(req.length, req.seed)
    ok, counts = tasks.coverage_check(series, req.n)
    return schemas.CoverageResponse(
        n=req.n,
        ok=ok,
        n_patterns=len(counts),
        n_missing=int(np.sum(counts == 0)),
        min_count=int(counts.min()),
        counts=counts.tolist() if req.n <= 12 else None,
    )
