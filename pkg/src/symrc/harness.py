"""Experiment orchestration: configs, seeding, parallel sweeps, persistence.

A master seed deterministically derives per-instance seeds, so any experiment
or sweep is reproducible from one integer, and every emitted record carries
enough to re-run its pipeline to a bit-identical metric (``rerun_record``).

Records are written as JSON lines; aggregate tables as tab-separated text
with a header row. Config files are INI-style key/value sections (see
``load_config``).
"""

from __future__ import annotations

import configparser
import json
import math
import multiprocessing
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__, hyperopt, pipelines, tasks
from .errors import ConfigurationError, ParameterError, SymrcError
from .hyperopt import SearchSpace
from .pipelines import (
    InferencePipelineConfig,
    ParityPipelineConfig,
    run_inference,
    run_parity_parallel,
    run_parity_serial,
)
from .reservoir import HyperParams
from .tasks import BitSeries

WORKERS_ENV_VAR = "SYMRC_WORKERS"
_COVERAGE_RETRIES = 100

_HP_BASE = dict(gamma=1.0, rho_r=1.0, rho_in=0.5, sigma=0.5, k=1)


# ---------------------------------------------------------------------------
# specs


@dataclass(frozen=True)
class DataSpec:
    """How to build one bit series: random draw or a deterministic pattern."""

    kind: str  # random | minimal | ladder | exhaustive
    length: int = 0  # random only
    seed: Optional[int] = None  # random only; filled by the harness

    def __post_init__(self):
        if self.kind not in ("random", "minimal", "ladder", "exhaustive"):
            raise ConfigurationError(f"unknown data kind {self.kind!r}")
        if self.kind == "random" and self.length < 1:
            raise ConfigurationError("random data needs a positive length")

    def build(self, n: int) -> BitSeries:
        if self.kind == "random":
            return tasks.random_bits(self.length, self.seed)
        if self.kind == "minimal":
            return tasks.minimal_training_bits(n)
        if self.kind == "ladder":
            return tasks.class_ladder_bits(n)
        return tasks.exhaustive_test_bits(n)


@dataclass
class ParityExperimentSpec:
    scheme: str  # serial | parallel
    n: int
    n_nodes: int
    instances: int = 10
    budget: int = hyperopt.DEFAULT_BUDGET
    seed: int = 0
    eta_r: Optional[float] = None  # None matches the parity order: 1 even, 0 odd
    eta_f: float = 0.0
    bias: float = 0.0
    alpha: float = 1e-6
    train: DataSpec = field(default_factory=lambda: DataSpec("random", 1000))
    test: DataSpec = field(default_factory=lambda: DataSpec("random", 1000))
    require_coverage: bool = False
    optimize: bool = True
    hyperparams: Optional[dict] = None  # required when optimize is False
    stop_at_zero: bool = True

    def __post_init__(self):
        if self.scheme not in ("serial", "parallel"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.instances < 1:
            raise ConfigurationError("instances must be >= 1")
        if not self.optimize and not self.hyperparams:
            raise ConfigurationError(
                "hyperparams must be given when optimize is false"
            )

    @property
    def task(self) -> str:
        return f"parity-{self.scheme}"

    @property
    def effective_eta_r(self) -> float:
        if self.eta_r is not None:
            return self.eta_r
        return 1.0 if self.n % 2 == 0 else 0.0


@dataclass
class InferenceExperimentSpec:
    duration: float = 100.0
    n_nodes: int = 100
    instances: int = 10
    budget: int = hyperopt.DEFAULT_BUDGET
    seed: int = 0
    eta_r: float = 0.0
    eta_f: float = 0.0
    bias: float = 0.0
    alpha: float = 1e-6
    square_input: bool = False
    washout: float = pipelines.DEFAULT_WASHOUT
    sample_dt: float = 0.005
    optimize: bool = True
    hyperparams: Optional[dict] = None

    def __post_init__(self):
        if self.instances < 1:
            raise ConfigurationError("instances must be >= 1")
        if not self.optimize and not self.hyperparams:
            raise ConfigurationError(
                "hyperparams must be given when optimize is false"
            )

    task = "inference"


@dataclass
class SweepSpec:
    """Grid over (n, N) with per-cell optimization and a stop rule along N."""

    scheme: str
    n_values: Sequence[int]
    n_nodes_values: Sequence[int]
    instances: int = 10
    budget: int = hyperopt.DEFAULT_BUDGET
    seed: int = 0
    eta_r: Optional[float] = None  # None: match the parity order per n
    eta_f: float = 0.0
    bias: float = 0.0
    alpha: float = 1e-6
    train: DataSpec = field(default_factory=lambda: DataSpec("minimal"))
    test: DataSpec = field(default_factory=lambda: DataSpec("exhaustive"))
    require_coverage: bool = False
    stop_on_all_zero: bool = True

    def __post_init__(self):
        if not self.n_values or not self.n_nodes_values:
            raise ConfigurationError("sweep grids must be nonempty")
        if self.instances < 1:
            raise ConfigurationError("instances must be >= 1")


# ---------------------------------------------------------------------------
# records


@dataclass
class ExperimentRecord:
    """Self-sufficient description of one completed pipeline run."""

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
    metric_value: float
    wall_time_s: float
    budget: int
    budget_used: int
    library_version: str
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentRecord":
        d = dict(d)
        if d.get("metric_value") is None:  # service wire form for NaN
            d["metric_value"] = math.nan
        return cls(**d)


def write_records(records: Sequence[ExperimentRecord], path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict()) + "\n")


def read_records(path: Union[str, Path]) -> list[ExperimentRecord]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(ExperimentRecord.from_dict(json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# seeding and workers


def resolve_workers(requested: Optional[int] = None) -> int:
    """Worker count; the SYMRC_WORKERS environment variable overrides."""
    env = os.environ.get(WORKERS_ENV_VAR)
    if env is not None:
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigurationError(
                f"{WORKERS_ENV_VAR} must be an integer, got {env!r}"
            ) from exc
        if value < 1:
            raise ConfigurationError(f"{WORKERS_ENV_VAR} must be >= 1")
        return value
    if requested is not None:
        if requested < 1:
            raise ConfigurationError("workers must be >= 1")
        return requested
    return os.cpu_count() or 1


def derive_instance_seeds(master_seed: int, count: int) -> list[tuple[int, int]]:
    """Per-instance (reservoir seed, optimizer seed) pairs from a master seed."""
    children = np.random.SeedSequence(master_seed).spawn(count)
    return [tuple(int(v) for v in c.generate_state(2)) for c in children]


def _derived_seed(master_seed: int, *salt: int) -> int:
    return int(np.random.SeedSequence((master_seed, *salt)).generate_state(1)[0])


def _covered_random_spec(
    length: int, n: int, master_seed: int, role_salt: int
) -> DataSpec:
    """A random DataSpec whose series covers all 2^n patterns (retries seeds)."""
    for attempt in range(_COVERAGE_RETRIES):
        seed = _derived_seed(master_seed, role_salt, attempt)
        series = tasks.random_bits(length, seed)
        ok, _ = tasks.coverage_check(series, n)
        if ok:
            return DataSpec("random", length, seed)
    raise ConfigurationError(
        f"no {length}-bit series covering all 2^{n} patterns in "
        f"{_COVERAGE_RETRIES} seeded attempts; increase the length"
    )


def _resolve_data_specs(spec: ParityExperimentSpec) -> tuple[DataSpec, DataSpec]:
    out = []
    for role_salt, ds in ((1, spec.train), (2, spec.test)):
        if ds.kind == "random":
            if spec.require_coverage:
                ds = _covered_random_spec(ds.length, spec.n, spec.seed, role_salt)
            elif ds.seed is None:
                ds = replace(ds, seed=_derived_seed(spec.seed, role_salt, 0))
        out.append(ds)
    return tuple(out)


# ---------------------------------------------------------------------------
# single-instance jobs (top-level functions so they pickle cleanly)


def _base_hyperparams(fixed: dict) -> HyperParams:
    return HyperParams(**_HP_BASE).with_updates(
        eta_r=fixed["eta_r"],
        eta_f=fixed["eta_f"],
        bias=fixed["bias"],
        alpha=fixed["alpha"],
    )


def _build_job_data(job: dict) -> tuple:
    """Materialize the datasets for a job once; hyperparameters reuse them."""
    if job["task"] == "inference":
        d = job["data"]
        return (
            tasks.make_inference_dataset(
                d["duration"], d["sample_dt"], d["square_input"], d["train_seed"]
            ),
            tasks.make_inference_dataset(
                d["duration"], d["sample_dt"], d["square_input"], d["test_seed"]
            ),
        )
    return (
        DataSpec(**job["data"]["train"]).build(job["n"]),
        DataSpec(**job["data"]["test"]).build(job["n"]),
    )


def _parity_config(job: dict, hp: HyperParams, data: tuple) -> ParityPipelineConfig:
    factory = (
        ParityPipelineConfig.serial
        if job["task"] == "parity-serial"
        else ParityPipelineConfig.parallel
    )
    return factory(
        n=job["n"],
        n_nodes=job["n_nodes"],
        params=hp,
        train_bits=data[0],
        test_bits=data[1],
        seed=job["instance_seed"],
    )


def _inference_config(
    job: dict, hp: HyperParams, data: tuple
) -> InferencePipelineConfig:
    d = job["data"]
    return InferencePipelineConfig.standard(
        n_nodes=job["n_nodes"],
        params=hp,
        train=data[0],
        test=data[1],
        seed=job["instance_seed"],
        square_input=d["square_input"],
        washout=d["washout"],
    )


def _evaluate_parity(job: dict, hp: HyperParams, data: tuple):
    config = _parity_config(job, hp, data)
    if job["task"] == "parity-parallel":
        return run_parity_parallel(config)
    return run_parity_serial(config)


def run_instance(job: dict) -> dict:
    """Run one instance (optionally optimizing hyperparameters); never raises.

    Returns {"record": dict, "raw": {"header": [...], "rows": [[...], ...]}}.
    Failures are reported inside the record's ``error`` field so a sweep can
    continue past them.
    """
    started = time.perf_counter()
    inference = job["task"] == "inference"
    base = _base_hyperparams(job["fixed"])
    try:
        data = _build_job_data(job)
        if job["optimize"]:
            space = SearchSpace.preset(
                "inference" if inference else job["task"]
            )

            def objective(point: dict) -> float:
                hp = base.with_updates(**point)
                if inference:
                    return run_inference(_inference_config(job, hp, data)).nrmse
                return _evaluate_parity(job, hp, data).ber

            best, trace = hyperopt.optimize(
                objective,
                space,
                budget=job["budget"],
                seed=job["optimizer_seed"],
                stop_at=0.0 if (not inference and job["stop_at_zero"]) else None,
                penalty=None if inference else 1.0,
            )
            hp = base.with_updates(**best)
            budget_used = trace.budget_used
        else:
            hp = base.with_updates(**job["hyperparams"])
            budget_used = 0

        if inference:
            config = _inference_config(job, hp, data)
            result = run_inference(config)
            hp = config.params  # includes the fixed topology k
            metric_name, metric_value = "nrmse", result.nrmse
            raw = {
                "header": ["time", "target_z", "inferred_z"],
                "rows": np.column_stack(
                    [
                        config.test.times[-len(result.target):],
                        result.target,
                        result.inferred,
                    ]
                ).tolist(),
            }
        else:
            config = _parity_config(job, hp, data)
            result = (
                run_parity_parallel(config)
                if job["task"] == "parity-parallel"
                else run_parity_serial(config)
            )
            hp = config.params
            metric_name, metric_value = "ber", result.ber
            raw = {
                "header": ["word_index", "truth", "predicted"],
                "rows": np.column_stack(
                    [result.word_indices, result.truth, result.predictions]
                ).tolist(),
            }
        error = None
    except SymrcError as exc:
        metric_name = "nrmse" if inference else "ber"
        metric_value = math.nan
        raw = {"header": [], "rows": []}
        hp = base
        error = f"{type(exc).__name__}: {exc}"
        budget_used = 0

    record = ExperimentRecord(
        experiment_id=_experiment_id(job),
        task=job["task"],
        n=job.get("n"),
        duration=job["data"].get("duration"),
        n_nodes=job["n_nodes"],
        instance_seed=job["instance_seed"],
        optimizer_seed=job.get("optimizer_seed"),
        data=job["data"],
        hyperparams=_hp_dict(hp),
        symmetry={
            "eta_r": job["fixed"]["eta_r"],
            "eta_f": job["fixed"]["eta_f"],
            "bias": job["fixed"]["bias"],
            "square_input": job["data"].get("square_input", False),
        },
        metric_name=metric_name,
        metric_value=float(metric_value),
        wall_time_s=time.perf_counter() - started,
        budget=job["budget"] if job["optimize"] else 0,
        budget_used=budget_used,
        library_version=__version__,
        error=error,
    )
    return {"record": record.to_dict(), "raw": raw}


def _hp_dict(hp: HyperParams) -> dict:
    d = asdict(hp)
    d["k"] = int(d["k"])
    return d


def _experiment_id(job: dict) -> str:
    scale = f"n{job['n']}" if job.get("n") is not None else f"T{job['data']['duration']:g}"
    return f"{job['task']}_{scale}_N{job['n_nodes']}_s{job['instance_seed']}"


def rerun_record(record: ExperimentRecord) -> float:
    """Re-execute a record's pipeline from its serialized form.

    Rebuilds the datasets and reservoir from the stored seeds and runs the
    stored hyperparameters once; the returned metric is bit-identical to the
    recorded one.
    """
    hp = HyperParams(**record.hyperparams)
    if record.task == "inference":
        d = record.data
        config = InferencePipelineConfig.standard(
            n_nodes=record.n_nodes,
            params=hp,
            train=tasks.make_inference_dataset(
                d["duration"], d["sample_dt"], d["square_input"], d["train_seed"]
            ),
            test=tasks.make_inference_dataset(
                d["duration"], d["sample_dt"], d["square_input"], d["test_seed"]
            ),
            seed=record.instance_seed,
            square_input=d["square_input"],
            washout=d["washout"],
        )
        return run_inference(config).nrmse
    job = {
        "task": record.task,
        "n": record.n,
        "n_nodes": record.n_nodes,
        "instance_seed": record.instance_seed,
        "data": record.data,
    }
    return _evaluate_parity(job, hp, _build_job_data(job)).ber


# ---------------------------------------------------------------------------
# experiment drivers


def _parity_jobs(spec: ParityExperimentSpec) -> list[dict]:
    train, test = _resolve_data_specs(spec)
    seeds = derive_instance_seeds(spec.seed, spec.instances)
    fixed = {
        "eta_r": spec.effective_eta_r,
        "eta_f": spec.eta_f,
        "bias": spec.bias,
        "alpha": spec.alpha,
    }
    return [
        {
            "task": spec.task,
            "n": spec.n,
            "n_nodes": spec.n_nodes,
            "instance_seed": inst,
            "optimizer_seed": opt,
            "data": {"train": asdict(train), "test": asdict(test)},
            "fixed": fixed,
            "optimize": spec.optimize,
            "budget": spec.budget,
            "hyperparams": spec.hyperparams,
            "stop_at_zero": spec.stop_at_zero,
        }
        for inst, opt in seeds
    ]


def _inference_jobs(spec: InferenceExperimentSpec) -> list[dict]:
    seeds = derive_instance_seeds(spec.seed, spec.instances)
    data = {
        "duration": spec.duration,
        "sample_dt": spec.sample_dt,
        "square_input": spec.square_input,
        "washout": spec.washout,
        "train_seed": _derived_seed(spec.seed, 11, 0),
        "test_seed": _derived_seed(spec.seed, 12, 0),
    }
    fixed = {
        "eta_r": spec.eta_r,
        "eta_f": spec.eta_f,
        "bias": spec.bias,
        "alpha": spec.alpha,
    }
    return [
        {
            "task": "inference",
            "n": None,
            "n_nodes": spec.n_nodes,
            "instance_seed": inst,
            "optimizer_seed": opt,
            "data": data,
            "fixed": fixed,
            "optimize": spec.optimize,
            "budget": spec.budget,
            "hyperparams": spec.hyperparams,
            "stop_at_zero": False,
        }
        for inst, opt in seeds
    ]


def _run_jobs(jobs: list[dict], workers: int) -> list[dict]:
    if workers == 1 or len(jobs) == 1:
        return [run_instance(job) for job in jobs]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(run_instance, jobs))


def _persist(outputs: list[dict], output_dir) -> None:
    if output_dir is None:
        return
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = [ExperimentRecord.from_dict(o["record"]) for o in outputs]
    write_records(records, out / "records.jsonl")
    raw_dir = out / "raw"
    raw_dir.mkdir(exist_ok=True)
    for o in outputs:
        raw = o["raw"]
        if not raw["rows"]:
            continue
        name = re.sub(r"[^A-Za-z0-9_.-]", "-", o["record"]["experiment_id"])
        with open(raw_dir / f"{name}.tsv", "w") as fh:
            fh.write("\t".join(raw["header"]) + "\n")
            for row in raw["rows"]:
                fh.write("\t".join(f"{v:g}" for v in row) + "\n")


def run_experiment(
    spec: Union[ParityExperimentSpec, InferenceExperimentSpec, str, Path, dict],
    output_dir=None,
    workers: Optional[int] = None,
) -> list[ExperimentRecord]:
    """Run all instances of one experiment; optionally persist records.

    ``spec`` may be a typed spec, a config-file path, or a parsed config
    mapping. Instance failures are captured in their records rather than
    aborting the batch.
    """
    if isinstance(spec, (str, Path)):
        spec = experiment_spec_from_config(load_config(spec))
    elif isinstance(spec, dict):
        spec = experiment_spec_from_config(spec)
    if isinstance(spec, ParityExperimentSpec):
        jobs = _parity_jobs(spec)
    elif isinstance(spec, InferenceExperimentSpec):
        jobs = _inference_jobs(spec)
    else:
        raise ConfigurationError(f"unsupported spec type {type(spec).__name__}")
    outputs = _run_jobs(jobs, resolve_workers(workers))
    _persist(outputs, output_dir)
    return [ExperimentRecord.from_dict(o["record"]) for o in outputs]


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepCell:
    n: int
    n_nodes: int
    metric_values: list[float]
    complete: bool

    @property
    def _finite(self) -> np.ndarray:
        vals = np.asarray(self.metric_values, dtype=np.float64)
        return vals[np.isfinite(vals)]

    def stats(self) -> dict:
        v = self._finite
        if v.size == 0:
            return {
                "mean": math.nan, "min": math.nan, "q1": math.nan,
                "q3": math.nan, "max": math.nan, "zero_fraction": 0.0,
            }
        return {
            "mean": float(np.mean(v)),
            "min": float(np.min(v)),
            "q1": float(np.percentile(v, 25)),
            "q3": float(np.percentile(v, 75)),
            "max": float(np.max(v)),
            "zero_fraction": float(np.mean(v == 0.0)),
        }

    @property
    def all_zero(self) -> bool:
        v = self._finite
        return self.complete and v.size == len(self.metric_values) and bool(
            np.all(v == 0.0)
        )


_TABLE_COLUMNS = (
    "n", "n_nodes", "instances", "mean", "min", "q1", "q3", "max",
    "zero_fraction", "complete",
)


@dataclass
class SweepResult:
    cells: list[SweepCell]
    records: list[ExperimentRecord]

    def table_rows(self) -> list[dict]:
        rows = []
        for c in self.cells:
            row = {"n": c.n, "n_nodes": c.n_nodes, "instances": len(c.metric_values)}
            row.update(c.stats())
            row["complete"] = c.complete
            rows.append(row)
        return rows

    def table_text(self) -> str:
        lines = ["\t".join(_TABLE_COLUMNS)]
        for row in self.table_rows():
            lines.append(
                "\t".join(_format_cell(row[c]) for c in _TABLE_COLUMNS)
            )
        return "\n".join(lines) + "\n"

    def smallest_all_zero(self) -> dict[int, int]:
        """Per n, the smallest N at which every instance reached metric 0."""
        out: dict[int, int] = {}
        for c in self.cells:
            if c.all_zero and (c.n not in out or c.n_nodes < out[c.n]):
                out[c.n] = c.n_nodes
        return out

    def smallest_any_zero(self) -> dict[int, int]:
        """Per n, the smallest N at which some instance reached metric 0."""
        out: dict[int, int] = {}
        for c in self.cells:
            if c.stats()["zero_fraction"] > 0 and (
                c.n not in out or c.n_nodes < out[c.n]
            ):
                out[c.n] = c.n_nodes
        return out


def _format_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def run_sweep(
    spec: SweepSpec, output_dir=None, workers: Optional[int] = None
) -> SweepResult:
    """Execute a (n, N) grid with the stop rule along N.

    For each n, N values are visited in the given order and the column stops
    once every instance of a cell reaches metric 0 (when stop_on_all_zero).
    Instances run in parallel; a failed instance marks its cell incomplete
    without aborting the sweep.
    """
    n_workers = resolve_workers(workers)
    cells: list[SweepCell] = []
    all_outputs: list[dict] = []
    for n in spec.n_values:
        for n_nodes in spec.n_nodes_values:
            exp = ParityExperimentSpec(
                scheme=spec.scheme,
                n=n,
                n_nodes=n_nodes,
                instances=spec.instances,
                budget=spec.budget,
                seed=_derived_seed(spec.seed, n, n_nodes),
                eta_r=spec.eta_r,
                eta_f=spec.eta_f,
                bias=spec.bias,
                alpha=spec.alpha,
                train=spec.train,
                test=spec.test,
                require_coverage=spec.require_coverage,
            )
            outputs = _run_jobs(_parity_jobs(exp), n_workers)
            all_outputs.extend(outputs)
            values = [o["record"]["metric_value"] for o in outputs]
            complete = all(o["record"]["error"] is None for o in outputs)
            cell = SweepCell(
                n=n, n_nodes=n_nodes, metric_values=values, complete=complete
            )
            cells.append(cell)
            if spec.stop_on_all_zero and cell.all_zero:
                break

    result = SweepResult(
        cells=cells,
        records=[ExperimentRecord.from_dict(o["record"]) for o in all_outputs],
    )
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_records(result.records, out / "records.jsonl")
        (out / "sweep_table.tsv").write_text(result.table_text())
    return result


# ---------------------------------------------------------------------------
# scaling fits


@dataclass
class ScalingFit:
    model: str  # linear | exponential
    slope: float  # on N (linear) or log N (exponential)
    intercept: float
    r_squared: float


def fit_scaling(points: Sequence[tuple[float, float]], model: str) -> ScalingFit:
    """Least-squares fit of reservoir size N against parity order n.

    ``linear`` fits N = slope * n + intercept; ``exponential`` fits
    log N = slope * n + intercept. R^2 is reported in the fitted space.
    """
    if model not in ("linear", "exponential"):
        raise ParameterError(f"unknown scaling model {model!r}")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ParameterError("need at least 3 (n, N) points")
    x = pts[:, 0]
    y = pts[:, 1]
    if model == "exponential":
        if np.any(y <= 0):
            raise ParameterError("exponential fit needs positive N values")
        y = np.log(y)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return ScalingFit(
        model=model, slope=float(slope), intercept=float(intercept), r_squared=r2
    )


# ---------------------------------------------------------------------------
# config files


def load_config(path: Union[str, Path]) -> dict:
    """Parse an INI config file into {section: {key: value}} of strings."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    parser.read(path)
    return {s: dict(parser.items(s)) for s in parser.sections()}


class _SectionReader:
    """Typed access to one config section with key-naming errors."""

    def __init__(self, cfg: dict, section: str):
        if section not in cfg:
            raise ConfigurationError(f"missing section [{section}]")
        self.section = section
        self.data = cfg[section]

    def _fetch(self, key: str, cast, default):
        if key not in self.data:
            if default is not _REQUIRED:
                return default
            raise ConfigurationError(
                f"missing key '{key}' in section [{self.section}]"
            )
        raw = self.data[key]
        try:
            return cast(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(
                f"invalid value {raw!r} for key '{key}' in section "
                f"[{self.section}]"
            ) from exc

    def str(self, key, default=None):
        return self._fetch(key, str, default)

    def int(self, key, default=None):
        return self._fetch(key, int, default)

    def float(self, key, default=None):
        return self._fetch(key, float, default)

    def bool(self, key, default=None):
        return self._fetch(key, _parse_bool, default)


class _Required:
    pass


_REQUIRED = _Required()


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(raw)


def _parse_eta_r(raw: str) -> Optional[float]:
    return None if raw.strip().lower() == "auto" else float(raw)


def _data_spec_from(sec: _SectionReader, role: str, default_kind: str,
                    default_length: int) -> DataSpec:
    kind = sec.str(role, default_kind)
    length = sec.int(f"{role}_length", default_length)
    return DataSpec(kind=kind, length=length if kind == "random" else 0)


def experiment_spec_from_config(cfg: dict):
    """Build a typed experiment spec from a parsed config mapping."""
    exp = _SectionReader(cfg, "experiment")
    task = exp.str("task", _REQUIRED)
    common = dict(
        instances=exp.int("instances", 10),
        budget=exp.int("budget", hyperopt.DEFAULT_BUDGET),
        seed=exp.int("seed", 0),
        optimize=exp.bool("optimize", True),
    )
    hyperparams = None
    if "hyperparams" in cfg:
        hyperparams = {k: float(v) for k, v in cfg["hyperparams"].items()}

    if task in ("parity-serial", "parity-parallel"):
        sec = _SectionReader(cfg, "parity")
        raw_eta = sec.str("eta_r", "auto")
        return ParityExperimentSpec(
            scheme=task.removeprefix("parity-"),
            n=sec.int("n", _REQUIRED),
            n_nodes=sec.int("n_nodes", _REQUIRED),
            eta_r=_parse_eta_r(raw_eta),
            eta_f=sec.float("eta_f", 0.0),
            bias=sec.float("bias", 0.0),
            alpha=sec.float("alpha", 1e-6),
            train=_data_spec_from(sec, "train", "random", 1000),
            test=_data_spec_from(sec, "test", "random", 1000),
            require_coverage=sec.bool("require_coverage", False),
            hyperparams=hyperparams,
            stop_at_zero=sec.bool("stop_at_zero", True),
            **common,
        )
    if task == "inference":
        sec = _SectionReader(cfg, "inference")
        return InferenceExperimentSpec(
            duration=sec.float("duration", 100.0),
            n_nodes=sec.int("n_nodes", _REQUIRED),
            eta_r=sec.float("eta_r", 0.0),
            eta_f=sec.float("eta_f", 0.0),
            bias=sec.float("bias", 0.0),
            alpha=sec.float("alpha", 1e-6),
            square_input=sec.bool("square_input", False),
            washout=sec.float("washout", pipelines.DEFAULT_WASHOUT),
            sample_dt=sec.float("sample_dt", 0.005),
            hyperparams=hyperparams,
            **common,
        )
    raise ConfigurationError(f"unknown task {task!r} in section [experiment]")


def sweep_spec_from_config(cfg: dict) -> SweepSpec:
    exp = _SectionReader(cfg, "experiment")
    task = exp.str("task", _REQUIRED)
    if task not in ("parity-serial", "parity-parallel"):
        raise ConfigurationError(
            f"sweeps support parity tasks only, got task {task!r}"
        )
    sec = _SectionReader(cfg, "sweep")
    n_values = _parse_int_list(sec.str("n_values", _REQUIRED))
    n_nodes_values = _parse_int_list(sec.str("n_nodes_values", _REQUIRED))
    return SweepSpec(
        scheme=task.removeprefix("parity-"),
        n_values=n_values,
        n_nodes_values=n_nodes_values,
        instances=exp.int("instances", 10),
        budget=exp.int("budget", hyperopt.DEFAULT_BUDGET),
        seed=exp.int("seed", 0),
        eta_r=_parse_eta_r(sec.str("eta_r", "auto")),
        eta_f=sec.float("eta_f", 0.0),
        bias=sec.float("bias", 0.0),
        alpha=sec.float("alpha", 1e-6),
        train=_data_spec_from(sec, "train", "minimal", 1000),
        test=_data_spec_from(sec, "test", "exhaustive", 1000),
        require_coverage=sec.bool("require_coverage", False),
        stop_on_all_zero=sec.bool("stop_on_all_zero", True),
    )


def _parse_int_list(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigurationError(f"expected a list of integers, got {raw!r}") from exc
