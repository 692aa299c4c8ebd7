"""Thin command-line client for the symrc service.

Every experiment subcommand builds a JSON request and sends it through the
HTTP API: either to a remote server (--server URL) or, by default, straight
to the in-process ASGI app, so no running server is required for local use.
Records returned by the service are written to the output directory in the
same JSON-lines format the harness uses.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path
from typing import Optional

import click
import httpx

from . import __version__, harness
from .errors import SymrcError


def _post(server: Optional[str], path: str, payload: dict) -> dict:
    try:
        if server:
            with httpx.Client(base_url=server, timeout=None) as client:
                response = client.post(path, json=payload)
        else:
            response = asyncio.run(_post_in_process(path, payload))
    except httpx.HTTPError as exc:
        raise click.ClickException(f"request failed: {exc}")
    if response.status_code != 200:
        try:
            detail = response.json().get("detail")
        except json.JSONDecodeError:
            detail = response.text
        raise click.ClickException(f"service error ({response.status_code}): {detail}")
    return response.json()


async def _post_in_process(path: str, payload: dict) -> httpx.Response:
    from .service.app import app

    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(
        transport=transport, base_url="http://symrc.internal", timeout=None
    ) as client:
        return await client.post(path, json=payload)


def _load_experiment_payload(config: str, task: str) -> dict:
    cfg = harness.load_config(config)
    try:
        spec = harness.experiment_spec_from_config(cfg)
    except SymrcError as exc:
        raise click.ClickException(str(exc))
    if spec.task != task:
        raise click.ClickException(
            f"config declares task {spec.task!r} but the {task!r} command was used"
        )
    payload: dict = {
        "instances": spec.instances,
        "budget": spec.budget,
        "seed": spec.seed,
        "eta_f": spec.eta_f,
        "bias": spec.bias,
        "alpha": spec.alpha,
        "optimize": spec.optimize,
        "hyperparams": spec.hyperparams,
    }
    if isinstance(spec, harness.ParityExperimentSpec):
        payload.update(
            n=spec.n,
            n_nodes=spec.n_nodes,
            eta_r=spec.eta_r,
            train=spec.train.kind,
            train_length=spec.train.length or 1000,
            test=spec.test.kind,
            test_length=spec.test.length or 1000,
            require_coverage=spec.require_coverage,
            stop_at_zero=spec.stop_at_zero,
        )
    else:
        payload.update(
            duration=spec.duration,
            n_nodes=spec.n_nodes,
            eta_r=spec.eta_r,
            square_input=spec.square_input,
            washout=spec.washout,
            sample_dt=spec.sample_dt,
        )
    return payload


def _apply_overrides(payload: dict, seed, budget, workers) -> None:
    if seed is not None:
        payload["seed"] = seed
    if budget is not None:
        payload["budget"] = budget
    if workers is not None:
        payload["workers"] = workers


def _write_experiment_outputs(body: dict, output_dir: Optional[str]) -> None:
    if output_dir is None:
        return
    records = [harness.ExperimentRecord.from_dict(r) for r in body["records"]]
    harness.write_records(records, Path(output_dir) / "records.jsonl")
    click.echo(f"wrote {len(records)} records to {output_dir}/records.jsonl")


def _echo_experiment_summary(body: dict) -> None:
    name = body["metric_name"]
    for rec in body["records"]:
        status = f"{rec['metric_value']:.6g}" if rec["error"] is None else rec["error"]
        click.echo(f"  seed {rec['instance_seed']}: {name} = {status}")
    if body["best_metric"] is not None:
        click.echo(
            f"{name}: best = {body['best_metric']:.6g}, "
            f"mean = {body['mean_metric']:.6g}"
        )


_shared_options = [
    click.option("--config", "-c", required=True, type=click.Path(),
                 help="INI experiment config."),
    click.option("--output-dir", "-o", type=click.Path(), default=None,
                 help="Directory for records and tables."),
    click.option("--seed", type=int, default=None, help="Master seed override."),
    click.option("--budget", type=int, default=None,
                 help="Optimizer budget override."),
    click.option("--workers", type=int, default=None,
                 help="Worker count (SYMRC_WORKERS overrides)."),
    click.option("--server", type=str, default=None,
                 help="Base URL of a running service; default is in-process."),
]


def _with_shared_options(fn):
    for option in reversed(_shared_options):
        fn = option(fn)
    return fn


@click.group()
@click.version_option(version=__version__)
def main():
    """Reservoir-computing parity and Lorenz-inference benchmarks."""


def _experiment_command(task: str, endpoint: str):
    @_with_shared_options
    def command(config, output_dir, seed, budget, workers, server):
        payload = _load_experiment_payload(config, task)
        _apply_overrides(payload, seed, budget, workers)
        body = _post(server, endpoint, payload)
        _echo_experiment_summary(body)
        _write_experiment_outputs(body, output_dir)

    command.__doc__ = f"Run the {task} experiment described by a config file."
    return command


main.command("parity-serial")(_experiment_command("parity-serial",
                                                  "/experiments/parity-serial"))
main.command("parity-parallel")(_experiment_command("parity-parallel",
                                                    "/experiments/parity-parallel"))
main.command("infer")(_experiment_command("inference", "/experiments/inference"))


@main.command("sweep")
@_with_shared_options
def sweep(config, output_dir, seed, budget, workers, server):
    """Run a (n, N) sweep with the stop rule along N."""
    cfg = harness.load_config(config)
    try:
        spec = harness.sweep_spec_from_config(cfg)
    except SymrcError as exc:
        raise click.ClickException(str(exc))
    payload = {
        "scheme": spec.scheme,
        "n_values": list(spec.n_values),
        "n_nodes_values": list(spec.n_nodes_values),
        "instances": spec.instances,
        "budget": spec.budget,
        "seed": spec.seed,
        "eta_r": spec.eta_r,
        "eta_f": spec.eta_f,
        "bias": spec.bias,
        "alpha": spec.alpha,
        "train": spec.train.kind,
        "train_length": spec.train.length or 1000,
        "test": spec.test.kind,
        "test_length": spec.test.length or 1000,
        "require_coverage": spec.require_coverage,
        "stop_on_all_zero": spec.stop_on_all_zero,
    }
    _apply_overrides(payload, seed, budget, workers)
    body = _post(server, "/sweeps/parity", payload)

    header = ("n", "n_nodes", "instances", "mean", "min", "q1", "q3", "max",
              "zero_fraction", "complete")
    lines = ["\t".join(header)]
    for row in body["rows"]:
        lines.append("\t".join(_cell(row[c]) for c in header))
    table = "\n".join(lines) + "\n"
    click.echo(table, nl=False)
    if body["smallest_any_zero"]:
        click.echo(f"smallest N with any zero-error instance: {body['smallest_any_zero']}")
    if body["smallest_all_zero"]:
        click.echo(f"smallest N with all instances at zero error: {body['smallest_all_zero']}")
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep_table.tsv").write_text(table)
        records = [harness.ExperimentRecord.from_dict(r) for r in body["records"]]
        harness.write_records(records, out / "records.jsonl")
        click.echo(f"wrote table and {len(records)} records to {output_dir}/")


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


@main.command("fit-scaling")
@click.option("--point", "points", type=(float, float), multiple=True,
              help="An (n, N) pair; repeatable.")
@click.option("--from-sweep", type=click.Path(), default=None,
              help="Derive (n, smallest all-zero N) points from a sweep table.")
@click.option("--model", type=click.Choice(["linear", "exponential"]),
              default="linear")
@click.option("--server", type=str, default=None)
def fit_scaling(points, from_sweep, model, server):
    """Fit the N-versus-n scaling law from (n, N) points."""
    pts = [list(p) for p in points]
    if from_sweep is not None:
        pts.extend(_points_from_sweep_table(from_sweep))
    if len(pts) < 3:
        raise click.ClickException("need at least 3 points (use --point/--from-sweep)")
    body = _post(server, "/analysis/fit-scaling", {"points": pts, "model": model})
    click.echo(
        f"{body['model']} fit: slope = {body['slope']:.4g}, "
        f"intercept = {body['intercept']:.4g}, R^2 = {body['r_squared']:.4g}"
    )


def _points_from_sweep_table(path) -> list[list[float]]:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split("\t")
    idx = {name: i for i, name in enumerate(header)}
    smallest: dict[int, float] = {}
    for line in lines[1:]:
        cells = line.split("\t")
        n = int(cells[idx["n"]])
        n_nodes = float(cells[idx["n_nodes"]])
        if (
            cells[idx["complete"]] == "true"
            and float(cells[idx["zero_fraction"]]) == 1.0
            and (n not in smallest or n_nodes < smallest[n])
        ):
            smallest[n] = n_nodes
    return [[float(n), smallest[n]] for n in sorted(smallest)]


@main.command("check-coverage")
@click.option("--n", type=int, required=True, help="Pattern order.")
@click.option("--length", type=int, default=None, help="Random series length.")
@click.option("--seed", type=int, default=None, help="Random series seed.")
@click.option("--bits-file", type=click.Path(), default=None,
              help="File with whitespace-separated ±1 bits.")
@click.option("--server", type=str, default=None)
@click.pass_context
def check_coverage(ctx, n, length, seed, bits_file, server):
    """Check that all 2^n patterns occur in a bit series."""
    payload: dict = {"n": n}
    if bits_file is not None:
        payload["bits"] = [int(v) for v in Path(bits_file).read_text().split()]
    elif length is not None:
        payload["length"] = length
        payload["seed"] = seed
    else:
        raise click.ClickException("provide --length or --bits-file")
    body = _post(server, "/tasks/check-coverage", payload)
    if body["ok"]:
        click.echo(
            f"all {body['n_patterns']} patterns present "
            f"(min count {body['min_count']})"
        )
    else:
        click.echo(
            f"{body['n_missing']} of {body['n_patterns']} patterns missing"
        )
        ctx.exit(1)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the experiment service with uvicorn."""
    import uvicorn

    uvicorn.run("symrc.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
