"""Thin-client CLI over the service API.

Every subcommand talks HTTP to the endpoints in service.py: against a remote
server when --server is given, otherwise through an in-process ASGI transport,
so no separate daemon is needed for local runs. Exit code 0 on success, 2 on
scenario validation failure, 1 on other errors.
"""

from __future__ import annotations

import json
import sys

import click
import httpx

from .scenario import CONTROLLER_NAMES

EXIT_VALIDATION = 2


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # no server: drive the ASGI app in-process through the same HTTP surface
    import warnings

    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*httpx2.*")
        from starlette.testclient import TestClient

    from .service import app

    return TestClient(app)


def _load_scenario_doc(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"cannot read scenario {path}: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)


def _post(client: httpx.Client, endpoint: str, payload: dict) -> httpx.Response:
    resp = client.post(endpoint, json=payload)
    if resp.status_code == 422:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        click.echo(f"scenario rejected: {detail}", err=True)
        sys.exit(EXIT_VALIDATION)
    resp.raise_for_status()
    return resp


@click.group()
def main():
    """Closed-loop power/thermal management simulator."""


@main.command()
@click.argument("scenario_file", type=click.Path(exists=False))
@click.option("--mode", type=click.Choice(["lockstep", "async"]), default=None)
@click.option("--out", type=click.Path(), default="telemetry.csv", show_default=True)
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--controller", type=click.Choice(CONTROLLER_NAMES), default=None)
@click.option("--server", default=None, help="Remote service URL; default runs in-process.")
def run(scenario_file, mode, out, seed, controller, server):
    """Run a scenario and write the telemetry CSV."""
    payload = {"scenario": _load_scenario_doc(scenario_file)}
    if mode:
        payload["mode"] = mode
    if seed is not None:
        payload["seed"] = seed
    if controller:
        payload["controller"] = controller
    with _client(server) as client:
        resp = _post(client, "/run", payload)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(resp.text)
    click.echo(f"wrote {out}")


@main.command()
@click.argument("telemetry_file", type=click.Path(exists=False))
@click.argument("scenario_file", type=click.Path(exists=False))
@click.option("--server", default=None)
def metrics(telemetry_file, scenario_file, server):
    """Score a telemetry file against its scenario."""
    try:
        with open(telemetry_file, "r", encoding="utf-8") as fh:
            telemetry_csv = fh.read()
    except OSError as exc:
        click.echo(f"cannot read telemetry {telemetry_file}: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    payload = {"scenario": _load_scenario_doc(scenario_file), "telemetry_csv": telemetry_csv}
    with _client(server) as client:
        resp = _post(client, "/metrics", payload)
    click.echo(json.dumps(resp.json(), indent=2))


@main.command()
@click.argument("scenario_file", type=click.Path(exists=False))
@click.option("--a", "controller_a", type=click.Choice(CONTROLLER_NAMES), required=True)
@click.option("--b", "controller_b", type=click.Choice(CONTROLLER_NAMES), required=True)
@click.option("--out", type=click.Path(), default="report.csv", show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--server", default=None)
def compare(scenario_file, controller_a, controller_b, out, seed, server):
    """Run two controllers on one scenario and write the per-core deltas."""
    payload = {
        "scenario": _load_scenario_doc(scenario_file),
        "controller_a": controller_a,
        "controller_b": controller_b,
    }
    if seed is not None:
        payload["seed"] = seed
    with _client(server) as client:
        resp = _post(client, "/compare", payload)
    doc = resp.json()
    lines = ["core,retired_a,retired_b,delta_b_vs_a_pct"]
    for core, (ra, rb, d) in enumerate(
        zip(doc["retired_a"], doc["retired_b"], doc["delta_b_vs_a_pct"])
    ):
        lines.append(f"{core},{ra},{rb},{d}")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    click.echo(f"wrote {out}")
    click.echo(json.dumps({"metrics_a": doc["metrics_a"], "metrics_b": doc["metrics_b"]}, indent=2))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("pcsim.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
