"""Thin command-line client for the verification operations.

Each subcommand validates a scenario file, runs it (in process by default, or
against a running service with ``--server``), writes the returned artifacts
under ``--out``, and exits 0 on success, 1 on a failed check or an
unreachable target, 2 on configuration errors.  ``PDMP_VERIFY_THREADS``
overrides the worker count when ``--threads`` is not given.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .ops import ScenarioError, execute, load_scenario
from .schemas import Outcome


@click.group()
@click.version_option(version=__version__, prog_name="pdmp-verify")
def main():
    """Verify viability, invariance and reachability of jump-flow models."""


def _remote(server: str, op: str, scenario) -> Outcome:
    import httpx

    response = httpx.post(
        server.rstrip("/") + "/" + op,
        json=scenario.model_dump(mode="json", by_alias=True, exclude_none=True),
        timeout=None,
    )
    if response.status_code == 422:
        raise ScenarioError(response.json().get("detail", response.text))
    response.raise_for_status()
    return Outcome.model_validate(response.json())


def _dispatch(op: str, scenario_path: str, out_dir: str, seed, threads, server):
    try:
        scenario = load_scenario(scenario_path)
        if seed is not None:
            scenario = scenario.model_copy(update={"seed": seed})
        if threads is not None:
            scenario = scenario.model_copy(update={"threads": threads})
        if server:
            outcome = _remote(server, op, scenario)
        else:
            outcome = execute(scenario, op)
    except (ScenarioError, ValueError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(2)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in outcome.artifacts.items():
        (out / name).write_text(content, encoding="utf-8")
    click.echo(json.dumps({"op": outcome.op, "status": outcome.status,
                           "out": str(out), "artifacts": sorted(outcome.artifacts)}, indent=2))
    sys.exit(outcome.exit_code)


def _subcommand(op: str, help_text: str):
    @main.command(name=op, help=help_text)
    @click.option("--scenario", "scenario_path", required=True,
                  type=click.Path(exists=True, dir_okay=False), help="Scenario JSON file.")
    @click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
                  help="Directory for artifacts.")
    @click.option("--seed", type=int, default=None, help="Override the scenario seed.")
    @click.option("--threads", type=int, default=None, help="Worker count override.")
    @click.option("--server", type=str, default=None,
                  help="Run against a pdmp-verify service at this base URL.")
    def cmd(scenario_path, out_dir, seed, threads, server):
        _dispatch(op, scenario_path, out_dir, seed, threads, server)

    return cmd


_subcommand("simulate", "Simulate one trajectory and write its CSV (and plot).")
_subcommand("check-invariance", "Grid-check the invariance conditions of a set.")
_subcommand("check-viability", "Grid-check the viability conditions of a set.")
_subcommand("value", "Monte Carlo value or hitting-probability estimation.")
_subcommand("solve-hjb", "Solve a discounted equation on a grid.")
_subcommand("reach", "Decide reachability of an open target set.")
_subcommand("plot", "Render a trajectory CSV as an SVG plot.")


@main.command(name="serve", help="Run the HTTP service.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    import uvicorn

    uvicorn.run("pdmp_verify.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
