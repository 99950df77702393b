"""Command-line entry point.

Subcommands mirror the pipeline: ingest -> dmv -> train -> build-vf ->
simulate, each driven by one TOML/JSON config file. Every command can
also act as a thin client of a running service instance via ``--server``,
posting the same config to the matching endpoint. Exit codes: 0 success,
1 usage/config error, 2 data error.
"""

from __future__ import annotations

import json
import sys

import click

from .config import RunConfig
from .errors import EngineError
from .pipeline import COMMANDS

# click defaults usage errors to exit code 2; this package reserves 2 for
# data errors
click.exceptions.UsageError.exit_code = 1


def _echo_summary(summary: dict) -> None:
    click.echo(json.dumps(summary, indent=2, sort_keys=True, default=str))


def _post_to_server(server: str, command: str, cfg: RunConfig) -> None:
    import httpx

    url = f"{server.rstrip('/')}/pipeline/{command}"
    response = httpx.post(
        url, json={"config": cfg.raw, "base_dir": str(cfg.base_dir)}, timeout=600.0
    )
    payload = response.json()
    _echo_summary(payload)
    if response.status_code != 200:
        sys.exit(1 if payload.get("error_kind") != "data" else 2)


def _run(command: str, config_path: str, server: str | None, run_dir: str | None,
         seed: int | None) -> None:
    try:
        cfg = RunConfig.load(config_path)
        if run_dir:
            cfg.set_run_dir(run_dir)
        if seed is not None:
            cfg.raw["seed"] = seed
        if server:
            _post_to_server(server, command, cfg)
            return
        summary = COMMANDS[command](cfg)
    except EngineError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)
    _echo_summary(summary)


def _pipeline_command(name: str, help_text: str):
    @click.option("--config", "-c", "config_path", required=True,
                  type=click.Path(), help="TOML or JSON run configuration.")
    @click.option("--server", default=None, metavar="URL",
                  help="Send the command to a running service instead of executing locally.")
    @click.option("--run-dir", default=None, type=click.Path(),
                  help="Override the output run directory.")
    @click.option("--seed", default=None, type=int, help="Override the root seed.")
    def command(config_path, server, run_dir, seed):
        _run(name, config_path, server, run_dir, seed)

    command.__doc__ = help_text
    return command


@click.group()
@click.version_option(package_name="aircargo-rm")
def main():
    """Air-cargo revenue management: data cleaning, volume prediction,
    value functions, and policy simulation."""


main.command("ingest")(_pipeline_command(
    "ingest", "Validate and normalize a bookings CSV; writes records and an ingest report."))
main.command("dmv")(_pipeline_command(
    "dmv", "Score frequent booked volumes and write the DMV directory."))
main.command("train")(_pipeline_command(
    "train", "Train the received-volume model and report flight-grouped CV error."))
main.command("build-vf")(_pipeline_command(
    "build-vf", "Build value-function tables for every configured capacity."))
main.command("simulate")(_pipeline_command(
    "simulate", "Run the configured policy campaign and write the results CSV."))


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
