# stochlab/cli.py
import logging
import sys
from pathlib import Path

import click

from . import create_lab
from .config import Config
from .errors import ConfigurationError
from .models import ExperimentKind, list_runs
from .services.experiments import (
    EXIT_CONFIG, EXIT_RUNTIME, KIND_DESCRIPTIONS, parse_config, run_experiment, with_overrides
)

logger = logging.getLogger(__name__)

KIND_HELP = "Experiment kinds: " + ", ".join(k.value for k in ExperimentKind) + "."


@click.group(help="Stochastic-process laboratory. " + KIND_HELP)
@click.option("--log-level", default=None, help="Logging level (default: STOCHLAB_LOG_LEVEL or INFO).")
@click.pass_context
def main(ctx, log_level):
    ctx.ensure_object(dict)
    ctx.obj["log_level"] = log_level


@main.command(help="Run an experiment from a config file. " + KIND_HELP)
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False, path_type=Path),
              help="Experiment config ([experiment] section plus one section for the kind).")
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option("--trials", type=int, default=None, help="Override the number of trials.")
@click.option("--workers", type=int, default=None,
              help=f"Worker processes (default: STOCHLAB_WORKERS, now {Config.WORKERS}).")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Output directory for rows.jsonl, summary.csv and manifest.json.")
@click.option("--registry", default=None, help="SQLAlchemy URL of the run registry.")
@click.pass_context
def run(ctx, config_path, seed, trials, workers, out, registry):
    create_lab(ctx.obj.get("log_level"))
    try:
        text = config_path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        click.secho(f"cannot read config {config_path}: {e}", fg="red", err=True)
        ctx.exit(EXIT_RUNTIME)
    try:
        config = with_overrides(parse_config(text), seed=seed, trials=trials, workers=workers, out=out)
    except ConfigurationError as e:
        click.secho(f"{config_path}: {e}", fg="red", err=True)
        ctx.exit(EXIT_CONFIG)
    result = run_experiment(config, registry_url=registry or Config.REGISTRY_URL)
    if result.exit_code == 0:
        click.secho(f"{result.rows_written} rows written to {config.out}", fg="green")
    else:
        click.secho(f"run failed ({result.exit_code}): {result.error}", fg="red", err=True)
    ctx.exit(result.exit_code)


@main.command(help="List the experiment kinds.")
def kinds():
    for kind in ExperimentKind:
        click.echo(f"{kind.value:20s} {KIND_DESCRIPTIONS[kind]}")


@main.command(help="List runs recorded in the run registry.")
@click.option("--registry", default=None, help="SQLAlchemy URL of the run registry.")
@click.option("--kind", type=click.Choice([k.value for k in ExperimentKind]), default=None)
@click.pass_context
def runs(ctx, registry, kind):
    engine = create_lab(ctx.obj.get("log_level"), registry)
    if engine is None:
        click.echo("no run registry configured (set STOCHLAB_REGISTRY_URL or pass --registry)", err=True)
        ctx.exit(EXIT_CONFIG)
    for r in list_runs(engine, ExperimentKind(kind) if kind else None):
        click.echo(f"#{r['run_id']:<5} {r['kind']:20s} seed={r['master_seed']} trials={r['trials']} "
                   f"workers={r['workers']} status={r['status']} rows={r['rows_written']} "
                   f"out={r['out_dir']}")


if __name__ == "__main__":
    sys.exit(main())
