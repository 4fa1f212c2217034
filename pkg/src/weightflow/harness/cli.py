"""Command-line entry point.

Every subcommand reads ``--config`` (YAML or JSON with ExperimentConfig keys),
writes its artifacts plus ``manifest.json`` into ``--out`` and exits with 0
on success, 2 when a check fails and 1 on any other error.
"""
from __future__ import annotations

import os
import sys
import traceback

import click

from . import experiments as ex
from .config import ExperimentConfig, load_config
from .output import RunRecord

EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2


def _run(command: str, runner, config_path, out_dir, defaults=None):
    cfg_data = {}
    try:
        cfg = load_config(config_path) if config_path else ExperimentConfig(**(defaults or {}))
        cfg_data = cfg.to_dict()
        if out_dir is None:
            out_dir = cfg.output_dir
        if out_dir is None:
            raise click.UsageError("no --out given and the config has no output_dir")
    except Exception as exc:  # bad config: nothing to run
        click.echo(f"error: {exc}", err=True)
        if out_dir is not None:
            RunRecord(out_dir, command, cfg_data).finish("error", str(exc))
        sys.exit(EXIT_ERROR)
    rec = RunRecord(out_dir, command, cfg_data)
    try:
        runner(cfg, rec)
    except Exception as exc:
        rec.finish("error", f"{type(exc).__name__}: {exc}")
        click.echo(f"error in {command}: {exc}", err=True)
        if "WEIGHTFLOW_DEBUG" in os.environ:
            traceback.print_exc()
        sys.exit(EXIT_ERROR)
    manifest = rec.finish()
    for name, c in rec.checks.items():
        click.echo(f"{'PASS' if c['passed'] else 'FAIL'}  {name}")
    if manifest["status"] != "ok":
        click.echo(f"{len(rec.failures)} check(s) failed; see {rec.out / 'manifest.json'}", err=True)
        sys.exit(EXIT_CHECK)
    sys.exit(EXIT_OK)


def _common(f):
    f = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                     help="Output directory (created if missing).")(f)
    f = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     default=None, help="YAML or JSON experiment configuration.")(f)
    return f


@click.group()
@click.version_option(package_name="artifact")
def cli():
    """Weighted particle dynamics, their mean-field limit and distance checks."""


@cli.command()
@_common
def micro(config_path, out_dir):
    """Integrate the particle system for each N and audit conservation."""
    _run("micro", ex.run_micro, config_path, out_dir)


@cli.command()
@_common
def macro(config_path, out_dir):
    """Run the splitting scheme on the grid and record per-sample diagnostics."""
    _run("macro", ex.run_macro, config_path, out_dir)


@cli.command()
@_common
def converge(config_path, out_dir):
    """Distances between particle solutions and the grid solution as N grows."""
    _run("converge", ex.run_convergence_study, config_path, out_dir,
         {"N_list": [20, 50, 100, 200]})


@cli.command("scheme-compare")
@_common
def scheme_compare(config_path, out_dir):
    """Both splitting orders on the two-atom example."""
    _run("scheme-compare", ex.run_scheme_comparison, config_path, out_dir, {"preset": "appendixB", "N_list": [2]})


@cli.command("metrics-check")
@_common
def metrics_check(config_path, out_dir):
    """Closed-form distances and comparison inequalities on random pairs."""
    _run("metrics-check", ex.run_metrics_check, config_path, out_dir)


@cli.command()
@_common
def clusters(config_path, out_dir):
    """Cluster formation: particles for each N, grid density and overlays."""
    _run("clusters", ex.run_paper_experiment, config_path, out_dir)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_ERROR)
    except click.exceptions.Abort:
        sys.exit(EXIT_ERROR)


if __name__ == "__main__":
    main()
