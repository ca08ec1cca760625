"""CLI commands: simulate, linear-spectral, verify and sweep.

Exit codes: 0 success, 1 failed checks, 2 configuration error, 3 numerical abort.
"""
import logging
import os

import click
from flask import current_app

from kgtx.routes import bp
from kgtx.routes.main import run_service
from kgtx.services import runs
from kgtx.services.errors import NumericalError
from kgtx.services.run_config import parse_config

logger = logging.getLogger(__name__)


def _out_dir(option, config):
    # KGTX_OUT wins over --out, which wins over the config file
    return os.getenv('KGTX_OUT') or current_app.config.get('KGTX_OUT') or option or config.out


def _load(path, seed):
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    overrides = {'seed': str(seed)} if seed is not None else None
    return text, overrides


def _parse_axes(axes):
    parsed = {}
    for axis in axes:
        if '=' not in axis:
            raise click.BadParameter(f"expected key=v1,v2,..., got '{axis}'", param_hint='--axis')
        key, values = (part.strip() for part in axis.split('=', 1))
        parsed[key] = [v.strip() for v in values.split(',') if v.strip()]
    if not parsed:
        raise click.BadParameter("at least one axis is required", param_hint='--axis')
    return parsed


def _execute(command, config_path, action):
    """Run `action`, record it in the history and translate errors to exit codes."""
    if not run_service.app:
        run_service.init_app(current_app)
    ctx = click.get_current_context()
    with run_service.record(command, config_path) as entry:
        try:
            code, out_dir = action()
            entry['out'] = out_dir
        except (ValueError, NumericalError) as e:
            code = runs.exit_code_for(e)
            logger.error("%s aborted: %s", command, e)
            click.echo(f"error: {e}", err=True)
        entry['exit_code'] = code
    ctx.exit(code)


config_option = click.option('--config', 'config_path', required=True,
                             type=click.Path(exists=True, dir_okay=False), help='Run configuration file.')
out_option = click.option('--out', 'out', default=None, type=click.Path(file_okay=False),
                          help='Output directory (KGTX_OUT overrides it).')
seed_option = click.option('--seed', type=int, default=None, help='Seed for randomized audits.')


@bp.cli.command('simulate')
@config_option
@out_option
@seed_option
def simulate(config_path, out, seed):
    """Run the finite-difference (or spectral-linear) solver."""
    def action():
        config = parse_config(*_load(config_path, seed))
        out_dir = _out_dir(out, config)
        code, _ = runs.cmd_simulate(config, out_dir)
        return code, out_dir
    _execute('simulate', config_path, action)


@bp.cli.command('linear-spectral')
@config_option
@out_option
@seed_option
def linear_spectral(config_path, out, seed):
    """Evaluate the closed-form linear solution and coefficient tables."""
    def action():
        config = parse_config(*_load(config_path, seed))
        out_dir = _out_dir(out, config)
        code, _ = runs.cmd_linear_spectral(config, out_dir)
        return code, out_dir
    _execute('linear-spectral', config_path, action)


@bp.cli.command('verify')
@config_option
@out_option
@seed_option
def verify(config_path, out, seed):
    """Run the full verification suite; exits 1 if any check fails."""
    def action():
        config = parse_config(*_load(config_path, seed))
        out_dir = _out_dir(out, config)
        code, results = runs.cmd_verify(config, out_dir)
        for result in results:
            click.echo(f"{result.name:<26}{'pass' if result.passed else 'FAIL'}")
        return code, out_dir
    _execute('verify', config_path, action)


@bp.cli.command('sweep')
@config_option
@out_option
@seed_option
@click.option('--axis', 'axes', multiple=True, help='Sweep axis as key=v1,v2,... (repeatable).')
@click.option('--jobs', type=int, default=None, help='Parallel cells (default KGTX_JOBS).')
def sweep(config_path, out, seed, axes, jobs):
    """Cartesian parameter sweep, one simulate run per cell."""
    parsed = _parse_axes(axes)

    def action():
        text, overrides = _load(config_path, seed)
        base = parse_config(text, overrides)
        out_dir = _out_dir(out, base)
        code, _ = runs.cmd_sweep(text, parsed, out_dir,
                                 jobs=jobs or current_app.config.get('KGTX_JOBS', 1),
                                 overrides=overrides)
        return code, out_dir
    _execute('sweep', config_path, action)
