"""Run orchestration: the four commands, their output files and the run history."""
from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from datetime import timedelta

import numpy as np

from kgtx import __version__ as VERSION
from kgtx.services import nlsolver, spectral, suite
from kgtx.services.dispersion import coefficient_table, reflection_phase
from kgtx.services.errors import ConfigError, NumericalError
from kgtx.services.format_utils import (format_datetime, format_duration, format_float, parse_timestamp,
                                        utc_now)
from kgtx.services.run_config import parse_config

logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def exit_code_for(error):
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    # ConfigError, WindowError and BranchCutError are all bad input
    if isinstance(error, ValueError):
        return EXIT_CONFIG
    return None


def _write_rows(path, header, rows):
    rows = np.asarray(rows, dtype=float).reshape(-1, len(header.split(',')))
    np.savetxt(path, rows + 0.0, delimiter=',', header=header, comments='', fmt='%.17g')


def write_field_csv(path, snapshots):
    rows = []
    for snap in snapshots:
        x, u = snap.field.to_global()
        rows.append(np.column_stack((np.full(x.size, snap.t), x, u)))
    _write_rows(path, 't,X,u', np.concatenate(rows) if rows else [])


def write_energy_csv(path, energies):
    _write_rows(path, 't,E,kinetic,elastic,dispersive,nonlinear', [r.as_row() for r in energies])


def write_coefficients_csv(path, table):
    _write_rows(path, 'omega,re_CR,im_CR,re_T,im_T', table.rows())


def write_phase_csv(path, phase):
    _write_rows(path, 'omega,phase_CR,delay', np.column_stack((phase.omega, phase.phase, phase.delay)))


def write_checks_csv(path, results):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['check', 'status', 'metric', 'value'])
        for result in results:
            status = 'pass' if result.passed else 'fail'
            if not result.metrics:
                writer.writerow([result.name, status, '', ''])
            for key in sorted(result.metrics):
                value = result.metrics[key]
                text = format_float(value) if isinstance(value, (int, float)) and not isinstance(value, bool) else str(value)
                writer.writerow([result.name, status, key, text])


def checksum(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 16), b''):
            digest.update(block)
    return digest.hexdigest()


def write_metadata(out_dir, command, config, summary, timings, files):
    metadata = {
        'command': command,
        'version': VERSION,
        'seed': config.seed,
        'config': config.echo(),
        'summary': summary,
        'timings': timings,
        'files': {name: checksum(os.path.join(out_dir, name)) for name in sorted(files)},
    }
    with open(os.path.join(out_dir, 'metadata.json'), 'w') as f:
        json.dump(metadata, f, indent=2, sort_keys=True)
    return metadata


def _prepare(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def cmd_simulate(config, out_dir):
    """Run the configured solver and write field, energy and metadata files."""
    _prepare(out_dir)
    started = time.perf_counter()
    if config.mode == 'spectral-linear':
        trajectory = spectral.spectral_trajectory(config.datum, config.params, config.grid,
                                                  config.snapshots, config.quad)
        files = ['field.csv']
    else:
        trajectory = nlsolver.run(config.datum, config.spec, config.params, config.grid, config.T,
                                  dt=config.dt, scheme=config.mode, snapshot_times=config.snapshots,
                                  allow_inadmissible=config.allow_inadmissible,
                                  cfl_max=config.cfl_max)
        write_energy_csv(os.path.join(out_dir, 'energy.csv'), trajectory.energies)
        files = ['field.csv', 'energy.csv']
    write_field_csv(os.path.join(out_dir, 'field.csv'), trajectory.snapshots)

    summary = {'mode': config.mode, 'snapshots': len(trajectory.snapshots)}
    if trajectory.energies:
        summary['energy_drift'] = suite.energy_drift(trajectory)
        summary['energy_final'] = trajectory.energies[-1].total
        summary['override'] = trajectory.metadata['override']
    write_metadata(out_dir, 'simulate', config, summary,
                   {'wall_seconds': time.perf_counter() - started}, files)
    logger.info("Simulation written to %s", out_dir)
    return EXIT_OK, trajectory


def cmd_linear_spectral(config, out_dir):
    """Closed-form linear solution plus coefficient and reflection-phase tables."""
    if config.nonlinearity != 'none':
        raise ConfigError("linear-spectral requires nonlinearity = none")
    _prepare(out_dir)
    started = time.perf_counter()
    params = config.params
    trajectory = spectral.spectral_trajectory(config.datum, params, config.grid,
                                              config.snapshots, config.quad)
    write_field_csv(os.path.join(out_dir, 'field.csv'), trajectory.snapshots)
    omegas = np.linspace(-4.0 * params.cutoff, 4.0 * params.cutoff, 801)
    write_coefficients_csv(os.path.join(out_dir, 'coefficients.csv'),
                           coefficient_table(params, omegas))
    write_phase_csv(os.path.join(out_dir, 'phase.csv'), reflection_phase(params, omegas))
    files = ['field.csv', 'coefficients.csv', 'phase.csv']
    write_metadata(out_dir, 'linear-spectral', config, {'snapshots': len(trajectory.snapshots)},
                   {'wall_seconds': time.perf_counter() - started}, files)
    return EXIT_OK, trajectory


def cmd_verify(config, out_dir, checks=None):
    """Run the verification suite; exit 1 when any check fails."""
    _prepare(out_dir)
    started = time.perf_counter()
    results = suite.run_suite(config, checks or suite.CHECKS)
    write_checks_csv(os.path.join(out_dir, 'checks.csv'), results)
    failed = [r.name for r in results if not r.passed]
    summary = {'passed': not failed, 'failed': failed,
               'checks': {r.name: 'pass' if r.passed else 'fail' for r in results}}
    write_metadata(out_dir, 'verify', config, summary,
                   {'wall_seconds': time.perf_counter() - started}, ['checks.csv'])
    if failed:
        logger.error("Verification failed: %s", ', '.join(failed))
        return EXIT_CHECK_FAILED, results
    logger.info("All %d checks passed", len(results))
    return EXIT_OK, results


def sweep_cells(axes):
    """Cartesian product of the axes as override dicts, axis order preserved."""
    names = list(axes)
    for name, values in axes.items():
        if not values:
            raise ConfigError(f"sweep axis '{name}' has no values")
    return [dict(zip(names, combo)) for combo in itertools.product(*(axes[n] for n in names))]


def _run_cell(text, overrides, cell_dir):
    config = parse_config(text, overrides)
    _, trajectory = cmd_simulate(config, cell_dir)
    final = trajectory.final().field
    row = {'max_abs': final.max_abs()}
    if trajectory.energies:
        row['energy_final'] = trajectory.energies[-1].total
        row['energy_drift'] = suite.energy_drift(trajectory)
    return row


def cmd_sweep(text, axes, out_dir, jobs=1, overrides=None):
    """One simulate run per cell of the sweep, then an aggregate sweep.csv.

    `overrides` apply to every cell; axis values win over them.
    """
    _prepare(out_dir)
    common = dict(overrides or {})
    base = parse_config(text, common)
    cells = [{**common, **cell} for cell in sweep_cells(axes)]
    names = [f'cell_{i:03d}' for i in range(len(cells))]
    dirs = [os.path.join(out_dir, name) for name in names]

    def identify(name, overrides, error):
        described = ', '.join(f'{k}={v}' for k, v in overrides.items())
        logger.error("Sweep %s (%s) aborted: %s", name, described, error)
        kind = NumericalError if isinstance(error, NumericalError) else ConfigError
        return kind(f"{name} ({described}): {error}")

    # reject bad cells before any run starts
    for name, cell in zip(names, cells):
        try:
            parse_config(text, cell)
        except ConfigError as e:
            raise identify(name, cell, e) from e
    started = time.perf_counter()

    rows = [None] * len(cells)
    if jobs <= 1:
        for i, overrides in enumerate(cells):
            try:
                rows[i] = _run_cell(text, overrides, dirs[i])
            except (ValueError, NumericalError) as e:
                raise identify(names[i], overrides, e) from e
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_cell, text, overrides, d) for overrides, d in zip(cells, dirs)]
            for i, future in enumerate(futures):
                try:
                    rows[i] = future.result()
                except (ValueError, NumericalError) as e:
                    raise identify(names[i], cells[i], e) from e

    columns = ['max_abs', 'energy_final', 'energy_drift']
    with open(os.path.join(out_dir, 'sweep.csv'), 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['cell', *axes, *columns])
        for name, overrides, row in zip(names, cells, rows):
            writer.writerow([name, *(overrides[a] for a in axes),
                             *(format_float(row[c]) if c in row else '' for c in columns)])
    write_metadata(out_dir, 'sweep', base, {'cells': len(cells), 'axes': {k: list(v) for k, v in axes.items()}},
                   {'wall_seconds': time.perf_counter() - started}, ['sweep.csv'])
    return EXIT_OK, rows


class RunService:
    """Keeps the JSON history of command invocations."""

    def __init__(self, app=None):
        self.app = app
        self.history = []
        if app is not None:
            self.init_app(app)

    def init_app(self, app):
        self.app = app
        self.history = self.load_history()

    def load_history(self):
        history_file = self.app.config['HISTORY_FILE']
        retention_days = self.app.config.get('HISTORY_RETENTION_DAYS', 30)
        if not os.path.exists(history_file):
            return []
        try:
            with open(history_file, 'r') as f:
                history = json.load(f)
        except (OSError, ValueError) as e:
            logger.warning("Ignoring unreadable history file %s: %s", history_file, e)
            return []
        if not isinstance(history, list):
            return []

        cutoff = utc_now() - timedelta(days=retention_days)
        kept = []
        for run in history:
            try:
                if parse_timestamp(run['started_at']) >= cutoff:
                    kept.append(run)
            except (KeyError, ValueError, TypeError):
                continue

        # Runs still open were interrupted; we don't know when they ended
        for run in kept:
            if run.get('ended_at') is None:
                run['ended_at'] = run['started_at']
                run['status'] = 'interrupted'
        return kept

    def save_history(self):
        with open(self.app.config['HISTORY_FILE'], 'w') as f:
            json.dump(self.history, f, indent=2)

    @contextmanager
    def record(self, command, config_path=None, out_dir=None):
        """Track one invocation; the yielded dict receives `exit_code`."""
        run = {
            'command': command,
            'config': config_path,
            'out': out_dir,
            'started_at': utc_now().isoformat(),
            'ended_at': None,
            'status': 'running',
            'exit_code': None,
        }
        self.history.insert(0, run)
        self.save_history()
        try:
            yield run
        finally:
            run['ended_at'] = utc_now().isoformat()
            code = run.get('exit_code')
            run['status'] = 'ok' if code == EXIT_OK else ('failed' if code is not None else 'error')
            self.save_history()

    def get_history(self):
        """Runs sorted newest-first by started_at, with duration computed."""
        runs = sorted(self.history, key=lambda r: r.get('started_at', ''), reverse=True)
        for run in runs:
            run['duration'] = format_duration(run['started_at'], run.get('ended_at'))
            run['started'] = format_datetime(run['started_at'])
        return runs
