"""Finite-difference solver for the nonlinear transmission problem.

Both branches share the grid x_i = i*h. The node value is the same on
both sides (continuity) and the flux condition closes the system at the
node. Two time discretizations are available: explicit leapfrog and the
energy-conserving Strauss-Vazquez variant.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import newton

from kgtx.services.core import BranchField, Snapshot, Trajectory
from kgtx.services.errors import (AdmissibilityError, CFLViolation, InstabilityError,
                                  NewtonDivergence)
from kgtx.services.nonlinearity import validate_nonlinearity
from kgtx.services.spectral import InitialDatum

logger = logging.getLogger(__name__)

CFL_MAX = 0.9
AMPLITUDE_FACTOR = 10.0
NEWTON_TOL = 1e-12
NEWTON_MAXITER = 50


class Scheme(str, Enum):
    LEAPFROG = 'leapfrog'
    CONSERVING = 'conserving'


@dataclass(frozen=True)
class SolverState:
    """Leapfrog pair (u^n, u^{n-1}) at time t = t_n."""
    t: float
    current: BranchField
    previous: BranchField
    dt: float
    scheme: Scheme = Scheme.LEAPFROG
    step_index: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        if self.current.grid != self.previous.grid:
            raise ValueError("leapfrog pair lives on two different grids")
        object.__setattr__(self, 'scheme', Scheme(self.scheme))

    @property
    def grid(self):
        return self.current.grid

    def reversed(self):
        """Swap the pair; stepping then runs the same scheme backwards in time."""
        return SolverState(self.t, self.previous, self.current, self.dt, self.scheme, self.step_index)


def node_value(u1_interior, u2_interior):
    """Shared node value from the summed one-sided flux condition."""
    u1 = np.asarray(u1_interior, dtype=float)
    u2 = np.asarray(u2_interior, dtype=float)
    if u1.size < 2 or u2.size < 2:
        raise ValueError("node_value needs two interior samples per branch")
    return float((4.0 * (u1[0] + u2[0]) - (u1[1] + u2[1])) / 6.0)


def check_cfl(params, dt, h, cfl_max=CFL_MAX, step=None):
    courant = params.c * dt / h
    if courant > cfl_max:
        raise CFLViolation(f"Courant number {courant:.6g} exceeds {cfl_max:.6g}", step=step)
    return courant


def _laplacian(u, h):
    return (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (h * h)


def _node_laplacian(field):
    h = field.grid.h
    return (field.u1[1] + field.u2[1] - 2.0 * field.u1[0]) / (h * h)


def _acceleration(field, spec, params):
    """c^2 u_xx - a_k u + F(u) on the interior of each branch, zero elsewhere."""
    h = field.grid.h
    c2 = params.c ** 2
    out = []
    for branch, u in ((1, field.u1), (2, field.u2)):
        acc = np.zeros_like(u)
        inner = u[1:-1]
        acc[1:-1] = c2 * _laplacian(u, h) - params.a(branch) * inner + spec.F(inner)
        out.append(acc)
    return out


def _node_acceleration(field, spec, params):
    u0 = field.u1[0]
    mean_a = 0.5 * (params.a1 + params.a2)
    return float(params.c ** 2 * _node_laplacian(field) - mean_a * u0 + spec.F(np.array([u0]))[0])


def start(field, spec, params, dt, scheme=Scheme.LEAPFROG, cfl_max=CFL_MAX):
    """Second-order Taylor start from zero initial velocity."""
    scheme = Scheme(scheme)
    check_cfl(params, dt, field.grid.h, cfl_max, step=1)
    acc1, acc2 = _acceleration(field, spec, params)
    u1 = field.u1 + 0.5 * dt * dt * acc1
    u2 = field.u2 + 0.5 * dt * dt * acc2
    u1[-1] = u2[-1] = 0.0
    if scheme is Scheme.LEAPFROG:
        u1[0] = u2[0] = node_value(u1[1:3], u2[1:3])
    else:
        u1[0] = u2[0] = field.u1[0] + 0.5 * dt * dt * _node_acceleration(field, spec, params)
    new = BranchField(field.grid, u1, u2)
    _guard(new, 1)
    return SolverState(dt, new, field, dt, scheme, 1)


def _guard(field, step, limit=None):
    if not (np.all(np.isfinite(field.u1)) and np.all(np.isfinite(field.u2))):
        raise InstabilityError("field became non-finite", step=step)
    if limit is not None and field.max_abs() > limit:
        raise InstabilityError(
            f"max |u| = {field.max_abs():.6g} exceeds the amplitude guard {limit:.6g}", step=step)


def _leapfrog_update(state, spec, params):
    cur, prev, dt = state.current, state.previous, state.dt
    acc1, acc2 = _acceleration(cur, spec, params)
    u1 = 2.0 * cur.u1 - prev.u1 + dt * dt * acc1
    u2 = 2.0 * cur.u2 - prev.u2 + dt * dt * acc2
    u1[-1] = u2[-1] = 0.0
    u1[0] = u2[0] = node_value(u1[1:3], u2[1:3])
    return u1, u2


def _conserving_update(state, spec, params, step):
    """Implicit update with a_k u - F(u) replaced by difference quotients of V."""
    cur, prev, dt = state.current, state.previous, state.dt
    h = cur.grid.h
    c2 = params.c ** 2
    m = cur.grid.n - 2
    u = np.concatenate((cur.u1[1:-1], cur.u2[1:-1], cur.u1[:1]))
    p = np.concatenate((prev.u1[1:-1], prev.u2[1:-1], prev.u1[:1]))
    a = np.concatenate((np.full(m, params.a1), np.full(m, params.a2),
                        [0.5 * (params.a1 + params.a2)]))
    lap = np.concatenate((c2 * _laplacian(cur.u1, h), c2 * _laplacian(cur.u2, h),
                          [c2 * _node_laplacian(cur)]))
    inv_dt2 = 1.0 / (dt * dt)

    def residual(v):
        return (v - 2.0 * u + p) * inv_dt2 - lap + 0.5 * a * (v + p) - spec.quotient(v, p)

    def slope(v):
        return inv_dt2 + 0.5 * a - 0.5 * spec.Fprime(0.5 * (v + p))

    guess = 2.0 * u - p + dt * dt * (lap - a * u + spec.F(u))
    try:
        result = newton(residual, guess, fprime=slope, tol=NEWTON_TOL, maxiter=NEWTON_MAXITER,
                        full_output=True)
    except RuntimeError as e:
        # array mode raises when no point converges
        raise NewtonDivergence(f"Newton iteration failed: {e}", step=step) from e
    converged = np.asarray(result.converged)
    if not converged.all():
        raise NewtonDivergence(f"{int((~converged).sum())} points did not converge", step=step)
    root = np.asarray(result.root)
    u1 = np.zeros(cur.grid.n)
    u2 = np.zeros(cur.grid.n)
    u1[1:-1] = root[:m]
    u2[1:-1] = root[m:2 * m]
    u1[0] = u2[0] = root[-1]
    return u1, u2


def step(state, spec, params, cfl_max=CFL_MAX, amplitude_limit=None):
    """Advance the leapfrog pair by one time step."""
    index = state.step_index + 1
    check_cfl(params, state.dt, state.grid.h, cfl_max, step=index)
    if state.scheme is Scheme.LEAPFROG:
        u1, u2 = _leapfrog_update(state, spec, params)
    else:
        u1, u2 = _conserving_update(state, spec, params, index)
    new = BranchField(state.grid, u1, u2)
    _guard(new, index, amplitude_limit)
    return SolverState(state.t + state.dt, new, state.current, state.dt, state.scheme, index)


@dataclass(frozen=True)
class EnergyReport:
    """Energy parts per branch, (branch 1, branch 2)."""
    t: float
    kinetic: tuple
    elastic: tuple
    dispersive: tuple
    nonlinear: tuple

    @property
    def parts(self):
        return {name: float(sum(getattr(self, name)))
                for name in ('kinetic', 'elastic', 'dispersive', 'nonlinear')}

    @property
    def total(self):
        return float(sum(self.parts.values()))

    @property
    def norm_sq(self):
        """||phi||^2 = (Au, u) + ||u_t||^2."""
        parts = self.parts
        return 2.0 * (parts['kinetic'] + parts['elastic'] + parts['dispersive'])

    def as_row(self):
        parts = self.parts
        return (self.t, self.total, parts['kinetic'], parts['elastic'],
                parts['dispersive'], parts['nonlinear'])


def _branch_energy(u, p, w, h, dt, c, a, spec):
    kinetic = 0.5 * float(np.sum(w * ((u - p) / dt) ** 2)) if dt else 0.0
    elastic = 0.5 * c * c * float(np.sum(np.diff(u) * np.diff(p))) / h
    dispersive = 0.5 * a * float(np.sum(w * 0.5 * (u * u + p * p)))
    nonlinear = -float(np.sum(w * 0.5 * (spec.G(u) + spec.G(p))))
    return kinetic, elastic, dispersive, nonlinear


def _energy_of_pair(t, cur, prev, dt, spec, params):
    grid = cur.grid
    w = grid.weights
    parts = [_branch_energy(u, p, w, grid.h, dt, params.c, params.a(branch), spec)
             for branch, u, p in ((1, cur.u1, prev.u1), (2, cur.u2, prev.u2))]
    return EnergyReport(t, *zip(*parts))


def energy(state, spec, params):
    """Discrete energy centred at the half step t_n - dt/2.

    This is the quantity the conserving scheme keeps constant to roundoff.
    """
    return _energy_of_pair(state.t - 0.5 * state.dt, state.current, state.previous,
                           state.dt, spec, params)


def field_energy(field, spec, params, t=0.0):
    """Energy of a field at rest (no kinetic part)."""
    return _energy_of_pair(t, field, field, 0.0, spec, params)


def _step_count(T, dt):
    steps = int(round(T / dt))
    if steps < 1 or abs(steps * dt - T) > 1e-9 * T:
        steps = max(1, int(math.ceil(T / dt)))
    return steps, T / steps


def run(datum, spec, params, grid, T, dt=None, scheme=Scheme.LEAPFROG, snapshot_times=None,
        monitor=None, allow_inadmissible=False, cfl_max=CFL_MAX,
        amplitude_factor=AMPLITUDE_FACTOR):
    """Integrate from the datum (velocity zero) up to T.

    `datum` is an InitialDatum or a BranchField. `dt` is adjusted down so
    that T is a whole number of steps. `monitor(state, report)` is called
    after every step.
    """
    scheme = Scheme(scheme)
    verdict = validate_nonlinearity(spec)
    if not verdict.ok and not allow_inadmissible:
        raise AdmissibilityError(f"nonlinearity '{spec.name}' rejected: {verdict.reason}")
    if not verdict.ok:
        logger.warning("Running inadmissible nonlinearity '%s' (%s)", spec.name, verdict.code)

    if isinstance(datum, InitialDatum):
        hi = max(p.support[1] for p in (datum.f1, datum.f2) if p is not None)
        field = BranchField.from_profiles(grid, datum.f1, datum.f2)
        required = hi + params.c * T + 10.0 * grid.h
        if grid.extent < required * (1.0 - 1e-12):
            raise ValueError(f"grid extent {grid.extent:.6g} must exceed {required:.6g}")
    else:
        field = datum

    if T <= 0:
        raise ValueError("T must be positive")
    dt = 0.5 * grid.h / params.c if dt is None else float(dt)
    steps, dt = _step_count(T, dt)
    times = [0.0, T] if snapshot_times is None else sorted(float(t) for t in snapshot_times)
    wanted = {}
    for t in times:
        if t < 0 or t > T * (1.0 + 1e-12):
            raise ValueError(f"snapshot time {t} outside [0, {T}]")
        wanted.setdefault(int(round(t / dt)), t)

    peak = field.max_abs()
    limit = amplitude_factor * peak if peak > 0 else None
    logger.info("Running %s scheme: %d steps, dt=%.6g, h=%.6g, F=%s",
                scheme.value, steps, dt, grid.h, spec.name)

    snapshots = []
    if 0 in wanted:
        snapshots.append(Snapshot(0.0, field))
    state = start(field, spec, params, dt, scheme, cfl_max)
    if limit is not None:
        _guard(state.current, 1, limit)
    energies = [energy(state, spec, params)]
    if monitor:
        monitor(state, energies[-1])
    if 1 in wanted:
        snapshots.append(Snapshot(dt, state.current))
    for n in range(2, steps + 1):
        try:
            state = step(state, spec, params, cfl_max, limit)
        except Exception:
            logger.error("Solver aborted at step %d of %d", n, steps)
            raise
        report = energy(state, spec, params)
        energies.append(report)
        if monitor:
            monitor(state, report)
        if n in wanted:
            logger.debug("Snapshot at t=%.6g", n * dt)
            snapshots.append(Snapshot(n * dt, state.current))

    metadata = {
        'scheme': scheme.value,
        'dt': dt,
        'h': grid.h,
        'steps': steps,
        'nonlinearity': spec.describe(),
        'override': bool(allow_inadmissible and not verdict.ok),
        'E0': field_energy(field, spec, params).total,
    }
    logger.info("Run finished at t=%.6g, E=%.12g", steps * dt, energies[-1].total)
    return Trajectory(snapshots, energies, metadata, final_state=state)


def reverse(state, spec, params, steps, cfl_max=CFL_MAX):
    """Step the swapped pair `steps` times; with F odd this retraces the run."""
    back = state.reversed()
    for _ in range(steps):
        back = step(back, spec, params, cfl_max)
    return back.current
