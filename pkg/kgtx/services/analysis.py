"""Verification instruments: supports, light cones, Lipschitz estimates, growth bounds."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import linregress

from kgtx.services.profiles import BumpProfile

logger = logging.getLogger(__name__)

LIPSCHITZ_CONST = math.sqrt(2.0)


@dataclass(frozen=True)
class SupportReport:
    t: float
    interval: tuple | None
    eps_rel: float
    max_amplitude: float
    tail_mass: float

    @property
    def empty(self):
        return self.interval is None


def _global(field_or_samples):
    if hasattr(field_or_samples, 'to_global'):
        return field_or_samples.to_global()
    x, u = field_or_samples
    return np.asarray(x, dtype=float), np.asarray(u, dtype=float)


def support_interval(field, eps_rel=1e-8, t=0.0):
    """Smallest grid-aligned interval holding every |u| > eps_rel * max|u|.

    `field` is a BranchField or an (X, u) pair in the global coordinate.
    The zero field has an empty support (interval None).
    """
    if not 0 < eps_rel < 1:
        raise ValueError("eps_rel must lie in (0, 1)")
    x, u = _global(field)
    magnitude = np.abs(u)
    peak = float(magnitude.max()) if magnitude.size else 0.0
    if peak == 0.0:
        return SupportReport(t, None, eps_rel, 0.0, 0.0)
    above = np.nonzero(magnitude > eps_rel * peak)[0]
    lo, hi = above[0], above[-1]
    outside = np.ones(u.size, dtype=bool)
    outside[lo:hi + 1] = False
    h = float(np.min(np.diff(x))) if x.size > 1 else 0.0
    return SupportReport(t, (float(x[lo]), float(x[hi])), eps_rel, peak,
                         float(h * magnitude[outside].sum()))


def leapfrog_front_spread(c, h, dt, t):
    """How far the explicit scheme's dispersive precursor runs ahead of X = ct."""
    courant = c * dt / h
    return 8.0 * (c * t * max(1.0 - courant ** 2, 0.0) * h * h / 8.0) ** (1.0 / 3.0)


@dataclass
class CausalityReport:
    passed: bool
    delta: float
    entries: list = field(default_factory=list)
    speed: float = 0.0
    speed_limit: float = math.inf


def _spread_for(trajectory, params):
    meta = trajectory.metadata
    if meta.get('scheme') in ('leapfrog', 'conserving'):
        h, dt = meta['h'], meta['dt']
        return lambda t: leapfrog_front_spread(params.c, h, dt, t)
    return lambda t: 0.0


def causality_check(trajectory, sigma, params, eps_rel=1e-8, delta=None, spread=None):
    """Check every snapshot's support against the cone around `sigma`.

    `sigma` is the initial support interval in the global coordinate.
    `spread(t)` widens the cone for discretization precursors; by default it
    follows the trajectory's scheme (zero for closed-form trajectories).
    """
    if not trajectory.snapshots:
        raise ValueError("empty trajectory")
    h = trajectory.grid.h
    delta = 2.0 * h if delta is None else float(delta)
    if delta < 2.0 * h * (1.0 - 1e-12):
        raise ValueError("the cone margin must be at least 2h")
    spread = spread or _spread_for(trajectory, params)
    c = params.c
    lo_sigma, hi_sigma = sigma

    entries = []
    edges = []
    for snap in trajectory.snapshots:
        t = snap.t
        margin = delta + spread(t)
        cone = (lo_sigma - c * t - margin, hi_sigma + c * t + margin)
        report = support_interval(snap.field, eps_rel, t)
        x, u = snap.field.to_global()
        outside = (x < cone[0]) | (x > cone[1])
        leak = float(np.max(np.abs(u[outside]))) if outside.any() else 0.0
        if report.empty:
            excess, ok = 0.0, True
        else:
            lo, hi = report.interval
            excess = max(cone[0] - lo, hi - cone[1], 0.0)
            ok = excess == 0.0
            edges.append((t, lo, hi))
        entries.append({'t': t, 'cone': cone, 'support': report.interval, 'excess': excess,
                        'outside_amplitude': leak, 'max_amplitude': report.max_amplitude,
                        'passed': ok})

    times = [e['t'] for e in entries]
    horizon = max(times)
    speed, limit = 0.0, math.inf
    if len(edges) >= 2 and horizon > 0:
        t_e = np.array([e[0] for e in edges])
        right = linregress(t_e, np.array([e[2] for e in edges])).slope
        left = -linregress(t_e, np.array([e[1] for e in edges])).slope
        speed = float(max(right, left))
        chord = (spread(t_e.max()) - spread(t_e.min())) / (t_e.max() - t_e.min())
        limit = c * (1.0 + 2.0 * h / (c * horizon)) + chord
    passed = all(e['passed'] for e in entries) and speed <= limit
    if not passed:
        worst = max(e['excess'] for e in entries)
        logger.warning("Causality check failed: worst excess %.3g, front speed %.6g (limit %.6g)",
                       worst, speed, limit)
    return CausalityReport(passed, delta, entries, speed, limit)


def cone_leak(trajectory, sigma, params, delta=None):
    """Largest |u| outside sigma ± ct ± delta, relative to each snapshot's max |u|."""
    h = trajectory.grid.h
    delta = 2.0 * h if delta is None else float(delta)
    worst = 0.0
    for snap in trajectory.snapshots:
        x, u = snap.field.to_global()
        peak = float(np.max(np.abs(u)))
        if peak == 0.0:
            continue
        reach = params.c * snap.t + delta
        outside = (x < sigma[0] - reach) | (x > sigma[1] + reach)
        if outside.any():
            worst = max(worst, float(np.max(np.abs(u[outside]))) / peak)
    return worst


@dataclass
class SupportPreservationReport:
    passed: bool
    worst: float
    entries: list = field(default_factory=list)


def nonlinear_support_check(trajectory, spec, eps_rel=1e-8):
    """F(u) must stay below F's size at the threshold wherever u is below it."""
    entries = []
    worst = 0.0
    for snap in trajectory.snapshots:
        _, u = snap.field.to_global()
        peak = float(np.max(np.abs(u)))
        threshold = eps_rel * peak
        quiet = np.abs(u) <= threshold
        level = float(np.max(np.abs(spec.F(np.linspace(-threshold, threshold, 101)))))
        found = float(np.max(np.abs(spec.F(u[quiet])))) if quiet.any() else 0.0
        excess = found - level * (1.0 + 1e-9)
        worst = max(worst, excess)
        entries.append({'t': snap.t, 'bound': level, 'found': found, 'passed': excess <= 0.0})
    return SupportPreservationReport(all(e['passed'] for e in entries), worst, entries)


def sobolev_norm(values, h, order=1):
    """Discrete H^order norm: centred differences and trapezoid quadrature."""
    values = np.asarray(values, dtype=float)
    total = 0.0
    deriv = values
    for j in range(order + 1):
        if j:
            deriv = np.gradient(deriv, h)
        total += trapezoid(deriv ** 2, dx=h)
    return math.sqrt(total)


def _sup_abs(func, bound, n=2001):
    y = np.linspace(-bound, bound, n)
    values = np.abs(np.asarray(func(y), dtype=float))
    if not np.all(np.isfinite(values)):
        raise ValueError(f"non-finite samples while bounding over |y| <= {bound:.6g}")
    return float(values.max())


@dataclass(frozen=True)
class LipschitzReport:
    lhs: float
    distance: float
    M: float
    M_prime: float
    const: float
    passed: bool
    l2_lhs: float
    l2_rhs: float
    l2_passed: bool

    @property
    def rhs(self):
        return self.const * (self.M + self.M_prime) * self.distance

    @property
    def ratio(self):
        return self.lhs / self.distance if self.distance else 0.0


def lipschitz_probe(spec, f, g, x):
    """H^2 -> H^1 Lipschitz estimate of u -> F(u) for one pair (f, g).

    `f` and `g` are profiles or samples on the uniform grid `x`.
    """
    x = np.asarray(x, dtype=float)
    h = float(x[1] - x[0])
    fv = np.asarray(f(x) if callable(f) else f, dtype=float)
    gv = np.asarray(g(x) if callable(g) else g, dtype=float)
    f_inf, g_inf = float(np.max(np.abs(fv))), float(np.max(np.abs(gv)))
    both = max(f_inf, g_inf)

    second = spec.Fsecond
    if second is None:
        second = lambda y: np.gradient(spec.Fprime(y), y)  # noqa: E731
    M = _sup_abs(spec.Fprime, both)
    g_slope = math.sqrt(trapezoid(np.gradient(gv, h) ** 2, dx=h))
    M_prime = math.sqrt(2.0) * max(_sup_abs(spec.Fprime, f_inf), g_slope * _sup_abs(second, both))

    image = spec.F(fv) - spec.F(gv)
    lhs = sobolev_norm(image, h, 1)
    distance = sobolev_norm(fv - gv, h, 2)
    rhs = LIPSCHITZ_CONST * (M + M_prime) * distance
    l2_lhs = math.sqrt(trapezoid(image ** 2, dx=h))
    l2_rhs = M * math.sqrt(trapezoid((fv - gv) ** 2, dx=h))
    return LipschitzReport(lhs, distance, M, M_prime, LIPSCHITZ_CONST,
                           lhs <= rhs * (1.0 + 1e-12),
                           l2_lhs, l2_rhs, l2_lhs <= l2_rhs * (1.0 + 1e-9) + 1e-15)


def random_bump_pairs(rng, n_pairs):
    """Independent bump pairs with amplitudes, centres and widths drawn from `rng`."""
    def draw():
        return BumpProfile(amplitude=float(rng.uniform(-2.0, 2.0)),
                           center=float(rng.uniform(1.0, 3.0)),
                           width=float(rng.uniform(0.2, 0.8)))
    return [(draw(), draw()) for _ in range(n_pairs)]


@dataclass
class LipschitzAudit:
    passed: int
    total: int
    worst_margin: float
    reports: list = field(default_factory=list)

    @property
    def all_passed(self):
        return self.passed == self.total


def lipschitz_audit(spec, rng, n_pairs=100, x=None):
    x = np.linspace(0.0, 4.0, 2049) if x is None else np.asarray(x, dtype=float)
    reports = [lipschitz_probe(spec, f, g, x) for f, g in random_bump_pairs(rng, n_pairs)]
    passed = sum(r.passed and r.l2_passed for r in reports)
    worst = max((r.lhs / r.rhs for r in reports if r.rhs > 0), default=0.0)
    logger.info("Lipschitz audit: %d/%d pairs pass, worst lhs/rhs %.3g", passed, n_pairs, worst)
    return LipschitzAudit(passed, n_pairs, worst, reports)


@dataclass(frozen=True)
class GrowthReport:
    radius: float
    fitted_type: float
    C: float
    tolerance: float
    passed: bool
    real_axis_bound: float
    real_axis_max: float


def pw_samples(radius, n=64):
    """Points of the closed upper half-plane: real axis, imaginary axis and two rays."""
    r = np.linspace(0.0, 300.0 / radius, n)
    return np.concatenate((r, -r[1:], 1j * r[1:], r[1:] * np.exp(0.25j * np.pi),
                           r[1:] * np.exp(0.75j * np.pi)))


def pw_bound_check(profile, samples=None, tolerance=0.1):
    """Exponential type of the transform of a profile supported in (0, R).

    The type is the slope of log|Ff(i eta)| for large eta; it must equal R
    within `tolerance`. C is the smallest constant with |Ff(z)| <= C e^{R|z|}
    over the samples.
    """
    lo, radius = profile.support
    if lo < 0 or radius <= 0:
        raise ValueError("profile must be supported in (0, R)")
    samples = pw_samples(radius) if samples is None else np.asarray(samples, dtype=complex)
    if np.any(samples.imag < 0):
        raise ValueError("samples must lie in the closed upper half-plane")
    values = np.abs(profile.transform_by_quadrature(samples))
    C = float(np.max(values * np.exp(-radius * np.abs(samples))))

    eta = np.linspace(150.0 / radius, 300.0 / radius, 32)
    growth = np.abs(profile.transform_by_quadrature(1j * eta))
    fitted = float(linregress(eta, np.log(growth)).slope)

    x = np.linspace(lo, radius, 4097)
    l1 = trapezoid(np.abs(profile(x)), x)
    real = samples[samples.imag == 0]
    real_max = float(np.max(np.abs(profile.transform_by_quadrature(real)))) if real.size else 0.0
    passed = abs(fitted - radius) <= tolerance * radius and real_max <= l1 * (1.0 + 1e-6)
    return GrowthReport(radius, fitted, C, tolerance, passed, float(l1), real_max)
