"""Grids, branch fields and the numerical primitives shared by every solver."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from kgtx.services.errors import QuadratureError, WindowError

logger = logging.getLogger(__name__)

# Argument window [CUT_ANGLE, CUT_ANGLE + 2pi) used for every square root in
# the package; both cuts of the composite root then point straight down.
CUT_ANGLE = -math.pi / 2


@dataclass(frozen=True)
class PhysicsParams:
    """Wave speed `c` and the two dispersion coefficients `a1 < a2`.

    `uniform=True` admits a1 == a2. Only the reduction oracles use it.
    """
    c: float
    a1: float
    a2: float
    uniform: bool = False

    def __post_init__(self):
        for name in ('c', 'a1', 'a2'):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.a1 <= 0:
            raise ValueError("a1 must be positive")
        if self.uniform:
            if self.a2 != self.a1:
                raise ValueError("uniform parameters need a1 == a2")
        elif self.a2 <= self.a1:
            raise ValueError("a2 must exceed a1")

    @classmethod
    def without_step(cls, c, a):
        return cls(c, a, a, uniform=True)

    @property
    def k(self):
        return math.sqrt(self.a2 - self.a1)

    @property
    def cutoff(self):
        """Frequency |omega| = k/c separating the tunneling and propagating bands."""
        return self.k / self.c

    def a(self, branch):
        if branch not in (1, 2):
            raise ValueError(f"branch must be 1 or 2, got {branch}")
        return self.a1 if branch == 1 else self.a2


@dataclass(frozen=True)
class BranchGrid:
    """Uniform grid x_i = i*h, i = 0..n-1, shared by both half-lines."""
    h: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0):
            raise ValueError("grid spacing must be positive")
        if self.n < 3:
            raise ValueError("a branch needs at least 3 points")

    @classmethod
    def covering(cls, h, length):
        """Smallest grid whose extent reaches `length`."""
        return cls(h, int(math.ceil(length / h - 1e-9)) + 1)

    @property
    def extent(self):
        return (self.n - 1) * self.h

    @property
    def x(self):
        return np.arange(self.n) * self.h

    @property
    def weights(self):
        """Trapezoid weights on one branch; the node carries half a cell."""
        w = np.full(self.n, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def global_coordinates(self):
        """X ascending from -L to L; branch 2 is mirrored onto X <= 0."""
        x = self.x
        return np.concatenate((-x[:0:-1], x))


def _frozen(values, n):
    arr = np.array(values, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"expected {n} samples, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BranchField:
    """Samples (u1, u2) on a BranchGrid with one shared node value."""
    grid: BranchGrid
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        u1 = _frozen(self.u1, self.grid.n)
        u2 = _frozen(self.u2, self.grid.n)
        if u1[0] != u2[0]:
            raise ValueError("branch values disagree at the node")
        object.__setattr__(self, 'u1', u1)
        object.__setattr__(self, 'u2', u2)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.n), np.zeros(grid.n))

    @classmethod
    def from_profiles(cls, grid, f1, f2=None):
        x = grid.x
        u1 = f1(x)
        u2 = f2(x) if f2 is not None else np.zeros(grid.n)
        if u1[0] != u2[0]:
            raise ValueError("initial profiles disagree at the node")
        return cls(grid, u1, u2)

    @classmethod
    def from_global(cls, grid, values):
        values = np.asarray(values, dtype=float)
        n = grid.n
        if values.shape != (2 * n - 1,):
            raise ValueError("global samples do not match the grid")
        return cls(grid, values[n - 1:], values[n - 1::-1])

    def to_global(self):
        """(X, u) ascending in the global coordinate."""
        return self.grid.global_coordinates(), np.concatenate((self.u2[:0:-1], self.u1))

    def max_abs(self):
        return float(max(np.max(np.abs(self.u1)), np.max(np.abs(self.u2))))

    def flux_residual(self):
        """Sum of the second-order one-sided node derivatives (discrete T1)."""
        h = self.grid.h
        u0 = self.u1[0]
        d1 = -3.0 * u0 + 4.0 * self.u1[1] - self.u1[2]
        d2 = -3.0 * u0 + 4.0 * self.u2[1] - self.u2[2]
        return float((d1 + d2) / (2.0 * h))


@dataclass(frozen=True)
class Snapshot:
    t: float
    field: BranchField


@dataclass
class Trajectory:
    """Snapshots in time order plus per-step energy records."""
    snapshots: list
    energies: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    # solver state after the last step, used for reversal runs
    final_state: object = None

    @property
    def times(self):
        return [s.t for s in self.snapshots]

    @property
    def grid(self):
        return self.snapshots[0].field.grid

    def final(self):
        return self.snapshots[-1]


@dataclass(frozen=True)
class ComplexSample:
    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise ValueError("complex sample must be finite")

    @classmethod
    def of(cls, z):
        z = complex(z)
        return cls(z.real, z.imag)

    def __complex__(self):
        return complex(self.re, self.im)

    def as_dict(self):
        return {'re': self.re, 'im': self.im}


def branch_sqrt(z, a=CUT_ANGLE):
    """Square root with the argument taken in [a, a + 2pi).

    Works elementwise on arrays; scalars come back as Python complex.
    """
    z = np.asarray(z, dtype=complex)
    arg = a + np.mod(np.angle(z) - a, 2.0 * np.pi)
    out = np.sqrt(np.abs(z)) * np.exp(0.5j * arg)
    if out.ndim == 0:
        return complex(out)
    return out


@dataclass(frozen=True)
class Spectrum:
    """Samples of Ff(omega) = int f(x) exp(-i omega x) dx in FFT order."""
    omega: np.ndarray
    values: np.ndarray
    x_start: float
    h: float


def _uniform_spacing(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need at least two ordered sample positions")
    h = (x[-1] - x[0]) / (x.size - 1)
    if h <= 0 or not np.allclose(np.diff(x), h, rtol=1e-9, atol=0.0):
        raise ValueError("sample positions must be uniform and increasing")
    return h


def check_window(values, edge_tol=1e-12):
    """Raise WindowError unless the samples vanish at both window edges."""
    values = np.asarray(values)
    peak = np.max(np.abs(values)) if values.size else 0.0
    if peak == 0.0:
        return
    edge = max(abs(values[0]), abs(values[-1]))
    if edge > edge_tol * peak:
        raise WindowError(
            f"samples reach the window edge (edge/peak = {edge / peak:.3e})")


def fourier_forward(values, x, edge_tol=1e-12):
    """Discrete approximation of the forward transform on a uniform window."""
    values = np.asarray(values)
    x = np.asarray(x, dtype=float)
    h = _uniform_spacing(x)
    check_window(values, edge_tol)
    omega = 2.0 * np.pi * np.fft.fftfreq(values.size, d=h)
    spec = h * np.exp(-1j * omega * x[0]) * np.fft.fft(values)
    return Spectrum(omega, spec, float(x[0]), h)


def fourier_inverse(spectrum):
    """Inverse with the 1/2pi convention; returns complex samples on the window."""
    phased = spectrum.values * np.exp(1j * spectrum.omega * spectrum.x_start)
    return np.fft.ifft(phased) / spectrum.h


@lru_cache(maxsize=32)
def legendre_rule(n):
    nodes, weights = leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@dataclass(frozen=True)
class PanelRule:
    """Composite Gauss-Legendre nodes; `last_panel` indexes the top panel."""
    nodes: np.ndarray
    weights: np.ndarray
    last_panel: slice
    upper: float


@dataclass(frozen=True)
class QuadratureResult:
    value: complex | np.ndarray
    tail_estimate: float
    n_nodes: int


def _graded(lo, hi, toward_lo, toward_hi, levels, ratio):
    """Sub-panels of [lo, hi] shrinking geometrically toward flagged ends."""
    if toward_lo and toward_hi:
        mid = 0.5 * (lo + hi)
        return _graded(lo, mid, True, False, levels, ratio) + _graded(mid, hi, False, True, levels, ratio)
    if not (toward_lo or toward_hi) or levels <= 0:
        return [(lo, hi)]
    span = hi - lo
    steps = span * ratio ** np.arange(levels, -1, -1)
    if toward_lo:
        points = np.concatenate(([lo], lo + steps))
    else:
        points = np.sort(np.concatenate((hi - steps, [hi])))
    return list(zip(points[:-1], points[1:]))


def panel_rule(breakpoints, omega_max, n_per_panel=16, max_width=1.0, grading=0, ratio=0.25):
    """Panels over [breakpoints[0], omega_max] split at every breakpoint.

    Panels wider than `max_width` are cut into equal pieces. With
    `grading > 0` the panels touching a breakpoint (other than the first)
    are refined geometrically toward it, which keeps square-root kinks at
    branch points from spoiling the rule.
    """
    breaks = [float(b) for b in breakpoints]
    if not breaks:
        raise ValueError("need at least one breakpoint")
    if any(b1 < b0 for b0, b1 in zip(breaks, breaks[1:])):
        raise ValueError("breakpoints must be sorted")
    if omega_max <= breaks[0]:
        raise ValueError("omega_max must lie above the first breakpoint")
    edges = sorted(set(b for b in breaks if b < omega_max) | {float(omega_max)})
    singular = set(b for b in breaks[1:] if b < omega_max)
    ref_nodes, ref_weights = legendre_rule(n_per_panel)
    nodes, weights = [], []
    for lo, hi in zip(edges, edges[1:]):
        pieces = max(1, int(math.ceil((hi - lo) / max_width))) if max_width else 1
        cuts = np.linspace(lo, hi, pieces + 1)
        cuts[0], cuts[-1] = lo, hi
        for j, (p0, p1) in enumerate(zip(cuts, cuts[1:])):
            toward_lo = j == 0 and lo in singular
            toward_hi = j == pieces - 1 and hi in singular
            for q0, q1 in _graded(p0, p1, toward_lo, toward_hi, grading, ratio):
                half = 0.5 * (q1 - q0)
                nodes.append(q0 + half * (ref_nodes + 1.0))
                weights.append(half * ref_weights)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    return PanelRule(nodes, weights, slice(nodes.size - n_per_panel, nodes.size), float(omega_max))


def integrate(rule, values):
    """Apply `rule` to integrand samples whose leading axis runs over nodes."""
    values = np.asarray(values)
    bad = ~np.isfinite(values)
    if bad.any():
        flat = bad.reshape(bad.shape[0], -1).any(axis=1)
        omega = float(rule.nodes[np.argmax(flat)])
        raise QuadratureError(f"non-finite integrand at omega={omega:.17g}", omega=omega)
    value = np.tensordot(rule.weights, values, axes=(0, 0))
    tail = float(np.max(np.abs(values[rule.last_panel]))) * abs(rule.upper) if values.size else 0.0
    if np.ndim(value) == 0:
        value = complex(value)
    return QuadratureResult(value, tail, int(rule.nodes.size))


def quad_panels(integrand, breakpoints, omega_max, n_per_panel=16, max_width=1.0, grading=0):
    """Composite quadrature of a vectorized integrand with a tail estimate.

    The tail estimate assumes the integrand decays at least like omega**-2
    beyond `omega_max`.
    """
    rule = panel_rule(breakpoints, omega_max, n_per_panel, max_width, grading)
    return integrate(rule, integrand(rule.nodes))
