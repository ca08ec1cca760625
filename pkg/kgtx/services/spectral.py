"""Closed-form linear solutions (F = 0) and the full-line Klein-Gordon oracle.

Conventions: Ff(w) = int f(x) exp(-i w x) dx and the inverse carries 1/2pi.
With those, the reflected and transmitted terms pair C_R(w) and T(w) with
Ff1(-w), and the three-term representation carries an overall -1/(2 pi c^2).
Both conventions are pinned by the t = 0 regression tests.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from kgtx.services.core import (BranchField, Snapshot, Spectrum, Trajectory, fourier_forward,
                                fourier_inverse, integrate, panel_rule)
from kgtx.services.dispersion import (dispersion_k, reflection_coeff, s_composite,
                                      transmission_coeff)
from kgtx.services.errors import QuadratureError, WindowError
from kgtx.services.profiles import Profile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadConfig:
    omega_max: float = 600.0
    n_per_panel: int = 20
    panel_width: float = 1.0
    chunk: int = 128
    # geometric refinement levels toward the branch points
    grading: int = 12
    # largest tail estimate accepted relative to the datum amplitude
    tail_tolerance: float = 1e-3


@dataclass(frozen=True)
class InitialDatum:
    """f1 on branch 1, optional f2 on branch 2; both supported away from the node."""
    f1: Profile
    f2: Profile | None = None

    def __post_init__(self):
        for name, profile in (('f1', self.f1), ('f2', self.f2)):
            if profile is not None and profile.support[0] <= 0:
                raise ValueError(f"{name} must be supported in (0, inf)")

    @property
    def support(self):
        return self.f1.support

    def peak(self, n=2001):
        lo, hi = self.f1.support
        return float(np.max(np.abs(self.f1(np.linspace(lo, hi, n)))))


def _as_positions(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("positions must be nonnegative")
    return x


def _check_tail(tail, datum, quad):
    scale = max(datum.peak(), 1e-300)
    if tail > quad.tail_tolerance * scale:
        raise QuadratureError(
            f"truncation at omega_max={quad.omega_max} leaves tail {tail:.3e}",
            omega=quad.omega_max)


class ThreeTermSolution:
    """u1 from the three-term real-frequency representation.

    The frequency integral runs over xi = sqrt(Omega^2 - a1)/c in
    [0, omega_max] with a panel break at xi = k/c (Omega = sqrt(a2)).
    """

    def __init__(self, datum, params, quad=None):
        self.datum = datum
        self.params = params
        self.quad = quad or QuadConfig()
        q = self.quad
        c = params.c
        self.rule = panel_rule([0.0, params.cutoff], q.omega_max, q.n_per_panel, q.panel_width, q.grading)
        xi = self.rule.nodes
        omega_sq = params.a1 + (c * xi) ** 2
        self.frequency = np.sqrt(omega_sq)
        k1 = np.asarray(dispersion_k(1, omega_sq, params))
        k2 = np.asarray(dispersion_k(2, omega_sq, params))
        self.k1 = k1
        # -1/(2 pi c^2) * 2 Omega/K1 * dOmega/dxi
        self.prefactor = -xi / (np.pi * k1)
        p1 = np.asarray(datum.f1.transform(-1j * k1))
        self.outgoing = p1
        returning = (k1 - k2) / (k1 + k2) * p1
        if datum.f2 is not None:
            returning = returning + 2.0 * k1 / (k1 + k2) * np.asarray(datum.f2.transform(-1j * k2))
        self.returning = returning

    def evaluate(self, t, x):
        x = _as_positions(x)
        flat = np.atleast_1d(x).ravel()
        base = self.prefactor * np.cos(self.frequency * t)
        out = np.empty(flat.size)
        tail = 0.0
        for start in range(0, flat.size, self.quad.chunk):
            xs = flat[start:start + self.quad.chunk]
            values = (base * self.outgoing)[:, None] * np.exp(np.outer(self.k1, xs))
            values += (base * self.returning)[:, None] * np.exp(-np.outer(self.k1, xs))
            result = integrate(self.rule, values.imag)
            out[start:start + self.quad.chunk] = result.value.real
            tail = max(tail, result.tail_estimate)
        _check_tail(tail, self.datum, self.quad)
        return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)


class TransmissionSolution:
    """u1 and u2 for data on branch 1 only, over omega in [-omega_max, omega_max]."""

    def __init__(self, datum, params, quad=None):
        if datum.f2 is not None:
            raise ValueError("the reflected/transmitted representation needs f2 = 0")
        self.datum = datum
        self.params = params
        self.quad = quad or QuadConfig()
        q = self.quad
        cut = params.cutoff
        self.rule = panel_rule([-q.omega_max, -cut, 0.0, cut], q.omega_max,
                               q.n_per_panel, q.panel_width, q.grading)
        w = self.rule.nodes
        self.frequency = np.sqrt(params.a1 + (params.c * w) ** 2)
        forward = np.asarray(datum.f1.transform(w))
        mirrored = np.asarray(datum.f1.transform(-w))
        self.omega = w
        self.branch1 = forward + np.asarray(reflection_coeff(w, params)) * mirrored
        self.branch2 = np.asarray(transmission_coeff(w, params)) * mirrored
        self.wavenumber2 = np.asarray(s_composite(w, params)) / params.c

    def _evaluate(self, t, x, amplitudes, wavenumbers):
        x = _as_positions(x)
        flat = np.atleast_1d(x).ravel()
        coef = amplitudes * np.cos(self.frequency * t) / (2.0 * np.pi)
        out = np.empty(flat.size)
        tail = 0.0
        for start in range(0, flat.size, self.quad.chunk):
            xs = flat[start:start + self.quad.chunk]
            values = coef[:, None] * np.exp(1j * np.outer(wavenumbers, xs))
            result = integrate(self.rule, values.real)
            out[start:start + self.quad.chunk] = result.value.real
            tail = max(tail, result.tail_estimate)
        _check_tail(tail, self.datum, self.quad)
        return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)

    def u1(self, t, x):
        return self._evaluate(t, x, self.branch1, self.omega)

    def u2(self, t, x):
        return self._evaluate(t, x, self.branch2, self.wavenumber2)

    def field(self, t, grid):
        """BranchField on `grid`; the node takes the branch-1 value."""
        x = grid.x
        u1 = self.u1(t, x)
        u2 = np.empty_like(u1)
        u2[0] = u1[0]
        u2[1:] = self.u2(t, x[1:])
        return BranchField(grid, u1, u2)


def u1_thm4(datum, t, x, params, quad=None):
    return ThreeTermSolution(datum, params, quad).evaluate(t, x)


def u1_thm5(datum, t, x, params, quad=None):
    return TransmissionSolution(datum, params, quad).u1(t, x)


def u2_thm5(datum, t, x, params, quad=None):
    return TransmissionSolution(datum, params, quad).u2(t, x)


def spectral_trajectory(datum, params, grid, times, quad=None):
    """Snapshots of the closed-form linear solution on a branch grid."""
    solution = TransmissionSolution(datum, params, quad)
    snapshots = []
    for t in times:
        logger.debug("Spectral snapshot at t=%.6g", t)
        snapshots.append(Snapshot(float(t), solution.field(t, grid)))
    return Trajectory(snapshots, metadata={'scheme': 'spectral-linear'})


def transmitted_decay_rate(datum, params, times, x, quad=None):
    """Fitted decay rate of the time-averaged |u2|^2 along branch 2.

    Returns the positive slope of -log(mean_t u2^2) against x.
    """
    solution = TransmissionSolution(datum, params, quad)
    x = _as_positions(x)
    power = np.mean([solution.u2(t, x) ** 2 for t in times], axis=0)
    fit = linregress(x, np.log(power))
    return -fit.slope


def _fullline_spectrum(values, x, t, c):
    values = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    peak = np.max(np.abs(values)) if values.size else 0.0
    if peak > 0:
        inside = np.nonzero(np.abs(values) > 1e-14 * peak)[0]
        lo, hi = x[inside[0]], x[inside[-1]]
        if lo - c * t <= x[0] or hi + c * t >= x[-1]:
            raise WindowError(f"support [{lo:.6g}, {hi:.6g}] comes within c*t of the window")
    return fourier_forward(values, x)


def kg_fullline_propagate(values, x, t, a, c):
    """F^-1[cos(sqrt(a + c^2 w^2) t) Ff] for samples on a uniform window."""
    spectrum = _fullline_spectrum(values, x, t, c)
    frequency = np.sqrt(a + (c * spectrum.omega) ** 2)
    evolved = Spectrum(spectrum.omega, spectrum.values * np.cos(frequency * t),
                       spectrum.x_start, spectrum.h)
    return fourier_inverse(evolved).real


def kg_fullline_energy(values, x, t, a, c):
    """1/2 (|u_t|^2 + c^2 |u_x|^2 + a |u|^2) at time t, derivatives taken spectrally."""
    spectrum = _fullline_spectrum(values, x, t, c)
    w = spectrum.omega
    frequency = np.sqrt(a + (c * w) ** 2)

    def invert(factor):
        return fourier_inverse(Spectrum(w, spectrum.values * factor,
                                        spectrum.x_start, spectrum.h)).real

    u = invert(np.cos(frequency * t))
    ut = invert(-frequency * np.sin(frequency * t))
    ux = invert(1j * w * np.cos(frequency * t))
    return 0.5 * spectrum.h * float(np.sum(ut ** 2 + c * c * ux ** 2 + a * u ** 2))
