"""Dispersion functions, the composite square root and the step coefficients.

Frequencies are scaled so that the two branch points sit at omega = +-k/c.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from kgtx.services.core import CUT_ANGLE, ComplexSample, branch_sqrt
from kgtx.services.errors import BranchCutError

logger = logging.getLogger(__name__)

COEFFICIENT_BOUND = 10.0


class Band(str, Enum):
    TUNNELING = 'tunneling'
    PROPAGATING = 'propagating'
    EDGE = 'edge'


@dataclass(frozen=True)
class CoefficientValue:
    omega: float
    value: complex
    band: Band

    def as_dict(self):
        return {'omega': self.omega, 'band': self.band.value, **ComplexSample.of(self.value).as_dict()}


def classify_band(omega, params):
    cutoff = params.cutoff
    w = abs(float(omega))
    if math.isclose(w, cutoff, rel_tol=1e-12, abs_tol=0.0):
        return Band.EDGE
    return Band.TUNNELING if w < cutoff else Band.PROPAGATING


def dispersion_k(j, omega_sq, params):
    """K_j(omega^2): real below a_j, i*sqrt((omega^2 - a_j)/c^2) above."""
    w2 = np.asarray(omega_sq, dtype=float)
    if np.any(w2 < 0):
        raise ValueError("omega^2 must be nonnegative")
    a = params.a(j)
    below = np.sqrt(np.clip(a - w2, 0.0, None)) / params.c
    above = np.sqrt(np.clip(w2 - a, 0.0, None)) / params.c
    out = np.where(w2 <= a, below + 0j, 1j * above)
    return complex(out) if out.ndim == 0 else out


def s_composite(omega, params):
    """sqrt(c^2 omega^2 - k^2) as a product of two roots cut straight down.

    Analytic off the cuts {+-k/c - iy, y > 0}; on the real line it equals
    +sqrt(..) right of k/c, i*sqrt(k^2 - c^2 omega^2) in the tunneling band
    and -sqrt(..) left of -k/c.
    """
    w = np.asarray(omega, dtype=complex)
    cw = params.c * w
    k = params.k
    on_cut = (w.imag < 0) & ((cw.real == k) | (cw.real == -k))
    if np.any(on_cut):
        bad = complex(np.atleast_1d(w)[np.atleast_1d(on_cut)][0])
        raise BranchCutError(f"omega={bad} lies on a branch cut")
    out = branch_sqrt(cw - k, CUT_ANGLE) * branch_sqrt(cw + k, CUT_ANGLE)
    return complex(out) if np.ndim(out) == 0 else out


def s_piecewise(omega, params):
    """Three-case real-line definition used to audit `s_composite`."""
    w = np.asarray(omega, dtype=float)
    c, k = params.c, params.k
    root = np.sqrt(np.abs(c * c * w * w - k * k))
    return np.where(np.abs(w) <= k / c, 1j * root, np.sign(w) * root + 0j)


def _coefficient_parts(omega, params):
    w = np.asarray(omega, dtype=complex)
    cw = params.c * w
    s = s_composite(w, params)
    den = cw + s
    if np.any(den == 0):
        raise ZeroDivisionError("c*omega + s vanishes; coefficients undefined")
    return cw, s, den


def reflection_coeff(omega, params):
    """C_R = (c omega - s)/(c omega + s); equals -1 at omega = 0."""
    cw, s, den = _coefficient_parts(omega, params)
    out = (cw - s) / den
    return complex(out) if np.ndim(out) == 0 else out


def transmission_coeff(omega, params):
    """T = 2 c omega/(c omega + s) = 1 + C_R."""
    cw, s, den = _coefficient_parts(omega, params)
    out = 2.0 * cw / den
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CoefficientTable:
    omega: np.ndarray
    reflection: np.ndarray
    transmission: np.ndarray

    def bands(self, params):
        return [classify_band(w, params) for w in self.omega]

    def rows(self):
        return np.column_stack((self.omega, self.reflection.real, self.reflection.imag,
                                self.transmission.real, self.transmission.imag))


def coefficient_table(params, omegas):
    omegas = np.asarray(omegas, dtype=float)
    return CoefficientTable(omegas, np.asarray(reflection_coeff(omegas, params)),
                            np.asarray(transmission_coeff(omegas, params)))


def coefficient_values(params, omegas):
    table = coefficient_table(params, omegas)
    bands = table.bands(params)
    return [(CoefficientValue(float(w), complex(r), b), CoefficientValue(float(w), complex(t), b))
            for w, r, t, b in zip(table.omega, table.reflection, table.transmission, bands)]


@dataclass(frozen=True)
class ReflectionPhase:
    omega: np.ndarray
    phase: np.ndarray
    delay: np.ndarray


def reflection_phase(params, omegas):
    """Unwrapped arg C_R and -d(arg C_R)/d omega on a sorted real grid."""
    omegas = np.asarray(omegas, dtype=float)
    if omegas.size < 2 or np.any(np.diff(omegas) <= 0):
        raise ValueError("need an increasing frequency grid")
    phase = np.unwrap(np.angle(reflection_coeff(omegas, params)))
    return ReflectionPhase(omegas, phase, -np.gradient(phase, omegas))


def cauchy_riemann_residual(params, samples, step=1e-4):
    """max |ds/dy - i ds/dx| over `samples` by centred differences."""
    z = np.asarray(samples, dtype=complex)
    dx = (s_composite(z + step, params) - s_composite(z - step, params)) / (2 * step)
    dy = (s_composite(z + 1j * step, params) - s_composite(z - 1j * step, params)) / (2 * step)
    return float(np.max(np.abs(dy - 1j * dx)))


@dataclass
class AsymptoteReport:
    passed: bool
    bound: float
    max_modulus: float
    violations: list = field(default_factory=list)
    real_axis_monotone: bool = True
    real_axis_reflection: float = 0.0
    real_axis_transmission_error: float = 0.0
    angle_limits: dict = field(default_factory=dict)


def asymptote_check(params, radii, angles, bound=COEFFICIENT_BOUND):
    """Boundedness on upper half-plane arcs plus the real-axis limits.

    `angle_limits` records T at the largest radius for each angle; no limit
    value is asserted off the real axis.
    """
    radii = np.asarray(radii, dtype=float)
    angles = np.asarray(angles, dtype=float)
    if radii.size == 0 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and increasing")
    if np.any(angles <= 0) or np.any(angles >= np.pi):
        raise ValueError("angles must lie in (0, pi)")

    z = radii[:, None] * np.exp(1j * angles[None, :])
    cr = np.abs(reflection_coeff(z, params))
    tr = np.abs(transmission_coeff(z, params))
    worst = np.maximum(cr, tr)
    violations = [(float(radii[i]), float(angles[j]), float(cr[i, j]), float(tr[i, j]))
                  for i, j in zip(*np.nonzero(worst > bound))]

    cutoff = params.cutoff
    real_r = np.geomspace(10.0 * cutoff, 1e3 * cutoff, 64)
    real_r = np.union1d(real_r, radii[radii > 10.0 * cutoff])
    real_cr = np.abs(reflection_coeff(real_r, params))
    monotone = bool(np.all(np.diff(real_cr) <= 0.0))
    top = real_r[-1]
    expected = params.k ** 2 / (4.0 * params.c ** 2 * top ** 2)
    t_error = abs(transmission_coeff(top, params) - 1.0)
    limits_ok = real_cr[-1] <= 2.0 * expected and t_error <= 2.0 * expected

    limits = {float(theta): complex(transmission_coeff(radii[-1] * np.exp(1j * theta), params))
              for theta in angles}
    passed = not violations and monotone and limits_ok
    report = AsymptoteReport(passed, bound, float(worst.max()), violations, monotone,
                             float(real_cr[-1]), float(t_error), limits)
    if not passed:
        logger.warning("Coefficient asymptotics failed: %d bound violations, monotone=%s",
                       len(violations), monotone)
    return report
