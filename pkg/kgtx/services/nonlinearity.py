"""Nonlinearity catalog and the admissibility gate.

A nonlinearity is admissible when F(0) = 0 and its primitive
G(w) = int_0^w F is nonpositive; the energy then bounds the solution.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

logger = logging.getLogger(__name__)

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class NonlinearitySpec:
    name: str
    F: Callable
    Fprime: Callable
    G: Callable
    Fsecond: Optional[Callable] = None
    lam: float = 0.0
    repulsive: bool = True

    def quotient(self, v, p):
        """(G(v) - G(p))/(v - p), falling back to F at the midpoint when v ~ p."""
        v = np.asarray(v, dtype=float)
        p = np.asarray(p, dtype=float)
        diff = v - p
        close = np.abs(diff) <= 1e-7 * (1.0 + np.abs(v) + np.abs(p))
        safe = np.where(close, 1.0, diff)
        return np.where(close, self.F(0.5 * (v + p)), (self.G(v) - self.G(p)) / safe)

    def describe(self):
        return {'name': self.name, 'lam': self.lam, 'repulsive': self.repulsive}


def _zero(u):
    return np.zeros_like(np.asarray(u, dtype=float))


def _power(lam, sign, n):
    # F = sign * lam * u^n, G = sign * lam * u^(n+1)/(n+1)
    coef = sign * lam
    return dict(
        F=lambda u: coef * np.asarray(u, dtype=float) ** n,
        Fprime=lambda u: coef * n * np.asarray(u, dtype=float) ** (n - 1),
        Fsecond=lambda u: coef * n * (n - 1) * np.asarray(u, dtype=float) ** max(n - 2, 0),
        G=lambda u: coef * np.asarray(u, dtype=float) ** (n + 1) / (n + 1),
    )


def _saturating(lam):
    def F(u):
        u = np.asarray(u, dtype=float)
        return -lam * u ** 3 / (1.0 + u * u)

    def Fprime(u):
        u = np.asarray(u, dtype=float)
        return -lam * (3.0 * u * u + u ** 4) / (1.0 + u * u) ** 2

    def Fsecond(u):
        u = np.asarray(u, dtype=float)
        return -lam * (6.0 * u - 2.0 * u ** 3) / (1.0 + u * u) ** 3

    def G(u):
        u = np.asarray(u, dtype=float)
        return -0.5 * lam * (u * u - np.log1p(u * u))

    return dict(F=F, Fprime=Fprime, Fsecond=Fsecond, G=G)


def _constant(lam):
    return dict(
        F=lambda u: np.full_like(np.asarray(u, dtype=float), lam),
        Fprime=_zero,
        Fsecond=_zero,
        G=lambda u: lam * np.asarray(u, dtype=float),
    )


CATALOG = {
    'none': lambda lam: (dict(F=_zero, Fprime=_zero, Fsecond=_zero, G=_zero), True),
    'cubic': lambda lam: (_power(lam, -1.0, 3), True),
    'quintic': lambda lam: (_power(lam, -1.0, 5), True),
    'saturating': lambda lam: (_saturating(lam), True),
    'focusing': lambda lam: (_power(lam, 1.0, 3), False),
    'quadratic': lambda lam: (_power(lam, 1.0, 2), False),
    'constant': lambda lam: (_constant(lam), False),
}


def build_nonlinearity(name, lam=1.0):
    if name not in CATALOG:
        raise ValueError(f"unknown nonlinearity '{name}' (known: {', '.join(sorted(CATALOG))})")
    lam = float(lam)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    functions, repulsive = CATALOG[name](lam)
    return NonlinearitySpec(name=name, lam=0.0 if name == 'none' else lam,
                            repulsive=repulsive, **functions)


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    code: Optional[str] = None
    reason: Optional[str] = None


def validate_nonlinearity(spec, sample_range=(-4.0, 4.0), n=2001):
    """Check F(0) = 0, G' = F and G <= 0 on samples, in that order."""
    lo, hi = sample_range
    w = np.linspace(lo, hi, n)
    f = np.asarray(spec.F(w), dtype=float)
    g = np.asarray(spec.G(w), dtype=float)
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
        return Admissibility(False, 'non_finite', 'F or G is not finite on the sample range')

    f0 = float(np.asarray(spec.F(np.zeros(1)))[0])
    if abs(f0) > ZERO_TOL:
        return Admissibility(False, 'nonzero_at_origin', f'F(0) = {f0:.3g} must vanish')

    slope = np.gradient(g, w)[1:-1]
    mismatch = float(np.max(np.abs(slope - f[1:-1])))
    if mismatch > 1e-4 * (1.0 + float(np.max(np.abs(f)))):
        return Admissibility(False, 'inconsistent_primitive',
                             f'G is not a primitive of F (max |G\' - F| = {mismatch:.3g})')

    top = float(np.max(g))
    if top > ZERO_TOL:
        where = float(w[np.argmax(g)])
        return Admissibility(False, 'positive_primitive',
                             f'G({where:.3g}) = {top:.3g} > 0, the nonlinearity is not repulsive')
    return Admissibility(True)
