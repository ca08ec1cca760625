"""Compactly supported initial profiles and their Fourier-Laplace transforms.

Every profile is callable on position arrays and exposes `transform(z)`,
the integral of f(x) exp(-i z x) for complex z. The same method serves
real frequencies, the decaying kernels exp(-K u) of the three-term
representation and imaginary-axis growth probes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from kgtx.services.core import legendre_rule

# (1 - s^2)^3: C2 across s = +-1, zero with two derivatives at both ends.
_SHAPE = Polynomial([1.0, 0.0, -1.0]) ** 3
_SHAPE_DERIVS = [_SHAPE.deriv(m) for m in range(7)]
_CLOSED_FORM_MIN = 4.0
_Z_CHUNK = 256


class Profile:
    """Base class. Subclasses set `support` and implement `__call__`."""
    support = (0.0, 0.0)

    def __call__(self, x):
        raise NotImplementedError

    def derivative(self, x, order=1):
        raise NotImplementedError

    def transform(self, z):
        return self.transform_by_quadrature(z)

    def transform_by_quadrature(self, z, n_per_panel=16):
        """Composite Gauss-Legendre over the support, sized to the oscillation."""
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        lo, hi = self.support
        span = hi - lo
        if span <= 0 or flat.size == 0:
            return np.zeros_like(z)
        scale = span * (np.max(np.abs(flat.real)) / 3.0 + np.max(np.abs(flat.imag)) / 2.0)
        panels = max(8, int(math.ceil(scale)))
        ref_nodes, ref_weights = legendre_rule(n_per_panel)
        cuts = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(cuts)
        nodes = (cuts[:-1, None] + half[:, None] * (ref_nodes[None, :] + 1.0)).ravel()
        weights = (half[:, None] * ref_weights[None, :]).ravel()
        samples = weights * self(nodes)
        out = np.empty(flat.size, dtype=complex)
        for start in range(0, flat.size, _Z_CHUNK):
            block = flat[start:start + _Z_CHUNK]
            out[start:start + _Z_CHUNK] = np.exp(-1j * np.outer(block, nodes)) @ samples
        out = out.reshape(z.shape)
        return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BumpProfile(Profile):
    """A*(1 - ((x - center)/width)^2)^3 on |x - center| <= width."""
    amplitude: float = 1.0
    center: float = 1.5
    width: float = 0.4

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("bump width must be positive")

    @property
    def support(self):
        return (self.center - self.width, self.center + self.width)

    def _scaled(self, x):
        s = (np.asarray(x, dtype=float) - self.center) / self.width
        return s, np.abs(s) < 1.0

    def __call__(self, x):
        s, inside = self._scaled(x)
        return np.where(inside, self.amplitude * _SHAPE(s), 0.0)

    def derivative(self, x, order=1):
        s, inside = self._scaled(x)
        return np.where(inside, self.amplitude * _SHAPE_DERIVS[order](s) / self.width ** order, 0.0)

    def transform(self, z):
        z = np.asarray(z, dtype=complex)
        kappa = z * self.width
        out = self.amplitude * self.width * np.exp(-1j * z * self.center) * _shape_transform(kappa)
        return complex(out) if out.ndim == 0 else out


def _shape_transform(kappa):
    """int_{-1}^{1} (1 - s^2)^3 exp(-i kappa s) ds for complex kappa."""
    shape = np.shape(kappa)
    kappa = np.atleast_1d(np.asarray(kappa, dtype=complex)).ravel()
    out = np.empty_like(kappa)
    small = np.abs(kappa) < _CLOSED_FORM_MIN

    if small.any():
        nodes, weights = legendre_rule(48)
        out[small] = np.exp(-1j * np.outer(kappa[small], nodes)) @ (weights * _SHAPE(nodes))

    big = ~small
    if big.any():
        # Repeated integration by parts; the series stops at the sixth derivative.
        b = -1j * kappa[big]
        up, down = np.exp(b), np.exp(-b)
        acc = np.zeros_like(b)
        for m, deriv in enumerate(_SHAPE_DERIVS):
            acc += (-1) ** m * (deriv(1.0) * up - deriv(-1.0) * down) / b ** (m + 1)
        out[big] = acc
    return out.reshape(shape)


@dataclass(frozen=True)
class ModulatedBump(BumpProfile):
    """Bump times cos(wavenumber*(x - center)); a wave packet centred on `wavenumber`."""
    wavenumber: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return BumpProfile.__call__(self, x) * np.cos(self.wavenumber * (x - self.center))

    def derivative(self, x, order=1):
        x = np.asarray(x, dtype=float)
        k0 = self.wavenumber
        phase = k0 * (x - self.center)
        cos, sin = np.cos(phase), np.sin(phase)
        b0 = BumpProfile.__call__(self, x)
        b1 = BumpProfile.derivative(self, x, 1)
        if order == 1:
            return b1 * cos - k0 * b0 * sin
        if order == 2:
            b2 = BumpProfile.derivative(self, x, 2)
            return b2 * cos - 2.0 * k0 * b1 * sin - k0 ** 2 * b0 * cos
        raise ValueError("only first and second derivatives are available")

    def transform(self, z):
        z = np.asarray(z, dtype=complex)
        k0, x0 = self.wavenumber, self.center
        out = 0.5 * (np.exp(-1j * k0 * x0) * BumpProfile.transform(self, z - k0)
                     + np.exp(1j * k0 * x0) * BumpProfile.transform(self, z + k0))
        return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ProfileSum(Profile):
    """Linear combination sum_i weight_i * profile_i."""
    terms: tuple = ()

    @property
    def support(self):
        if not self.terms:
            return (0.0, 0.0)
        return (min(p.support[0] for _, p in self.terms), max(p.support[1] for _, p in self.terms))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return sum((w * p(x) for w, p in self.terms), np.zeros_like(x))

    def derivative(self, x, order=1):
        x = np.asarray(x, dtype=float)
        return sum((w * p.derivative(x, order) for w, p in self.terms), np.zeros_like(x))

    def transform(self, z):
        z = np.asarray(z, dtype=complex)
        out = sum((w * np.asarray(p.transform(z)) for w, p in self.terms), np.zeros_like(z))
        return complex(out) if np.ndim(out) == 0 else out
