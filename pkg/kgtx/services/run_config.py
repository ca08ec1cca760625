"""Flat `key = value` run configuration."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from kgtx.services.core import BranchGrid, PhysicsParams
from kgtx.services.errors import ConfigError
from kgtx.services.nonlinearity import CATALOG, build_nonlinearity
from kgtx.services.profiles import BumpProfile
from kgtx.services.spectral import InitialDatum, QuadConfig

logger = logging.getLogger(__name__)

MODES = ('leapfrog', 'conserving', 'spectral-linear')
AUTO = 'auto'


def _number(text):
    try:
        value = float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        try:
            value = float(text)
        except ValueError:
            raise ValueError(f"expected a number, got '{text}'") from None
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got '{text}'")
    return value


def _integer(text):
    try:
        return int(text.strip())
    except ValueError:
        raise ValueError(f"expected an integer, got '{text}'") from None


def _flag(text):
    lowered = text.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"expected true or false, got '{text}'")


def _auto_or(parse):
    def parser(text):
        return None if text.strip().lower() == AUTO else parse(text)
    return parser


def _times(text):
    if text.strip().lower() == AUTO:
        return None
    return tuple(_number(part) for part in text.split(',') if part.strip())


def _choice(options):
    def parser(text):
        value = text.strip()
        if value not in options:
            raise ValueError(f"'{value}' is not one of {', '.join(options)}")
        return value
    return parser


# canonical key -> (parser, default); REQUIRED marks keys without a default
REQUIRED = object()
KEYS = {
    'c': (_number, REQUIRED),
    'a1': (_number, REQUIRED),
    'a2': (_number, REQUIRED),
    'nonlinearity': (_choice(tuple(sorted(CATALOG))), 'none'),
    'lam': (_number, 1.0),
    'amplitude': (_number, 1.0),
    'x0': (_number, 1.5),
    'width': (_number, 0.4),
    'h': (_number, 1.0 / 512),
    'L': (_auto_or(_number), None),
    'dt': (_auto_or(_number), None),
    'cfl_fraction': (_number, 0.5),
    'cfl_max': (_number, 0.9),
    'T': (_number, 1.0),
    'snapshots': (_times, None),
    'mode': (_choice(MODES), 'leapfrog'),
    'eps_rel': (_number, 1e-8),
    'delta': (_auto_or(_number), None),
    'energy_tol': (_number, 1e-3),
    'conserving_tol': (_number, 1e-9),
    'omega_max': (_number, 600.0),
    'n_per_panel': (_integer, 20),
    'panel_width': (_number, 1.0),
    'seed': (_integer, 0),
    'out': (str.strip, 'runs'),
    'allow_inadmissible': (_flag, False),
    'lipschitz_pairs': (_integer, 100),
}


@dataclass(frozen=True)
class RunConfig:
    c: float
    a1: float
    a2: float
    nonlinearity: str = 'none'
    lam: float = 1.0
    amplitude: float = 1.0
    x0: float = 1.5
    width: float = 0.4
    h: float = 1.0 / 512
    L: float = 0.0
    dt: float = 0.0
    cfl_fraction: float = 0.5
    cfl_max: float = 0.9
    T: float = 1.0
    snapshots: tuple = ()
    mode: str = 'leapfrog'
    eps_rel: float = 1e-8
    delta: float = 0.0
    energy_tol: float = 1e-3
    conserving_tol: float = 1e-9
    omega_max: float = 600.0
    n_per_panel: int = 20
    panel_width: float = 1.0
    seed: int = 0
    out: str = 'runs'
    allow_inadmissible: bool = False
    lipschitz_pairs: int = 100
    source: str = field(default='', compare=False, repr=False)

    @property
    def params(self):
        return PhysicsParams(self.c, self.a1, self.a2)

    @property
    def grid(self):
        return BranchGrid.covering(self.h, self.L)

    @property
    def profile(self):
        return BumpProfile(self.amplitude, self.x0, self.width)

    @property
    def datum(self):
        return InitialDatum(self.profile)

    @property
    def spec(self):
        return build_nonlinearity(self.nonlinearity, self.lam)

    @property
    def quad(self):
        return QuadConfig(omega_max=self.omega_max, n_per_panel=self.n_per_panel,
                          panel_width=self.panel_width)

    @property
    def sigma(self):
        """Initial support in the global coordinate."""
        return (self.x0 - self.width, self.x0 + self.width)

    def echo(self):
        values = asdict(self)
        values.pop('source')
        values['snapshots'] = list(self.snapshots)
        return values


def _lines(text):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"expected 'key = value', got '{raw.strip()}'", line=number)
        key, value = (part.strip() for part in line.split('=', 1))
        yield number, key, value


def parse_config(text, overrides=None):
    """Parse and validate a run configuration.

    `overrides` maps keys to raw string values and wins over the file; it is
    how sweep cells are derived from a template.
    """
    raw = {}
    for number, key, value in _lines(text):
        if key not in KEYS:
            raise ConfigError(f"unknown key '{key}'", line=number)
        if key in raw:
            raise ConfigError(f"duplicate key '{key}'", line=number)
        raw[key] = (value, number)
    for key, value in (overrides or {}).items():
        if key not in KEYS:
            raise ConfigError(f"unknown key '{key}'")
        raw[key] = (str(value), raw.get(key, (None, None))[1])

    values, lines = {}, {}
    for key, (parse, default) in KEYS.items():
        if key not in raw:
            if default is REQUIRED:
                raise ConfigError(f"missing required key '{key}'")
            values[key] = default
            continue
        text_value, number = raw[key]
        lines[key] = number
        try:
            values[key] = parse(text_value)
        except ValueError as e:
            raise ConfigError(f"{key}: {e}", line=number) from None

    def fail(message, key):
        raise ConfigError(message, line=lines.get(key))

    for key in ('c', 'h', 'T', 'width', 'omega_max', 'panel_width', 'cfl_fraction', 'cfl_max'):
        if values[key] <= 0:
            fail(f"{key} must be positive", key)
    if values['a1'] <= 0:
        fail("a1 must be positive", 'a1')
    if values['a2'] <= values['a1']:
        fail("a2 must exceed a1", 'a2')
    if values['omega_max'] <= math.sqrt(values['a2'] - values['a1']) / values['c']:
        fail("omega_max must exceed the cutoff sqrt(a2 - a1)/c", 'omega_max')
    if values['x0'] - values['width'] <= 0:
        fail("the bump must be supported away from the node (x0 > width)", 'x0')
    if values['lam'] < 0:
        fail("lam must be nonnegative", 'lam')
    if not 0 < values['eps_rel'] < 1:
        fail("eps_rel must lie in (0, 1)", 'eps_rel')
    if values['n_per_panel'] < 2:
        fail("n_per_panel must be at least 2", 'n_per_panel')
    if values['lipschitz_pairs'] < 1:
        fail("lipschitz_pairs must be at least 1", 'lipschitz_pairs')
    if values['mode'] == 'spectral-linear' and values['nonlinearity'] != 'none':
        fail("mode spectral-linear requires nonlinearity = none", 'mode')

    c, h, T = values['c'], values['h'], values['T']
    if values['dt'] is None:
        values['dt'] = values['cfl_fraction'] * h / c
    elif values['dt'] <= 0:
        fail("dt must be positive", 'dt')
    if c * values['dt'] / h > values['cfl_max']:
        fail(f"Courant number {c * values['dt'] / h:.6g} exceeds cfl_max", 'dt')

    minimum = values['x0'] + values['width'] + c * T + 10.0 * h
    if values['L'] is None:
        values['L'] = minimum
    elif values['L'] < minimum * (1.0 - 1e-12):
        fail(f"L must be at least x0 + width + c*T + 10h = {minimum:.6g}", 'L')

    if values['delta'] is None:
        values['delta'] = 2.0 * h
    elif values['delta'] < 2.0 * h * (1.0 - 1e-12):
        fail("delta must be at least 2h", 'delta')

    if values['snapshots'] is None:
        values['snapshots'] = tuple(T * q for q in (0.0, 0.25, 0.5, 0.75, 1.0))
    else:
        snaps = tuple(sorted(values['snapshots']))
        if not snaps or snaps[0] < 0 or snaps[-1] > T * (1.0 + 1e-12):
            fail(f"snapshot times must lie in [0, {T}]", 'snapshots')
        values['snapshots'] = snaps

    logger.debug("Parsed configuration: %s", values)
    return RunConfig(source=text, **values)
