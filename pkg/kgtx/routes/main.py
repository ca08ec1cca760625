from flask import current_app, jsonify, request
import numpy as np

from kgtx import __version__
from kgtx.routes import bp
from kgtx.services.core import ComplexSample, PhysicsParams
from kgtx.services.dispersion import coefficient_table
from kgtx.services.nonlinearity import build_nonlinearity, validate_nonlinearity
from kgtx.services.runs import RunService

# Initialize service without app
run_service = RunService()

MAX_SAMPLES = 10001


def _bad_request(message):
    return jsonify({"error": message}), 400


def _float_arg(name, default=None):
    value = request.args.get(name)
    if value is None:
        if default is None:
            raise ValueError(f"missing query parameter '{name}'")
        return default
    return float(value)


@bp.route('/')
def index():
    if not run_service.app:
        run_service.init_app(current_app)
    return jsonify({
        "service": "kgtx",
        "version": __version__,
        "recent_runs": run_service.get_history()[:10],
    })


@bp.route('/api/coefficients')
def coefficients():
    try:
        params = PhysicsParams(_float_arg('c'), _float_arg('a1'), _float_arg('a2'))
        omega_max = _float_arg('omega_max', 4.0 * params.cutoff)
        n = int(request.args.get('n', 201))
        if not 2 <= n <= MAX_SAMPLES or omega_max <= 0:
            raise ValueError(f"need 2 <= n <= {MAX_SAMPLES} and omega_max > 0")
    except ValueError as e:
        return _bad_request(str(e))

    table = coefficient_table(params, np.linspace(-omega_max, omega_max, n))
    rows = [{
        "omega": float(w),
        "band": band.value,
        "C_R": ComplexSample.of(r).as_dict(),
        "T": ComplexSample.of(t).as_dict(),
    } for w, r, t, band in zip(table.omega, table.reflection, table.transmission, table.bands(params))]
    return jsonify({"k": params.k, "cutoff": params.cutoff, "rows": rows})


@bp.route('/api/nonlinearity/<name>')
def nonlinearity(name):
    try:
        spec = build_nonlinearity(name, _float_arg('lam', 1.0))
    except ValueError as e:
        return _bad_request(str(e))
    verdict = validate_nonlinearity(spec)
    return jsonify({**spec.describe(), "ok": verdict.ok, "code": verdict.code, "reason": verdict.reason})


@bp.route('/api/runs')
def runs():
    if not run_service.app:
        run_service.init_app(current_app)
    return jsonify(run_service.get_history())


def init_app(app):
    """Initialize the blueprint with the app"""
    run_service.init_app(app)
