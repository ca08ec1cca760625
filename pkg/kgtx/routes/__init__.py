from flask import Blueprint

bp = Blueprint('main', __name__, cli_group=None)

from . import main  # noqa: E402,F401  Import views
from . import commands  # noqa: E402,F401  Register CLI commands
from .main import init_app  # noqa: E402,F401
