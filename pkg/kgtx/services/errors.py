"""Exception types raised by the numerical services.

The CLI maps them onto exit codes: NumericalError and its subclasses exit
with 3; ConfigError, BranchCutError and WindowError (all ValueErrors) exit with 2.
"""


class ConfigError(ValueError):
    """Invalid run configuration. Carries the offending line when known."""

    def __init__(self, message, line=None):
        self.message = message
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AdmissibilityError(ConfigError):
    """A nonlinearity failed the admissibility gate and no override was given."""


class BranchCutError(ValueError):
    """A complex frequency sits exactly on one of the downward branch cuts."""


class WindowError(ValueError):
    """Sampled data does not fit inside its sampling window."""


class NumericalError(RuntimeError):
    """Base class for aborts raised while integrating or evaluating."""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


class CFLViolation(NumericalError):
    pass


class NewtonDivergence(NumericalError):
    pass


class InstabilityError(NumericalError):
    pass


class QuadratureError(NumericalError):
    """Non-finite integrand sample. `omega` is the first offending node."""

    def __init__(self, message, omega=None):
        self.omega = omega
        super().__init__(message)
