"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto process exit codes: configuration problems exit
with 2, unmet method preconditions with 3, numerical failures with 4.
"""


class DecayPovmError(Exception):
    """Base class for all package errors."""


class ValidationError(DecayPovmError):
    """Malformed input: potential spec, state, or run configuration."""

    exit_code = 2


class PreconditionError(DecayPovmError):
    """A method's validity conditions do not hold for the given inputs."""

    exit_code = 3


class BudgetError(PreconditionError):
    """A run would exceed its configured compute or memory budget."""


class NumericalError(DecayPovmError):
    """Numerical failure during a computation."""

    exit_code = 4


class ConvergenceError(NumericalError):
    """An iteration or quadrature refinement failed to converge."""


class ResonanceError(NumericalError):
    """Evaluation hit a pole of 1/(1+R) that no fallback could absorb."""
