"""Exception hierarchy shared by all modules.

Validation problems (bad parameters) derive from :class:`DomainError`; problems
that only show up while computing derive from :class:`NumericalError`.  The CLI
maps the first family to exit code 1 and the second to exit code 2.
"""


class DomainError(ValueError):
    """A parameter lies outside the admissible range."""


class RegionError(DomainError):
    """A request falls outside the (N, mu, kappa) region where a statement applies."""


class CapabilityError(DomainError):
    """The requested variant (e.g. an angular sector) is not supported."""


class NumericalError(ArithmeticError):
    """Base class for failures of the numerics themselves."""


class IntegrabilityError(NumericalError):
    """A power-law tail makes a requested integral diverge."""


class ConvergenceError(NumericalError):
    """An iterative method failed to converge."""
