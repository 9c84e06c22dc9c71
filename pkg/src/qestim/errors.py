"""Exception hierarchy shared across the package."""


class QestimError(Exception):
    """Base class for all qestim errors."""


class InvalidInput(QestimError):
    """Malformed numerical input (non-finite entries, shape or symmetry violations)."""


class InvalidModel(QestimError):
    """A parameterized state or channel violates its construction invariants."""


class InvalidChannel(QestimError):
    """A channel representation is not trace-preserving or not completely positive."""


class InvalidScenario(QestimError):
    """A sampling scenario is inconsistent (e.g. POVM probabilities do not sum to one)."""


class DomainError(QestimError):
    """A parameter vector lies outside the declared domain of a model."""


class NotEstimable(QestimError):
    """Requested an optimal estimator for a parameter with no unbiased estimator."""


class Unsupported(QestimError):
    """Requested an operation outside the supported size range."""
