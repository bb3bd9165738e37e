class FormationError(Exception):
    """Base class for all errors raised by fracform."""


class DomainError(FormationError, ValueError):
    """Argument outside the domain of the operation."""


class SingularityError(FormationError):
    """Input matrix M_i is singular (speed below the lower bound)."""


class IsolationError(FormationError):
    """Agent has no neighbors, so the consensus law is undefined."""


class IntegrationError(FormationError):
    """Integrator produced a non-finite state."""


class DisconnectionError(FormationError):
    """Graph is disconnected where a connected graph is required."""


class ConfigError(FormationError):
    """Scenario configuration failed to parse or validate."""
