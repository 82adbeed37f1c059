"""Exception types shared across the package."""


class QThermoError(Exception):
    """Base class for every package-specific error."""


class InvalidInput(QThermoError, ValueError):
    """Input fails a structural precondition (shape, finiteness, dimension match)."""


class DomainError(QThermoError, ValueError):
    """A scalar function was evaluated outside its mathematical domain."""


class InvalidState(InvalidInput):
    """A matrix claimed to be a density operator is not one."""


class InvalidSchedule(InvalidInput):
    """Hamiltonian schedule segments do not tile the time interval."""


class InvalidPerturbation(InvalidInput):
    """A correlation perturbation violates its partial-trace constraints."""


class ScenarioError(InvalidInput):
    """A scenario or grid description file is malformed."""


class NumericalError(QThermoError):
    """Computation failed for numerical rather than structural reasons."""


class InfeasibleEnergy(NumericalError):
    """Target energy lies outside the spectral range of the Hamiltonian."""


class ConvergenceError(NumericalError):
    """An iterative solver exhausted its iteration budget."""
