"""Exception types raised by the solver."""


class InvalidStateError(ValueError):
    """A state lies outside the admissible set (negative mass, bad volume fraction, ...)."""


class DegenerateError(ValueError):
    """A quantity that must be nonzero (weights, wave speed, leading coefficient) vanished."""


class SingularDenominatorError(ArithmeticError):
    """A rational closed-form expression was evaluated at a (near) pole."""


class UnphysicalRootError(ArithmeticError):
    """A root of the coupling polynomials leads to an unphysical state."""


class NoRealSolutionError(ArithmeticError):
    """A polynomial has no real root where one is required."""


class CouplingSolverError(RuntimeError):
    """The interface Riemann solver failed.

    The offending trace states are kept on the exception for diagnostics.
    """

    def __init__(self, message, traces=None):
        super().__init__(message)
        self.traces = traces


class SimulationAbort(RuntimeError):
    """The time loop stopped on an inadmissible state or a solver failure."""

    def __init__(self, message, time=None, cell=None):
        super().__init__(message)
        self.time = time
        self.cell = cell
