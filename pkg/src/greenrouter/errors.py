"""Exception types shared across the package."""


class GreenRouterError(Exception):
    """Base class for all package errors."""


class ParseError(GreenRouterError):
    """Instance file could not be parsed; carries the offending line number."""

    def __init__(self, path, lineno, message):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class ValidationError(GreenRouterError):
    """A data invariant does not hold."""


class InfeasibleWindowError(GreenRouterError):
    """Tight-window generation found an empty feasible interval for a customer."""


class InfeasibleRouteError(GreenRouterError):
    """A route admits no feasible speed schedule within the allowed bounds."""


class PerturbationError(GreenRouterError):
    """Perturbation redraw attempts exhausted without a capacity-feasible move."""
