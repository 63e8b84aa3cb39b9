"""Exception types shared across the package."""

from __future__ import annotations


class ReachBoundError(Exception):
    """Base class for all package errors."""


class PolySyntaxError(ReachBoundError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}")


class DegreeOverflowError(ReachBoundError):
    def __init__(self, index: int, degree: int, declared: int):
        self.index = index
        self.degree = degree
        self.declared = declared
        super().__init__(
            f"polynomial {index} has a monomial of degree {degree} > declared {declared}"
        )


class NonSurjective(ReachBoundError):
    def __init__(self, sigma_q: float):
        self.sigma_q = sigma_q
        super().__init__(f"matrix is not surjective (sigma_q={sigma_q:.3e})")


class PreconditionViolated(ReachBoundError):
    pass


class NotOnBoundary(ReachBoundError):
    pass


class NotAZero(ReachBoundError):
    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(f"point is not a zero: residual {residual:.3e} > tol {tol:.3e}")


class NoRouteApplicable(ReachBoundError):
    pass


class BudgetExceeded(ReachBoundError):
    """Refinement ran out of cells; ``result`` holds the bracket reached so far."""

    def __init__(self, cells: int, result=None):
        self.cells = cells
        self.result = result
        super().__init__(f"cell budget exhausted after {cells} cells")


class EmptySample(ReachBoundError):
    def __init__(self, probes: int):
        self.probes = probes
        super().__init__(f"no points found on the variety after {probes} probes")


class NoAdmissiblePairs(ReachBoundError):
    pass


class ConfigError(ReachBoundError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
