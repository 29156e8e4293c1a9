"""Exception types shared across the package."""


class PdmError(Exception):
    """Base class for all errors raised by pdm_hulthen."""


class SingularPoint(PdmError, ValueError):
    """The mass/potential denominator 1 - q exp(-lambda rho) vanishes."""


class InvalidQ(PdmError, ValueError):
    """q is outside the range a routine supports (q = 0 downstream of core)."""


class OutOfDomain(PdmError, ValueError):
    pass


class NonRealCoefficient(PdmError, ArithmeticError):
    """A square-root argument went negative.

    ``which`` names the failing root so callers can report it.
    """

    def __init__(self, which: str, argument: float):
        self.which = which
        self.argument = argument
        super().__init__(f"non-real coefficient: {which} has argument {argument!r} < 0")


class NoRootInBracket(PdmError):
    pass


class NonRealOnBracket(PdmError):
    pass


class ConvergenceFailure(PdmError):
    pass


class NonMonotoneRefinement(ConvergenceFailure):
    """A refinement sequence that no power law h^p can fit."""


class NonPositiveWeight(PdmError, ValueError):
    pass


class ResidualTooLarge(PdmError):
    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(f"radial-equation residual {residual:.3e} exceeds tolerance {tol:.3e}")


class DivergentNorm(PdmError, ArithmeticError):
    pass


class EmptySpectrum(PdmError, ValueError):
    pass


class StepTooLarge(PdmError, ValueError):
    pass
