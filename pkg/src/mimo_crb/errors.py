"""Exception types raised across the package."""


class MimoCrbError(Exception):
    """Base class for all package errors."""


class StructuralError(MimoCrbError, ValueError):
    """A system configuration violates a structural invariant (e.g. Q > N_sc)."""


class AliasingViolation(MimoCrbError, ValueError):
    """Pilot spacing is too coarse for the channel's delay or Doppler spread."""

    def __init__(self, constraint: str, value: float, limit: float = 1.0):
        self.constraint = constraint
        self.value = value
        self.limit = limit
        self.excess = value - limit
        super().__init__(
            f"{constraint} aliasing constraint violated: {value:.6g} > {limit:g} "
            f"(excess {self.excess:.6g})"
        )


class SingularFim(MimoCrbError, ArithmeticError):
    """The Fisher information matrix is (numerically) singular."""

    def __init__(self, message: str, cond: float = float("inf")):
        self.cond = cond
        super().__init__(message)


class AllTrialsDiscarded(MimoCrbError, ArithmeticError):
    """Every Monte Carlo trial produced a singular FIM."""


class NonRectangularGrid(MimoCrbError, ValueError):
    pass


class NegativeHorizon(MimoCrbError, ValueError):
    pass


class OutOfBand(MimoCrbError, ValueError):
    pass
