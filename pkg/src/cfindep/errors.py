"""Exception hierarchy shared by every module of the package."""


class CfIndepError(Exception):
    """Base class for all package errors."""


class NonConvergence(CfIndepError):
    """The tridiagonal QL iteration exhausted its rotation budget."""

    def __init__(self, index, budget):
        self.index = index
        self.budget = budget
        super().__init__(
            f"QL iteration did not converge at eigenvalue index {index} "
            f"after {budget} rotations"
        )


class NotHermitian(CfIndepError):
    pass


class NonPositiveRatio(CfIndepError):
    pass


class QuadratureTooCoarse(CfIndepError):
    """Doubling the quadrature resolution changed the result too much."""

    def __init__(self, discrepancy, tol):
        self.discrepancy = discrepancy
        self.tol = tol
        super().__init__(
            f"quadrature self-check failed: doubled-resolution discrepancy "
            f"{discrepancy:.3e} exceeds {tol:.1e}; use more nodes"
        )


class LowerHalfPlane(CfIndepError):
    pass


class CalibrationMismatch(CfIndepError):
    pass


class InsufficientReplicates(CfIndepError):
    pass


class BadCoefficient(CfIndepError):
    pass


class DimensionMismatch(CfIndepError):
    pass


class SingularWeights(CfIndepError):
    pass


class DataError(CfIndepError):
    """Malformed user data (CSV parse errors, NaN entries, bad prices)."""


class SeriesTooShort(DataError):
    def __init__(self, ticker, required, available):
        self.required = required
        super().__init__(
            f"series {ticker!r} has {available} observations, "
            f"need at least {required}"
        )


class DegenerateSeries(DataError):
    pass


class NotEnoughTickers(DataError):
    pass
