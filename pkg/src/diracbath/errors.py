"""Exception types shared across the package."""


class DiracBathError(Exception):
    """Base class for all package errors."""


class DomainError(DiracBathError):
    """Operation called outside its domain of validity."""


class PoleError(DiracBathError):
    """A grid summand denominator vanished (z sits on an eigenvalue)."""


class NoRootError(DiracBathError):
    """No bound-state root bracketed in the searched gap intervals."""


class InsufficientDataError(DiracBathError):
    """Not enough samples in the requested fit window."""


class StepSizeError(DiracBathError):
    """Time step too coarse: norm drift exceeded tolerance."""


class MissingSnapshotError(DiracBathError):
    """Requested time was not among the recorded snapshots."""


class ConvergenceError(DiracBathError):
    """Lattice sum not converged at the requested cutoff."""


class SingularError(DiracBathError):
    """Green dyadic evaluated at r = 0."""


class AmbiguousError(DiracBathError):
    """Crossing exponents fall outside all tolerance bands."""


class SchemaError(DiracBathError):
    """Config document violates the schema (unknown/missing/ill-typed key)."""


class RangeError(DiracBathError):
    """Config value outside its allowed range."""
