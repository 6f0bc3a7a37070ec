"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: UsageError -> 1, InputError -> 2,
NumericalError -> 3.
"""


class DeformSpaceError(Exception):
    pass


class UsageError(DeformSpaceError):
    """Caller misuse: bad flags, wrong model variant, missing forward pass."""


class ShapeError(DeformSpaceError, ValueError):
    """Dimension mismatch between arrays that must agree."""


class InputError(DeformSpaceError, ValueError):
    """Invalid data: out-of-range parameters, malformed files, uncovered points."""


class NumericalError(DeformSpaceError, RuntimeError):
    """Numerical failure: SVD non-convergence, active-set cycling, divergence."""
