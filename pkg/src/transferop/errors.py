"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point lies outside the domain an operation is defined on.

    ``indices`` lists the offending positions when the input was an array.
    """

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = [] if indices is None else list(indices)


class NumericalError(ArithmeticError):
    """A quantity underflowed or degenerated so the result is meaningless."""


def check_unit_interval(x, what="x"):
    """Raise :class:`DomainError` unless every entry of ``x`` is in [0, 1]."""
    import numpy as np

    arr = np.asarray(x, dtype=np.float64)
    bad = ~((arr >= 0.0) & (arr <= 1.0))
    if bad.any():
        idx = np.flatnonzero(bad.ravel())
        shown = ", ".join(str(i) for i in idx[:10])
        more = "" if idx.size <= 10 else f" (+{idx.size - 10} more)"
        raise DomainError(f"{what} outside [0, 1] at index {shown}{more}", idx.tolist())
    return arr
