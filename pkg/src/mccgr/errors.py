"""Exception types shared across the library."""


class DataError(ValueError):
    """Malformed or inconsistent input: bad CSV cells, ragged rows,
    negative entries where non-negativity is required, shape mismatches."""


class NumericalError(ArithmeticError):
    """A computation left the representable regime: non-finite objective,
    undefined divergence, or a collapsed kernel width."""
