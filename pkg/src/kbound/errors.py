"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Malformed or inconsistent input (shapes, signs, missing fields).

    Raised before any numerics run.  The message names the offending
    argument or field.
    """


class NumericalError(RuntimeError):
    """A computation ran but left its tolerance regime.

    Examples: the integrator lost unit norm, a truncation left too much
    tail weight, a requested quantity is undefined for the given data.
    """
