"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid input: malformed pattern, bad configuration, out-of-domain argument."""


class NumericalError(ArithmeticError):
    """A computation could not produce a meaningful number (zero normalizer, failed embedding, ...)."""
