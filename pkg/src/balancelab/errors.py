"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition.

    The command-line front end maps this to exit status 2.
    """


class HorizonError(ValidationError):
    """The requested quantity needs a longer materialized prefix."""
