"""Exception types raised across the package."""


class InvalidParameterError(ValueError):
    """A parameter is outside the range the model is defined for."""


class ClosedFormInvalidError(ValueError):
    """A closed-form expression is evaluated outside its validity region.

    Raised e.g. for the RRS detection formula when ``p_t <= p_j``, where
    ``(p_t / (p_t - p_j)) ** l`` is no longer a finite positive number.
    """


class NoInteriorMinimumError(RuntimeError):
    """Bracket expansion for the detection threshold search did not close."""
