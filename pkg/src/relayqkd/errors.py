class ParamError(ValueError):
    """A LinkParams field is outside its allowed range."""

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


class NumericError(Exception):
    """A well-formed request has no numeric answer."""


class UndefinedQberError(NumericError):
    pass


class NoCrossingError(NumericError):
    pass


class EmptySampleError(NumericError):
    pass
