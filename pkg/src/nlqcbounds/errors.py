"""Exception hierarchy shared by all modules."""


class NLQCError(Exception):
    """Base class for every error raised by this package."""


class InvalidDimensionError(NLQCError, ValueError):
    pass


class LabelError(NLQCError, KeyError):
    def __str__(self):
        # KeyError wraps its message in quotes; keep the plain text.
        return str(self.args[0]) if self.args else ""


class ShapeError(NLQCError, ValueError):
    pass


class RangeError(NLQCError, ValueError):
    pass


class ConfigError(NLQCError, ValueError):
    pass


class DomainError(NLQCError, ValueError):
    pass


class PreconditionError(NLQCError, ValueError):
    pass


class InternalConsistencyError(NLQCError, ArithmeticError):
    pass


class SizeError(NLQCError, ValueError):
    """Raised when an exhaustive search would exceed its enumeration budget."""


class UnsupportedError(NLQCError, NotImplementedError):
    pass
