"""Exception hierarchy."""


class SpinflipError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(SpinflipError, ValueError):
    pass


class UnsupportedOrderError(SpinflipError, ValueError):
    pass


class SingularArgumentError(SpinflipError, ValueError):
    pass


class ScaleOverflowError(SpinflipError, ArithmeticError):
    """A reflection building block left the representable range."""

    def __init__(self, block, detail=""):
        self.block = block
        super().__init__(f"non-finite value in block {block!r} {detail}".rstrip())


class ConvergenceError(SpinflipError, RuntimeError):
    """Quadrature did not reach its tolerance; ``partial`` holds the estimate."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class TruncationError(ConvergenceError):
    """The mode sum hit its order cap before converging."""


class ConfigError(SpinflipError, ValueError):
    def __init__(self, message, path=()):
        self.path = tuple(path)
        where = "/".join(str(p) for p in self.path)
        super().__init__(f"{where}: {message}" if where else message)
