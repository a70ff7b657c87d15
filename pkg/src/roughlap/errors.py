"""Exception types shared across the package."""


class RoughLapError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class GeometryError(RoughLapError, ValueError):
    pass


class MeshError(RoughLapError, ValueError):
    pass


class AssemblyError(RoughLapError, ValueError):
    pass


class PreconditionError(RoughLapError, ValueError):
    """A mathematical precondition of a solver does not hold."""

    exit_code = 3


class CompatibilityError(PreconditionError):
    def __init__(self, message: str, defect: float):
        super().__init__(message)
        self.defect = defect


class ConvergenceError(RoughLapError, RuntimeError):
    exit_code = 4

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history or [])
