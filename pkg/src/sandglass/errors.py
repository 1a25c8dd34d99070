"""Exception hierarchy. Every domain failure derives from SandglassError."""


class SandglassError(Exception):
    """Base class for domain errors (the CLI maps these to exit code 1)."""


class DomainError(SandglassError, ValueError):
    pass


class DegenerateError(SandglassError):
    pass


class EmptySet(SandglassError):
    """No real realization exists for the given design."""


class OverlapError(SandglassError):
    pass


class NoSolution(SandglassError):
    pass


class VerificationFailed(SandglassError):
    pass


class SingularSystem(SandglassError):
    pass


class SelfIntersecting(SandglassError):
    pass


class NoPathConvergence(SandglassError):
    pass


class SaddleNotShaky(SandglassError):
    pass


class ZeroFlex(SandglassError):
    pass


class EmptyTable(SandglassError):
    pass


class MeshError(SandglassError):
    pass
