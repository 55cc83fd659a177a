"""Exception hierarchy shared by all subpackages."""


class LevelSetLabError(Exception):
    """Base class for every error raised by this package."""


class NonFiniteState(LevelSetLabError):
    pass


class DomainEscape(LevelSetLabError):
    """A trajectory left the closed domain by more than the clamp tolerance."""


class MaxStepsExceeded(LevelSetLabError):
    pass


class NotOnBoundary(LevelSetLabError):
    pass


class DegenerateGradient(LevelSetLabError):
    """|p| fell below the threshold where the gradient-preserving Hamiltonian is defined."""


class TubeDegenerate(LevelSetLabError):
    """det(dx/dxi) became non-positive: the characteristic map is no longer invertible."""


class SanityBoundViolated(LevelSetLabError):
    pass


class EmptyInterface(LevelSetLabError):
    pass


class BandEmpty(LevelSetLabError):
    pass


class ConfigError(LevelSetLabError):
    pass


class ParseError(ConfigError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownKey(ConfigError):
    pass


class ValidationError(ConfigError):
    pass
