"""Exception hierarchy shared by every foliant module."""


class FoliantError(Exception):
    """Base class for all errors raised by foliant."""


class DimensionError(FoliantError, ValueError):
    pass


class NonFiniteError(FoliantError, ValueError):
    pass


class NonUnitVectorError(FoliantError, ValueError):
    pass


class AntipodalError(FoliantError, ArithmeticError):
    """The rotation formula was asked for u ~ -v, where it has a pole."""


class SingularMatrixError(FoliantError, ArithmeticError):
    pass


class PathGapError(FoliantError, ValueError):
    """Consecutive projective samples are too far apart to lift continuously."""


class EvaluationError(FoliantError, ArithmeticError):
    """A field, map or expression could not be evaluated at a point."""


class DegenerateFrameError(FoliantError, ValueError):
    pass


class TransversalityError(FoliantError, ValueError):
    pass


class RegistryError(FoliantError, KeyError):
    pass


class ConfigError(FoliantError, ValueError):
    pass
