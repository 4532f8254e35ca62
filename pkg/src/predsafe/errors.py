class PredsafeError(Exception):
    """Base class for evaluation errors."""


class InvalidPathError(PredsafeError, ValueError):
    pass


class OutOfPathExtentError(PredsafeError, ValueError):
    pass


class ShapeError(PredsafeError, ValueError):
    """Field or ensemble dimensions disagree with the grid."""


class ConfigurationError(PredsafeError, ValueError):
    pass


class MissingActorError(PredsafeError, KeyError):
    pass


class EmptyReportError(PredsafeError, ValueError):
    pass


class ScenarioFormatError(PredsafeError, ValueError):
    pass
