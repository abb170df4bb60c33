class PackSpectraError(Exception):
    """Error base del laboratorio; `exit_code` es lo que devuelve la CLI."""

    exit_code = 1


class InvalidInputError(PackSpectraError, ValueError):
    pass


class UnsupportedDimensionError(InvalidInputError):
    pass


class UndefinedSeparationError(InvalidInputError):
    pass


class SingularConfigurationError(InvalidInputError):
    pass


class ResolutionError(InvalidInputError):
    pass


class InvalidPartitionError(InvalidInputError):
    pass


class InvalidFamilyError(InvalidInputError):
    pass


class ClassNotFoundError(InvalidInputError):
    pass


class DegenerateZeroSetError(InvalidInputError):
    pass


class DegenerateLinkError(InvalidInputError):
    pass


class NotApplicableError(InvalidInputError):
    pass


class CellSaturatedError(InvalidInputError):
    pass


class SearchFailureError(PackSpectraError):
    pass


class InequalityViolation(PackSpectraError):
    """Una verificacion numerica de desigualdad fallo; el reporte ya fue escrito."""

    exit_code = 2

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
