class GeometryError(Exception):
    """Base class for every numerical failure raised by this project."""


class DimensionMismatchError(GeometryError, ValueError):
    pass


class NonFiniteValueError(GeometryError, ValueError):
    def __init__(self, message: str, coordinate: int | None = None) -> None:
        super().__init__(message)
        self.coordinate = coordinate


class EigenvalueConvergenceError(GeometryError, ArithmeticError):
    pass


class InvalidStateError(GeometryError, ValueError):
    pass


class DegeneratePopulationError(InvalidStateError):
    pass


class IntegrationError(GeometryError):
    def __init__(self, message: str, time: float | None = None) -> None:
        super().__init__(message)
        self.time = time


class StepSizeUnderflowError(IntegrationError):
    pass


class SurfaceSamplingError(GeometryError):
    def __init__(self, message: str, node: tuple[int, ...], coordinates: tuple[float, ...]) -> None:
        super().__init__(message)
        self.node = node
        self.coordinates = coordinates
