"""Exception hierarchy shared by every geoseg module."""

from __future__ import annotations


class GeosegError(Exception):
    """Base class for all domain errors raised by the library."""


class ParseError(GeosegError, ValueError):
    """Malformed input text (camera config, problem file, CSV)."""


class InvalidParameter(GeosegError, ValueError):
    """A parameter is well-formed but violates a model invariant."""


class BearingOutOfFov(GeosegError, ValueError):
    pass


class ProjectionSingularity(GeosegError, ArithmeticError):
    pass


class PixelOutOfDomain(GeosegError, ValueError):
    pass


class DegenerateInput(GeosegError, ValueError):
    pass


class PoleSingularity(GeosegError, ArithmeticError):
    """Bearing parallel to a circle normal: every circle point is equidistant."""


class NearestOutOfFov(GeosegError, ValueError):
    pass


class EmptyImage(GeosegError, ValueError):
    pass


class ImageTooSmall(GeosegError, ValueError):
    pass


class SliceOutsideImage(GeosegError, ValueError):
    pass


class LineThroughOrigin(GeosegError, ArithmeticError):
    pass


class DegenerateGeometry(GeosegError, ArithmeticError):
    pass


class DegenerateLine(GeosegError, ArithmeticError):
    pass


class PointAtCameraCenter(GeosegError, ArithmeticError):
    pass


class NonConvergence(GeosegError, RuntimeError):
    pass


class SingularNormalEquations(GeosegError, ArithmeticError):
    pass


class RotationTooLarge(GeosegError, ValueError):
    pass


__all__ = [
    "BearingOutOfFov",
    "DegenerateGeometry",
    "DegenerateInput",
    "DegenerateLine",
    "EmptyImage",
    "GeosegError",
    "ImageTooSmall",
    "InvalidParameter",
    "LineThroughOrigin",
    "NearestOutOfFov",
    "NonConvergence",
    "ParseError",
    "PixelOutOfDomain",
    "PointAtCameraCenter",
    "PoleSingularity",
    "ProjectionSingularity",
    "RotationTooLarge",
    "SingularNormalEquations",
    "SliceOutsideImage",
]
