"""Exception hierarchy shared by all resumfem modules."""

from __future__ import annotations


class ResumfemError(Exception):
    """Base class for every error raised by the package."""


class SingularMatrix(ResumfemError):
    """A matrix is numerically singular (sigma_min / sigma_max below threshold)."""


class NonFinite(ResumfemError):
    """NaN or Inf encountered where finite values are required."""

    def __init__(self, message: str, k: int | None = None):
        super().__init__(message)
        self.k = k


class UnsupportedOrder(ResumfemError):
    """Quadrature order outside the supported range."""


class BadDegree(ResumfemError):
    """Polynomial degree outside 1..5."""


class BadMesh(ResumfemError):
    """Invalid mesh description."""


class OrderTooHigh(ResumfemError):
    """Closed-form oracle requested beyond the tabulated order."""


class DegenerateFit(ResumfemError):
    """Not enough finite points for a least-squares slope."""


class ZeroHighestTerm(ResumfemError):
    """The highest series term vanishes, the partial-sum radius is undefined."""


class PoleOnPath(ResumfemError):
    """A Pade denominator vanishes on the Laplace integration path."""


class ZeroDerivative(ResumfemError):
    """The time derivative vanishes, the relative residual is undefined."""

    def __init__(self, message: str, absolute: float = 0.0):
        super().__init__(message)
        self.absolute = absolute


class TooFewPoints(ResumfemError):
    """Integration over fewer than two samples."""


class NoDiffusion(ResumfemError):
    """Diffusion coefficient is zero where a positive one is needed."""


class StepCollapse(ResumfemError):
    """Adaptive step size shrank below the admissible floor."""


class UnknownRecipe(ResumfemError):
    """Recipe name not registered."""


class BadConfig(ResumfemError):
    """Experiment configuration is invalid."""
