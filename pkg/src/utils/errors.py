"""Exception hierarchy and process exit codes shared by every module."""

from typing import Optional

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_CONFIG_ERROR = 2


class AknsError(Exception):
    """Base class for all library errors."""


class ConfigError(AknsError, ValueError):
    """Invalid configuration value; carries the dotted path of the offending field."""

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


# ncalg

class ShapeMismatch(AknsError):
    """Factors or blocks whose dimensions do not compose."""


class StencilOutOfRange(AknsError):
    """Finite-difference stencil does not fit inside the grid."""


# hierarchy

class ResidualAuxiliarySymbols(AknsError):
    """Auxiliary dressing symbols survived elimination."""


class LambdaOrderResidual(AknsError):
    """Zero-curvature expansion left a non-vanishing spectral order."""


class PoleAtX(AknsError):
    """Closed-form Darboux solution evaluated on its pole."""


class GridMismatch(AknsError):
    """Sampled inputs live on incompatible grids."""


# riccati

class UnsupportedOrder(AknsError):
    """Requested order outside the validated range."""


class BoundaryLeak(UserWarning):
    """Field does not decay at the grid ends; quadrature of charges is unreliable."""


# linearsol

class DegenerateDispersion(AknsError):
    """Dispersion relation collapses (all exponents vanish)."""


class ConvergenceViolation(AknsError):
    """Mode exponents break the sign conditions needed for convergent kernels."""


class OutOfValidatedRange(AknsError):
    """Argument outside the range on which an evaluator was validated."""


class SingularScaling(AknsError):
    """Self-similar scaling factor vanishes."""


class NonPositivePhi(AknsError):
    """Heat-equation solution is not strictly positive, so its logarithm is undefined."""


# soliton

class SingularM(AknsError):
    """Block matrix of the soliton linear system is singular."""

    def __init__(self, message: str, det: complex):
        self.det = det
        super().__init__(f"{message} (det = {det:.3e})")


class PoleAt(AknsError):
    """Closed-form soliton evaluated on its blow-up locus."""

    def __init__(self, x: float, t: float, denominator: Optional[complex] = None):
        self.x = x
        self.t = t
        self.denominator = denominator
        super().__init__(f"Closed form has a pole at x={x}, t={t}")


# glm

class SingularResolvent(AknsError):
    """Discretised id - f^f operator is numerically singular."""

    def __init__(self, message: str, log_abs_det: float):
        self.log_abs_det = log_abs_det
        super().__init__(f"{message} (log|det| = {log_abs_det:.2f})")


class SingularA(AknsError):
    """Operator id + A is not invertible on the grid."""


class TruncationError(AknsError):
    """Kernel does not decay enough at the truncation point."""


class NeumannDivergence(AknsError):
    """Neumann series requested outside its contraction regime."""
