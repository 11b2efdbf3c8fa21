"""Finite-difference engine used by every residual check."""

import logging
from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import Tuple

import numpy as np

from src.utils.errors import StencilOutOfRange

logger = logging.getLogger(__name__)

BOUNDARY_POLICIES = ("shrink-domain", "one-sided")
SUPPORTED_ORDERS = (2, 4)
MAX_DERIVATIVE = 6


@dataclass(frozen=True)
class FdScheme:
    """
    Finite-difference scheme.

    ``order`` is the accuracy order of the centred interior stencils. With the
    shrink-domain policy the boundary layer of a derivative is filled with NaN
    and residuals are taken over finite entries only; with the one-sided policy
    the boundary layer uses shifted stencils of the same accuracy.
    """

    order: int = 4
    boundary: str = "shrink-domain"

    def __post_init__(self):
        if self.order not in SUPPORTED_ORDERS:
            raise ValueError(f"Unsupported FD order {self.order}; expected one of {SUPPORTED_ORDERS}")
        if self.boundary not in BOUNDARY_POLICIES:
            raise ValueError(f"Unknown boundary policy '{self.boundary}'; expected one of {BOUNDARY_POLICIES}")

    def half_width(self, d: int) -> int:
        """Half-width of the centred stencil for the d-th derivative."""
        if d == 0:
            return 0
        points = 2 * ((d + 1) // 2) - 1 + self.order
        return (points - 1) // 2

    def min_points(self, d: int) -> int:
        """Smallest grid that admits the d-th derivative under this scheme."""
        if d == 0:
            return 1
        if self.boundary == "one-sided":
            return max(2 * self.half_width(d) + 1, self.order + d)
        return 2 * self.half_width(d) + 1


def stencil_weights(offsets: Tuple[int, ...], d: int) -> np.ndarray:
    """
    Weights w_j with sum_j w_j f(x + o_j h) ~ h^d f^(d)(x).

    Solves the Vandermonde moment conditions sum_j w_j o_j^m = d! delta_{md}.
    """
    offsets = np.asarray(offsets, dtype=float)
    size = len(offsets)
    if d >= size:
        raise ValueError(f"{size} points cannot resolve derivative order {d}")
    vander = np.vander(offsets, size, increasing=True).T
    rhs = np.zeros(size)
    rhs[d] = factorial(d)
    return np.linalg.solve(vander, rhs)


@lru_cache(maxsize=None)
def central_stencil(d: int, order: int) -> Tuple[Tuple[int, ...], Tuple[float, ...]]:
    """Offsets and weights of the centred stencil; cached per (d, order)."""
    hw = FdScheme(order=order).half_width(d)
    offsets = tuple(range(-hw, hw + 1))
    weights = stencil_weights(offsets, d)
    # symmetric stencils: snap round-off so odd/even symmetry is exact
    weights = np.where(np.abs(weights) < 1e-13, 0.0, weights)
    return offsets, tuple(float(w) for w in weights)


@lru_cache(maxsize=None)
def _one_sided_stencil(d: int, order: int, index: int, n: int) -> Tuple[Tuple[int, ...], Tuple[float, ...]]:
    points = order + d
    start = min(max(index - points // 2, 0), n - points)
    offsets = tuple(range(start - index, start - index + points))
    return offsets, tuple(float(w) for w in stencil_weights(offsets, d))


def fd_derivative(samples: np.ndarray, axis: int, d: int, scheme: FdScheme, step: float) -> np.ndarray:
    """
    d-th derivative of uniformly sampled data along one axis.

    Args:
        samples: Array of samples (any trailing matrix shape)
        axis: Axis to differentiate along
        d: Derivative order (0 returns a copy)
        scheme: Accuracy order and boundary policy
        step: Grid spacing along ``axis``

    Returns:
        Array of the same shape; the boundary layer is NaN under shrink-domain

    Raises:
        StencilOutOfRange: If the axis is too short for the stencil
    """
    samples = np.asarray(samples)
    if d < 0 or d > MAX_DERIVATIVE:
        raise ValueError(f"Derivative order must be in [0, {MAX_DERIVATIVE}], got {d}")
    if d == 0:
        return samples.copy()

    n = samples.shape[axis]
    if n < scheme.min_points(d):
        raise StencilOutOfRange(
            f"Axis {axis} has {n} points; derivative {d} at order {scheme.order} "
            f"needs at least {scheme.min_points(d)}"
        )
    if step <= 0:
        raise ValueError(f"Grid step must be positive, got {step}")

    dtype = np.result_type(samples.dtype, np.float64)
    out = np.zeros(samples.shape, dtype=dtype)
    src = np.moveaxis(samples, axis, 0)
    dst = np.moveaxis(out, axis, 0)

    hw = scheme.half_width(d)
    offsets, weights = central_stencil(d, scheme.order)
    for offset, weight in zip(offsets, weights):
        if weight != 0.0:
            dst[hw:n - hw] += weight * src[hw + offset:n - hw + offset]

    boundary = list(range(hw)) + list(range(n - hw, n))
    if scheme.boundary == "shrink-domain":
        dst[boundary] = np.nan
    else:
        for index in boundary:
            side_offsets, side_weights = _one_sided_stencil(d, scheme.order, index, n)
            dst[index] = sum(w * src[index + o] for o, w in zip(side_offsets, side_weights))

    return out / step ** d


def interior(n: int, half_width: int) -> slice:
    """Index range that excludes a boundary layer of ``half_width`` points."""
    if n <= 2 * half_width:
        raise StencilOutOfRange(f"No interior points: {n} samples, half-width {half_width}")
    return slice(half_width, n - half_width)


def estimate_fd_floor(scheme: FdScheme, step: float, d_max: int, amplitude: float) -> float:
    """
    Rough magnitude of the finite-difference error of a residual.

    Sum of the truncation term step^order and the round-off term
    eps * sum|w| / step^d_max, both scaled by the field amplitude.
    """
    if d_max == 0 or step <= 0:
        return float(np.finfo(float).eps * max(amplitude, 1.0))
    _, weights = central_stencil(d_max, scheme.order)
    roundoff = np.finfo(float).eps * float(np.sum(np.abs(weights))) / step ** d_max
    truncation = step ** scheme.order
    return float(max(amplitude, 1.0) * (roundoff + truncation))


def sup_norm(values: np.ndarray) -> float:
    """Largest finite entry magnitude (NaN boundary layers ignored); 0.0 if none."""
    magnitudes = np.abs(np.asarray(values))
    finite = magnitudes[np.isfinite(magnitudes)]
    return float(finite.max()) if finite.size else 0.0
