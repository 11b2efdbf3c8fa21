"""
Residuals of the first-order system tying the dressing kernels together:

    w1 (d_x + d_y) A + h B(x, x) C = 0
    w2 (d_x + d_y) D - h C(x, x) B = 0
    w1 d_x B + w2 d_y B + h B(x, x) D = 0
    w2 d_x C + w1 d_y C - h C(x, x) A = 0

Kernels are sampled on a square grid (x_i, x_j) with shape (G, G, rows, cols).
Sampled kernels are differentiated on the grid; kernels available as a function
of (x, z) can be differentiated on a fine stencil around each grid point instead.
"""

import logging
from typing import Callable, Dict, Optional

import numpy as np

from src.utils.errors import GridMismatch
from src.utils.grid import uniform_step
from src.verify.fd import FdScheme, central_stencil, fd_derivative, sup_norm

logger = logging.getLogger(__name__)

CONSTRAINT_SUPPORTS = ("full", "upper")
KERNEL_KEYS = ("A", "B", "C", "D")
STENCIL_STEP = 1e-3

KernelFunction = Callable[[np.ndarray, np.ndarray], Dict[str, np.ndarray]]


def _diagonal(kernel: np.ndarray) -> np.ndarray:
    idx = np.arange(kernel.shape[0])
    return kernel[idx, idx]


def _residual_maps(kernels: Dict[str, np.ndarray], along_x: Dict[str, np.ndarray],
                   along_y: Dict[str, np.ndarray], w1: complex, w2: complex) -> Dict[str, np.ndarray]:
    a, b, c, d = (kernels[key] for key in KERNEL_KEYS)
    h = w1 - w2
    b_diag = _diagonal(b)
    c_diag = _diagonal(c)
    return {
        "A": w1 * (along_x["A"] + along_y["A"]) + h * np.einsum("xnm,xymk->xynk", b_diag, c),
        "D": w2 * (along_x["D"] + along_y["D"]) - h * np.einsum("xmn,xynk->xymk", c_diag, b),
        "B": w1 * along_x["B"] + w2 * along_y["B"] + h * np.einsum("xnm,xymk->xynk", b_diag, d),
        "C": w2 * along_x["C"] + w1 * along_y["C"] - h * np.einsum("xmn,xynk->xymk", c_diag, a),
    }


def constraint_residual_maps(
    kernels: Dict[str, np.ndarray],
    x: np.ndarray,
    w1: complex,
    w2: complex,
    scheme: Optional[FdScheme] = None,
    support: str = "full",
) -> Dict[str, np.ndarray]:
    """
    Pointwise residual maps of the four kernel equations.

    With ``support="upper"`` only entries with j - i >= stencil half-width are
    kept; the rest are NaN (the kernels jump across the diagonal).
    """
    if support not in CONSTRAINT_SUPPORTS:
        raise ValueError(f"Unknown support '{support}'; expected one of {CONSTRAINT_SUPPORTS}")
    scheme = scheme or FdScheme()
    step = uniform_step(x, "x")
    kernels = {key: np.asarray(kernels[key]) for key in KERNEL_KEYS}
    g = len(x)
    for name, kernel in kernels.items():
        if kernel.shape[:2] != (g, g):
            raise GridMismatch(f"Kernel {name} has samples {kernel.shape[:2]}, expected ({g}, {g})")

    along_x = {key: fd_derivative(kernel, 0, 1, scheme, step) for key, kernel in kernels.items()}
    along_y = {key: fd_derivative(kernel, 1, 1, scheme, step) for key, kernel in kernels.items()}
    maps = _residual_maps(kernels, along_x, along_y, w1, w2)

    if support == "upper":
        hw = scheme.half_width(1)
        i, j = np.indices((g, g))
        outside = (j - i) < hw
        for key in maps:
            maps[key] = maps[key].copy()
            maps[key][outside] = np.nan
    return maps


def constraint_residuals(
    kernels: Dict[str, np.ndarray],
    x: np.ndarray,
    w1: complex,
    w2: complex,
    scheme: Optional[FdScheme] = None,
    support: str = "full",
) -> Dict[str, float]:
    """Sup-norm residual of each kernel equation, keyed by the differentiated block."""
    maps = constraint_residual_maps(kernels, x, w1, w2, scheme, support)
    result = {key: sup_norm(value) for key, value in maps.items()}
    logger.debug(f"Constraint residuals: {result}")
    return result


def stencil_constraint_residuals(
    kernel_fn: KernelFunction,
    x: np.ndarray,
    w1: complex,
    w2: complex,
    step: float = STENCIL_STEP,
    scheme: Optional[FdScheme] = None,
) -> Dict[str, float]:
    """
    Sup-norm residuals with derivatives from a centred stencil of spacing ``step``
    around every point of the square grid x x x.

    ``kernel_fn(xs, zs)`` returns the kernels on the product grid xs x zs. The FD error
    is O(step^order) whatever the spacing of ``x``.
    """
    if step <= 0:
        raise ValueError(f"Stencil step must be positive, got {step}")
    scheme = scheme or FdScheme()
    x = np.asarray(x, dtype=float)
    kernels = kernel_fn(x, x)
    offsets, weights = central_stencil(1, scheme.order)
    along_x = {key: np.zeros_like(kernels[key]) for key in KERNEL_KEYS}
    along_y = {key: np.zeros_like(kernels[key]) for key in KERNEL_KEYS}
    for offset, weight in zip(offsets, weights):
        if weight == 0.0:
            continue
        moved_x = kernel_fn(x + offset * step, x)
        moved_y = kernel_fn(x, x + offset * step)
        for key in KERNEL_KEYS:
            along_x[key] += weight / step * moved_x[key]
            along_y[key] += weight / step * moved_y[key]

    maps = _residual_maps(kernels, along_x, along_y, w1, w2)
    result = {key: sup_norm(value) for key, value in maps.items()}
    logger.debug(f"Stencil constraint residuals (step {step:g}): {result}")
    return result
