"""Numeric realisation of NcPoly and BlockMatrix objects on sampled fields."""

import logging
from functools import reduce
from typing import Dict

import numpy as np

from src.ncalg.blocks import BlockMatrix
from src.ncalg.polynomial import Base, NcPoly, Symbol, coeff_to_complex
from src.utils.errors import ResidualAuxiliarySymbols, StencilOutOfRange
from src.utils.grid import GridField
from src.verify.fd import FdScheme, fd_derivative

logger = logging.getLogger(__name__)


class FieldSampler:
    """
    Caches finite-difference derivatives of u and u.hat for one field.

    Every symbol evaluates to an array of shape (T, X, rows, cols); derivative
    boundary layers are NaN under the shrink-domain policy.
    """

    def __init__(self, field: GridField, scheme: FdScheme):
        self.field = field
        self.scheme = scheme
        self._cache: Dict[Symbol, np.ndarray] = {}

    def dim(self, name: str) -> int:
        return self.field.dims[name]

    def symbol(self, sym: Symbol) -> np.ndarray:
        if sym.is_auxiliary:
            raise ResidualAuxiliarySymbols(f"Cannot evaluate auxiliary symbol {sym.to_text()} on a field")
        if sym not in self._cache:
            samples = self.field.u if sym.base == Base.U else self.field.uhat
            if sym.deriv_order == 0:
                self._cache[sym] = samples
            else:
                self._cache[sym] = fd_derivative(samples, 1, sym.deriv_order, self.scheme, self.field.dx)
        return self._cache[sym]

    def poly(self, p: NcPoly) -> np.ndarray:
        rows, cols = self.dim(p.rows), self.dim(p.cols)
        leading = self.field.u.shape[:2]
        total = np.zeros(leading + (rows, cols), dtype=complex)
        for word, coefficient in p.terms:
            c = coeff_to_complex(coefficient)
            if not word:
                total = total + c * np.eye(rows, dtype=complex)
                continue
            product = reduce(np.matmul, [self.symbol(s) for s in word])
            total = total + c * product
        return total

    def block(self, matrix: BlockMatrix) -> np.ndarray:
        """Assemble the full (T, X, N+M, N+M) array of a block matrix."""
        n, m = self.dim("N"), self.dim("M")
        leading = self.field.u.shape[:2]
        out = np.zeros(leading + (n + m, n + m), dtype=complex)
        bounds = ((0, n), (n, n + m))
        for i in range(2):
            for j in range(2):
                r0, r1 = bounds[i]
                c0, c1 = bounds[j]
                out[..., r0:r1, c0:c1] = self.poly(matrix[i, j])
        return out


def nc_eval_grid(p: NcPoly, field: GridField, fd: FdScheme) -> np.ndarray:
    """Evaluate p at every grid point; returns shape (T, X, rows, cols)."""
    return FieldSampler(field, fd).poly(p)


def block_eval_grid(matrix: BlockMatrix, field: GridField, fd: FdScheme) -> np.ndarray:
    return FieldSampler(field, fd).block(matrix)


def nc_eval(p: NcPoly, field: GridField, x_index: int, fd: FdScheme, t_index: int = 0) -> np.ndarray:
    """
    Evaluate p at a single grid point.

    Args:
        p: Polynomial in u, u.hat and their derivatives
        field: Sampled fields
        x_index: Spatial index
        fd: Finite-difference scheme for the derivative symbols
        t_index: Time index

    Returns:
        Complex matrix of p's numeric shape

    Raises:
        StencilOutOfRange: If the stencil for the highest derivative leaves the grid
    """
    n_x = len(field.x)
    if not 0 <= x_index < n_x:
        raise IndexError(f"x_index {x_index} outside grid of {n_x} points")
    d_max = p.max_deriv_order()
    snapshot = field.snapshot(t_index)

    if fd.boundary == "one-sided":
        return FieldSampler(snapshot, fd).poly(p)[0, x_index]

    hw = fd.half_width(d_max)
    if x_index - hw < 0 or x_index + hw >= n_x:
        raise StencilOutOfRange(
            f"Stencil of half-width {hw} at x_index {x_index} leaves the grid of {n_x} points"
        )
    window = slice(x_index - hw, x_index + hw + 1)
    local = GridField(
        x=snapshot.x[window],
        t=snapshot.t,
        u=snapshot.u[:, window],
        uhat=snapshot.uhat[:, window],
    )
    return FieldSampler(local, fd).poly(p)[0, hw]
