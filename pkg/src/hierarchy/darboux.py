"""
Darboux transforms of the hierarchy: first-order differential dressing
closed forms, recursion checks for general Darboux matrices, and the
matrix Darboux-Backlund relations on sampled fields.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.hierarchy.lax import AuxiliaryRules
from src.ncalg.blocks import BlockMatrix, commutator
from src.utils.errors import GridMismatch, PoleAtX, ShapeMismatch
from src.utils.grid import GridField, uniform_step
from src.verify.fd import FdScheme, fd_derivative, sup_norm

logger = logging.getLogger(__name__)

POLE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class DarbouxOneSoliton:
    """
    Parameters of the scalar first-order Darboux one-soliton.

    The (A, C) closed forms need w1 / (w2 * xi1) = 1; the dual (D, B) pair
    needs w2 / (w1 * xi2) = 1.
    """

    k1: complex
    xi1: complex
    w1: float
    w2: float
    x0: float = 0.0
    c0: complex = 1.0
    k2: complex = 0.0
    xi2: complex = 1.0

    def __post_init__(self):
        if self.w1 == self.w2:
            raise ValueError(f"w1 and w2 must differ, got {self.w1}")
        if self.w1 == 0 or self.w2 == 0:
            raise ValueError("w1 and w2 must be non-zero")
        if self.xi1 == 0:
            raise ValueError("xi1 must be non-zero")

    @property
    def h(self) -> float:
        return self.w1 - self.w2

    @classmethod
    def matched(cls, k1: complex, w1: float, w2: float, x0: float = 0.0, c0: complex = 1.0,
                k2: complex = 0.0) -> "DarbouxOneSoliton":
        """Parameters with xi1 = w1/w2 and xi2 = w2/w1 so both closed forms apply."""
        return cls(k1=k1, xi1=w1 / w2, w1=w1, w2=w2, x0=x0, c0=c0, k2=k2, xi2=w2 / w1)


def _check_ratio(value: complex, name: str) -> None:
    if abs(value - 1) > 1e-12:
        raise ValueError(f"Closed form requires {name} = 1, got {value}")


def fundamental_darboux_ode_solution(p: DarbouxOneSoliton, x) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed-form (A, C) of the first-order differential Darboux.

    A = -(k1/xi1) e / (1 - e), C = C0 / (1 - e), e = exp((h k1 / w1)(x - x0)).
    They solve d(A) = (h/w1)(k1 A - xi1 A^2) and d(C) = -(h/w2) C A.

    Raises:
        PoleAtX: If 1 - e vanishes at any requested point
    """
    _check_ratio(p.w1 / (p.w2 * p.xi1), "w1/(w2 xi1)")
    x = np.asarray(x, dtype=float)
    e = np.exp((p.h * p.k1 / p.w1) * (x - p.x0))
    denominator = 1 - e
    if np.any(np.abs(denominator) < POLE_TOLERANCE):
        raise PoleAtX(f"Darboux closed form has a pole near x0 = {p.x0}")
    a = -(p.k1 / p.xi1) * e / denominator
    c = p.c0 / denominator
    return a, c


def fundamental_darboux_dual_solution(p: DarbouxOneSoliton, x) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed-form (D, B) pair: D = -(k2/xi2) e / (1 - e), B = C0 / (1 - e),
    e = exp(-(h k2 / w2)(x - x0)).
    """
    _check_ratio(p.w2 / (p.w1 * p.xi2), "w2/(w1 xi2)")
    x = np.asarray(x, dtype=float)
    e = np.exp(-(p.h * p.k2 / p.w2) * (x - p.x0))
    denominator = 1 - e
    if np.any(np.abs(denominator) < POLE_TOLERANCE):
        raise PoleAtX(f"Dual Darboux closed form has a pole near x0 = {p.x0}")
    d = -(p.k2 / p.xi2) * e / denominator
    b = p.c0 / denominator
    return d, b


@dataclass(frozen=True, eq=False)
class DressingBlocks:
    """Sampled Darboux blocks on an x grid: a (X,N,N), b (X,N,M), c (X,M,N), d (X,M,M)."""

    x: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        length = len(self.x)
        for name in ("a", "b", "c", "d"):
            block = np.asarray(getattr(self, name), dtype=complex)
            if block.ndim == 1:
                block = block[:, None, None]
            if block.shape[0] != length:
                raise GridMismatch(f"Block {name} has {block.shape[0]} samples, grid has {length}")
            object.__setattr__(self, name, block)
        n, m = self.a.shape[1], self.d.shape[1]
        expected = {"a": (n, n), "b": (n, m), "c": (m, n), "d": (m, m)}
        for name, shape in expected.items():
            if getattr(self, name).shape[1:] != shape:
                raise ShapeMismatch(f"Block {name} has shape {getattr(self, name).shape[1:]}, expected {shape}")

    def scaled(self, a=1.0, b=1.0, c=1.0, d=1.0) -> "DressingBlocks":
        return DressingBlocks(self.x, self.a * a, self.b * b, self.c * c, self.d * d)


def fundamental_darboux_blocks(p: DarbouxOneSoliton, x) -> DressingBlocks:
    """
    Scalar solution (A, B, C, D) of the first-order differential Darboux
    constraints: B = (k1 A - xi1 A^2) / C, D = k1 - xi1 A.
    """
    a, c = fundamental_darboux_ode_solution(p, x)
    b = (p.k1 * a - p.xi1 * a ** 2) / c
    d = p.k1 - p.xi1 * a
    return DressingBlocks(np.asarray(x, dtype=float), a, b, c, d)


def fundamental_constraint_residual(blocks: DressingBlocks, w1: float, w2: float,
                                    scheme: Optional[FdScheme] = None) -> Dict[str, float]:
    """
    Sup-norm residuals of the first-order differential Darboux constraints
    w1 A' - h B C, w2 D' + h C B, w1 B' - h B D, w2 C' + h C A.
    """
    scheme = scheme or FdScheme()
    h = w1 - w2
    dx = uniform_step(blocks.x, "x")

    def d(values):
        return fd_derivative(values, 0, 1, scheme, dx)

    return {
        "a": sup_norm(w1 * d(blocks.a) - h * blocks.b @ blocks.c),
        "d": sup_norm(w2 * d(blocks.d) + h * blocks.c @ blocks.b),
        "b": sup_norm(w1 * d(blocks.b) - h * blocks.b @ blocks.d),
        "c": sup_norm(w2 * d(blocks.c) + h * blocks.c @ blocks.a),
    }


def lax_normalised_blocks(p: DarbouxOneSoliton, x) -> Tuple[DressingBlocks, GridField]:
    """
    Map the first-order Darboux solution to the Backlund normalisation.

    Returns the blocks (-(h/w2) A, (h/w1) B, (h/w2) C, -(h/w1) D) and the
    dressed fields u = C-block, u.hat = -B-block on a single time level.
    """
    raw = fundamental_darboux_blocks(p, x)
    h = p.h
    blocks = raw.scaled(a=-h / p.w2, b=h / p.w1, c=h / p.w2, d=-h / p.w1)
    field = GridField(
        x=blocks.x,
        t=[0.0],
        u=blocks.c[None],
        uhat=-blocks.b[None],
        label="darboux-dressed",
    )
    return blocks, field


# ---------------------------------------------------------------------------
# Symbolic recursion checks
# ---------------------------------------------------------------------------

def check_general_darboux(
    m: int,
    coeffs: Sequence[BlockMatrix],
    u_candidate: BlockMatrix,
    w1,
    w2,
    rules: AuxiliaryRules,
) -> List[BlockMatrix]:
    """
    Residuals of the order-m differential Darboux recursion
    (weight matrix W = diag(w1 I, w2 I)):

        W b_{k-1} - b_{k-1} W + W d(b_k) + U b_k,  k = 1 .. m-1
        U b_0 + W d(b_0)
        W b_{m-1} - b_{m-1} W + U

    Auxiliary symbols are differentiated with ``rules`` and eliminated where
    possible. All residuals zero means the candidate is a Darboux of order m.

    Raises:
        ShapeMismatch: If the coefficient count does not match m
    """
    if m < 1:
        raise ValueError(f"Darboux order must be positive, got {m}")
    if len(coeffs) != m:
        raise ShapeMismatch(f"Expected {m} coefficients b_0..b_{m - 1}, got {len(coeffs)}")
    weights = BlockMatrix.weights(w1, w2)
    derivative_rules = rules.derivative_rules()

    def finish(matrix: BlockMatrix) -> BlockMatrix:
        return rules.eliminate_block(matrix, strict=False)

    residuals = []
    for k in range(1, m):
        previous, current = coeffs[k - 1], coeffs[k]
        residual = (
            weights.matmul(previous) - previous.matmul(weights)
            + weights.matmul(current.derive(derivative_rules))
            + u_candidate.matmul(current)
        )
        residuals.append(finish(residual))
    residuals.append(finish(u_candidate.matmul(coeffs[0]) + weights.matmul(coeffs[0].derive(derivative_rules))))
    last = coeffs[m - 1]
    residuals.append(finish(weights.matmul(last) - last.matmul(weights) + u_candidate))
    return residuals


def check_lambda_darboux(coeffs: Sequence[BlockMatrix], rules: Optional[AuxiliaryRules] = None) -> List[BlockMatrix]:
    """
    Residuals of the lambda-series Darboux recursion with Q = [[0, u.hat], [u, 0]]:

        Q - [g_{m-1}, Sigma] / 2
        d(g_0) - Q g_0
        d(g_k) - [Sigma, g_{k-1}] / 2 - Q g_k,  k = 1 .. m-1
    """
    if not coeffs:
        raise ValueError("At least one coefficient is required")
    rules = rules or AuxiliaryRules.lax_rules()
    derivative_rules = rules.derivative_rules()
    sigma = BlockMatrix.sigma()
    q = BlockMatrix.potential()

    def finish(matrix: BlockMatrix) -> BlockMatrix:
        return rules.eliminate_block(matrix, strict=False)

    residuals = [finish(q - commutator(coeffs[-1], sigma).scale(Fraction(1, 2)))]
    residuals.append(finish(coeffs[0].derive(derivative_rules) - q.matmul(coeffs[0])))
    for k in range(1, len(coeffs)):
        residual = (
            coeffs[k].derive(derivative_rules)
            - commutator(sigma, coeffs[k - 1]).scale(Fraction(1, 2))
            - q.matmul(coeffs[k])
        )
        residuals.append(finish(residual))
    return residuals


# ---------------------------------------------------------------------------
# Numeric Backlund relations
# ---------------------------------------------------------------------------

def backlund_residual(
    fields: GridField,
    seed: GridField,
    blocks: DressingBlocks,
    scheme: Optional[FdScheme] = None,
    t_index: int = 0,
) -> Dict[str, float]:
    """
    Sup-norm residuals of the matrix Darboux-Backlund relations

        B + (u.hat - u.hat0),  C - (u - u0),
        d(A) - (u.hat C - B u0),  d(D) - (u B - C u.hat0),
        d(B) - (u.hat D - A u.hat0),  d(C) - (u A - D u0).

    Raises:
        GridMismatch: If the inputs are not sampled on one grid
    """
    scheme = scheme or FdScheme()
    fields.check_same_grid(seed)
    if len(blocks.x) != len(fields.x) or not np.allclose(blocks.x, fields.x):
        raise GridMismatch("Darboux blocks and fields use different x grids")
    if blocks.a.shape[1] != fields.n or blocks.d.shape[1] != fields.m:
        raise ShapeMismatch(
            f"Blocks are for N={blocks.a.shape[1]}, M={blocks.d.shape[1]}; fields have N={fields.n}, M={fields.m}"
        )

    u, uhat = fields.u[t_index], fields.uhat[t_index]
    u0, uhat0 = seed.u[t_index], seed.uhat[t_index]
    a, b, c, d = blocks.a, blocks.b, blocks.c, blocks.d
    dx = fields.dx

    def deriv(values):
        return fd_derivative(values, 0, 1, scheme, dx)

    residuals = {
        "b_identity": sup_norm(b + (uhat - uhat0)),
        "c_identity": sup_norm(c - (u - u0)),
        "a_flow": sup_norm(deriv(a) - (uhat @ c - b @ u0)),
        "d_flow": sup_norm(deriv(d) - (u @ b - c @ uhat0)),
        "b_flow": sup_norm(deriv(b) - (uhat @ d - a @ uhat0)),
        "c_flow": sup_norm(deriv(c) - (u @ a - d @ u0)),
    }
    logger.debug(f"Backlund residuals: {residuals}")
    return residuals
