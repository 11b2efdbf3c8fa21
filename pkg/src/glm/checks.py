"""Consistency checks on a solved GLM system."""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from src.glm.kernel import GlmSolution, Kernel2D, simpson_weights, trapezoid_weights
from src.utils.errors import GridMismatch, SingularA
from src.verify.constraints import constraint_residuals
from src.verify.fd import FdScheme, fd_derivative, sup_norm

logger = logging.getLogger(__name__)

TEST_CENTERS = (0.25, 0.5, 0.75)
RICCATI_VARIANTS = ("plain", "hat")

QUADRATURE_RULES = {"trapezoid": trapezoid_weights, "simpson": simpson_weights}


@dataclass
class FactorizationReport:
    """Operator identity K+ + F + K+ F = K- applied to test vectors."""

    residual: float
    diagonal_mismatch: float
    k_minus: Kernel2D
    rule: str = "trapezoid"

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "diagonal_mismatch": self.diagonal_mismatch,
            "k_minus_outside_support": self.k_minus.outside_support(),
            "rule": self.rule,
        }


def _assemble(top_left, top_right, bottom_left, bottom_right) -> np.ndarray:
    """2x2 block kernel (G, G, N+M, N+M)."""
    top = np.concatenate([top_left, top_right], axis=-1)
    bottom = np.concatenate([bottom_left, bottom_right], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def _test_vectors(x: np.ndarray, size: int) -> np.ndarray:
    """Gaussian bumps times unit vectors; shape (V, G, size)."""
    span = x[-1] - x[0]
    vectors = []
    for center in TEST_CENTERS:
        bump = np.exp(-((x - (x[0] + center * span)) / (0.15 * span)) ** 2)
        for k in range(size):
            vector = np.zeros((len(x), size), dtype=complex)
            vector[:, k] = bump
            vectors.append(vector)
    return np.stack(vectors)


def factorization_check(solution: GlmSolution, f: Kernel2D, f_hat: Kernel2D,
                        rule: str = "trapezoid") -> FactorizationReport:
    """
    Build K-(x, z) = F(x, z) + int_x^X K+(x, y) F(y, z) dy for z <= x and measure
    sup |K+ g + F g + K+(F g) - K- g| over Gaussian test vectors g.

    Integrals run over [x_i, X] (upper), [x_0, x_i] (lower) and [x_0, X] with
    ``rule``. With the trapezoid rule of the solve the discrete identity holds to
    round-off, so the residual measures how well the rows were solved; Simpson
    weights expose the O(dx^2) quadrature error instead.
    """
    if rule not in QUADRATURE_RULES:
        raise ValueError(f"Unknown rule '{rule}'; expected one of {sorted(QUADRATURE_RULES)}")
    weights_for = QUADRATURE_RULES[rule]
    x = solution.x
    g = len(x)
    dx = solution.b.dx
    n_dim, m_dim = f.block_shape
    k_plus = _assemble(solution.a.values, solution.b.values, solution.c.values, solution.d.values)
    zeros_n = np.zeros((g, g, n_dim, n_dim), dtype=complex)
    zeros_m = np.zeros((g, g, m_dim, m_dim), dtype=complex)
    big_f = _assemble(zeros_n, f.values, f_hat.values, zeros_m)
    size = n_dim + m_dim

    k_minus = np.zeros_like(k_plus)
    for i in range(g):
        upper = weights_for(g - i, dx)
        # sum_k w_k K+(i, k) F(k, j) for j <= i
        weighted = k_plus[i, i:] * upper[:, None, None]
        k_minus[i, :i + 1] = big_f[i, :i + 1] + np.tensordot(weighted, big_f[i:, :i + 1], axes=([0, 2], [0, 2])).transpose(1, 0, 2)
    k_minus_kernel = Kernel2D(x, k_minus, "lower")
    diagonal_mismatch = float(np.max(np.abs(k_minus_kernel.diagonal() + k_plus[np.arange(g), np.arange(g)])))

    full = weights_for(g, dx)
    residual = 0.0
    for vector in _test_vectors(x, size):
        f_g = np.einsum("ijab,j,jb->ia", big_f, full, vector)
        k_plus_g = np.zeros((g, size), dtype=complex)
        k_plus_f_g = np.zeros((g, size), dtype=complex)
        k_minus_g = np.zeros((g, size), dtype=complex)
        for i in range(g):
            upper = weights_for(g - i, dx)
            lower = weights_for(i + 1, dx)
            k_plus_g[i] = np.einsum("jab,j,jb->a", k_plus[i, i:], upper, vector[i:])
            k_plus_f_g[i] = np.einsum("jab,j,jb->a", k_plus[i, i:], upper, f_g[i:])
            k_minus_g[i] = np.einsum("jab,j,jb->a", k_minus_kernel.values[i, :i + 1], lower, vector[:i + 1])
        residual = max(residual, sup_norm(k_plus_g + f_g + k_plus_f_g - k_minus_g))

    logger.info(f"Factorization residual ({rule}) {residual:.3e} (diagonal mismatch {diagonal_mismatch:.3e})")
    return FactorizationReport(residual=residual, diagonal_mismatch=diagonal_mismatch, k_minus=k_minus_kernel, rule=rule)


def richardson_solution(fine: GlmSolution, coarse: GlmSolution) -> GlmSolution:
    """
    (4 K_dx - K_2dx) / 3 on the coarse grid.

    The trapezoid error of the row solves expands in even powers of dx, so the
    combination is O(dx^4) at the shared points.

    Raises:
        GridMismatch: If the coarse grid is not every other fine point up to the same X
    """
    shared = fine.x[::2]
    if len(shared) != len(coarse.x) or not np.allclose(shared, coarse.x):
        raise GridMismatch(f"Coarse grid ({len(coarse.x)} points) is not every other point of the fine grid")
    blocks = {}
    for name, kernel in fine.blocks().items():
        coarse_kernel = coarse.blocks()[name]
        blocks[name] = Kernel2D(coarse.x, (4 * kernel.values[::2, ::2] - coarse_kernel.values) / 3, "upper")
    return GlmSolution(a=blocks["A"], b=blocks["B"], c=blocks["C"], d=blocks["D"], w1=fine.w1, w2=fine.w2)


def glm_constraint_residuals(solution: GlmSolution, scheme: Optional[FdScheme] = None,
                             coarse: Optional[GlmSolution] = None) -> Dict[str, float]:
    """
    Kernel-equation residuals on the upper support of the GLM kernels.

    With ``coarse`` (the same system solved on every other point) the kernels are
    Richardson-extrapolated first, which leaves the FD error as the leading term.
    """
    if coarse is not None:
        solution = richardson_solution(solution, coarse)
    kernels = {key: kernel.values for key, kernel in solution.blocks().items()}
    return constraint_residuals(kernels, solution.x, solution.w1, solution.w2, scheme, support="upper")


def riccati_kernel(numerator: Kernel2D, operator: Kernel2D) -> np.ndarray:
    """
    Kernel of numerator (id + operator)^-1 for upper-supported kernels:
    gamma(x, z) + int_x^z gamma(x, y) operator(y, z) dy = numerator(x, z), trapezoid in y.

    Raises:
        SingularA: If some I + (dx/2) operator(z, z) is singular
    """
    g = numerator.size
    dx = numerator.dx
    rows, cols = numerator.block_shape
    values = numerator.values
    op = operator.values
    gamma = np.zeros_like(values)
    identity = np.eye(cols)
    for j in range(g):
        # all rows i <= j at once; gamma[i, k] vanishes for k < i
        correction = np.einsum("ikab,kbc->iac", gamma[:j + 1, :j], op[:j, j])
        head = np.einsum("iab,ibc->iac", gamma[np.arange(j + 1), np.arange(j + 1)], op[:j + 1, j])
        rhs = values[:j + 1, j] - dx * (correction - 0.5 * head)
        pivot = identity + 0.5 * dx * op[j, j]
        try:
            inverse = np.linalg.inv(pivot)
        except np.linalg.LinAlgError:
            raise SingularA(f"id + A is singular at x={numerator.x[j]:.6g}")
        if np.linalg.cond(pivot) > 1e12:
            raise SingularA(f"id + A is singular at x={numerator.x[j]:.6g}")
        gamma[:j + 1, j] = rhs @ inverse
        gamma[j, j] = values[j, j]
    return gamma


def integral_riccati_residual(solution: GlmSolution, scheme: Optional[FdScheme] = None,
                              variant: str = "plain") -> Dict[str, float]:
    """
    Check the kernel form of the Riccati equation.

    plain: gamma = C (id + A)^-1,  u = -h gamma(x, x),
           w1 d_z gamma + w2 d_x gamma = int_x^z gamma(x, y) u.hat(y) gamma(y, z) dy
    hat:   gamma = B (id + D)^-1,  u.hat = h gamma(x, x),
           w1 d_x gamma + w2 d_z gamma = int_x^z gamma(x, y) u(y) gamma(y, z) dy

    Returns:
        {"diagonal": ..., "riccati": ...} sup-norm residuals

    Raises:
        SingularA: If id + A (or id + D) is not invertible on the grid
    """
    if variant not in RICCATI_VARIANTS:
        raise ValueError(f"Unknown variant '{variant}'; expected one of {RICCATI_VARIANTS}")
    scheme = scheme or FdScheme()
    x = solution.x
    g = len(x)
    dx = solution.b.dx
    h = solution.h

    if variant == "plain":
        gamma = riccati_kernel(solution.c, solution.a)
        middle = solution.uhat
        diagonal = sup_norm(solution.u + h * gamma[np.arange(g), np.arange(g)])
        weight_x, weight_z = solution.w2, solution.w1
    else:
        gamma = riccati_kernel(solution.b, solution.d)
        middle = solution.u
        diagonal = sup_norm(solution.uhat - h * gamma[np.arange(g), np.arange(g)])
        weight_x, weight_z = solution.w1, solution.w2

    # int_x^z with half weights at both ends; gamma's support restricts k to [i, j]
    left = np.einsum("ikab,kbc->ikac", gamma, middle)
    full_sum = np.tensordot(left, gamma, axes=([1, 3], [0, 2])).transpose(0, 2, 1, 3)
    idx = np.arange(g)
    diag_gamma = gamma[idx, idx]
    ends = np.einsum("iab,ibc,ijcd->ijad", diag_gamma, middle, gamma) + np.einsum(
        "ijab,jbc,jcd->ijad", gamma, middle, diag_gamma
    )
    integral = dx * (full_sum - 0.5 * ends)

    lhs = weight_x * fd_derivative(gamma, 0, 1, scheme, dx) + weight_z * fd_derivative(gamma, 1, 1, scheme, dx)
    residual_map = lhs - integral
    hw = scheme.half_width(1)
    i, j = np.indices((g, g))
    residual_map[(j - i) < hw] = np.nan
    riccati = sup_norm(residual_map)
    logger.info(f"Integral Riccati ({variant}): diagonal {diagonal:.3e}, kernel equation {riccati:.3e}")
    return {"diagonal": diagonal, "riccati": riccati}
