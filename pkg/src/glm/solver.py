"""
Truncated GLM system on a uniform grid.

For every row x_i the unknowns B(x_i, .) and A(x_i, .) on the points x_j >= x_i solve
    B(x, z) + f(x, z) + int_x^X A(x, y) f(y, z) dy = 0,
    A(x, z) + int_x^X B(x, y) f.hat(y, z) dy = 0,
and C, D solve the same pair with f and f.hat exchanged. Integrals use the
composite trapezoid rule.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from src.glm.kernel import GlmSolution, Kernel2D, trapezoid_weights
from src.utils.errors import NeumannDivergence, SingularResolvent, TruncationError
from src.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

DECAY_GATE = 1e-8
SINGULAR_DET = 1e-12
NEUMANN_TERMS = 25
ROUTES = ("inverse", "neumann")


def check_decay(f: Kernel2D, f_hat: Kernel2D, gate: float = DECAY_GATE) -> float:
    """
    Raises:
        TruncationError: If max(|f(X, X)|, |f.hat(X, X)|) is not below ``gate``
    """
    end = max(float(np.max(np.abs(f.values[-1, -1]))), float(np.max(np.abs(f_hat.values[-1, -1]))))
    if end >= gate:
        raise TruncationError(
            f"Kernel does not decay at the truncation point x={f.x[-1]:.4g}: {end:.2e} >= {gate:.0e}"
        )
    return end


def _weighted_block(kernel: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """(n, n, r, c) kernel -> (n r, n c) matrix with row blocks k scaled by weights[k]."""
    n, _, rows, cols = kernel.shape
    matrix = np.transpose(kernel, (0, 2, 1, 3)).reshape(n * rows, n * cols)
    return matrix * np.repeat(weights, rows)[:, None]


def _row_vector(kernel_row: np.ndarray) -> np.ndarray:
    """(n, r, c) -> (r, n c)."""
    n, rows, cols = kernel_row.shape
    return np.transpose(kernel_row, (1, 0, 2)).reshape(rows, n * cols)


def _row_blocks(vector: np.ndarray, n: int, cols: int) -> np.ndarray:
    """(r, n c) -> (n, r, c)."""
    rows = vector.shape[0]
    return np.transpose(vector.reshape(rows, n, cols), (1, 0, 2))


def _check_determinant(matrix: np.ndarray, what: str, x: float) -> None:
    sign, log_abs = np.linalg.slogdet(matrix)
    if sign == 0 or log_abs < np.log(SINGULAR_DET):
        raise SingularResolvent(f"{what} is numerically singular at x={x:.6g}", float(log_abs))



def _pair_coupling(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """
    Flattened coupling H of the pair [P | Q] per grid point: block (k, j) is
    [[0, second(k, j)], [first(k, j), 0]], so the row system reads [P | Q] (I + W H) = [-rhs | 0].
    """
    g, _, p_dim, q_dim = first.shape
    width = p_dim + q_dim
    coupling = np.zeros((g, g, width, width), dtype=complex)
    coupling[:, :, :q_dim, q_dim:] = second
    coupling[:, :, q_dim:, :q_dim] = first
    return np.transpose(coupling, (0, 2, 1, 3)).reshape(g * width, g * width)


def _log_abs_det(matrix: np.ndarray) -> float:
    sign, log_abs = np.linalg.slogdet(matrix)
    return float(log_abs) if sign != 0 else -np.inf


def _sweep_pair(first: np.ndarray, second: np.ndarray, rhs: np.ndarray, x: np.ndarray,
                what: str) -> Tuple[np.ndarray, np.ndarray]:
    """
    [P | Q] on every row i, solving
        P + int_x^X Q(x, y) first(y, .) dy = -rhs(x, .),  Q + int_x^X P(x, y) second(y, .) dy = 0
    with the trapezoid rule on the row's points j >= i.

    The inverse of the row system is carried from row i + 1 to row i: a rank-p update
    raises the weight at x_{i+1} to its interior value, then x_i is bordered on through
    its Schur complement. Each row costs O((G p)^2 p) instead of a fresh dense solve.

    first: (G, G, p, q); second: (G, G, q, p); rhs: (G, G, r, q).
    Returns P (G, G, r, q) and Q (G, G, r, p), zero below the diagonal.

    Raises:
        SingularResolvent: If some row system has |det| < 1e-12
    """
    g, _, p_dim, q_dim = first.shape
    width = p_dim + q_dim
    rows = rhs.shape[2]
    dx = float(x[1] - x[0])
    half = dx / 2
    coupling = _pair_coupling(first, second)
    inverse = np.zeros_like(coupling)
    eye = np.eye(width)
    interior = np.full(g, dx)
    interior[-1] = half

    p_out = np.zeros((g, g, rows, q_dim), dtype=complex)
    q_out = np.zeros((g, g, rows, p_dim), dtype=complex)
    log_det = 0.0
    for i in range(g - 1, -1, -1):
        lo, hi = i * width, (i + 1) * width
        if i == g - 1:
            # a single point carries zero trapezoid weight
            inverse[lo:, lo:] = eye
        else:
            trailing = inverse[hi:, hi:]
            # weight at x_{i+1}: dx/2 -> dx (0 -> dx/2 when it is X itself)
            row = coupling[hi:hi + width, hi:]
            column = trailing[:, :width] * half
            row_inverse = row @ trailing
            capacitance = eye + row_inverse[:, :width] * half
            trailing -= column @ np.linalg.solve(capacitance, row_inverse)
            log_det += _log_abs_det(capacitance)

            # border x_i with weight dx/2
            corner = eye + half * coupling[lo:hi, lo:hi]
            top = half * coupling[lo:hi, hi:]
            left = coupling[hi:, lo:hi] * np.repeat(interior[i + 1:], width)[:, None]
            inverse_left = trailing @ left
            top_inverse = top @ trailing
            schur = corner - top @ inverse_left
            log_det += _log_abs_det(schur)
            if log_det < np.log(SINGULAR_DET):
                raise SingularResolvent(f"{what} is numerically singular at x={x[i]:.6g}", log_det)
            schur_inverse = np.linalg.inv(schur)
            spread = schur_inverse @ top_inverse
            trailing += inverse_left @ spread
            inverse[lo:hi, lo:hi] = schur_inverse
            inverse[lo:hi, hi:] = -spread
            inverse[hi:, lo:hi] = -inverse_left @ schur_inverse

        count = g - i
        target = np.zeros((rows, count, width), dtype=complex)
        target[:, :, :q_dim] = -np.transpose(rhs[i, i:], (1, 0, 2))
        solution = (target.reshape(rows, count * width) @ inverse[lo:, lo:]).reshape(rows, count, width)
        solution = np.transpose(solution, (1, 0, 2))
        p_out[i, i:] = solution[..., :q_dim]
        q_out[i, i:] = solution[..., q_dim:]
    return p_out, q_out


def solve_glm(f: Kernel2D, f_hat: Kernel2D, w1: complex, w2: complex,
              decay_gate: float = DECAY_GATE, workers: Optional[int] = None) -> GlmSolution:
    """
    Solve the truncated GLM system for every row.

    Args:
        f: Kernel f (G, G, N, M) on [x_0, X]
        f_hat: Kernel f.hat (G, G, M, N) on the same grid
        w1, w2: Weights fixing h = w1 - w2 for the field reconstruction
        decay_gate: Truncation admissibility threshold
        workers: Thread count (capped by AKNS_THREADS); the B/A and C/D sweeps run side by side

    Raises:
        TruncationError: If the kernels have not decayed at X
        SingularResolvent: If a row system is numerically singular
    """
    if f.size != f_hat.size or not np.allclose(f.x, f_hat.x):
        raise ValueError("f and f_hat must be sampled on the same grid")
    if f.block_shape != f_hat.block_shape[::-1]:
        raise ValueError(f"f is {f.block_shape} but f_hat is {f_hat.block_shape}")
    check_decay(f, f_hat, decay_gate)

    g = f.size
    n_dim, m_dim = f.block_shape
    logger.info(f"Solving GLM rows: {g} (N={n_dim}, M={m_dim}, dx={f.dx:.4g})")

    def sweep(pair):
        first, second, what = pair
        return _sweep_pair(first.values, second.values, first.values, f.x, what)

    # [B | A]: B + A (w f) = -f,  B (w f.hat) + A = 0
    # [C | D]: C + D (w f.hat) = -f.hat,  C (w f) + D = 0
    (b, a), (c, d) = parallel_map(sweep, [(f, f_hat, "B/A system"), (f_hat, f, "C/D system")], workers)

    x = f.x
    return GlmSolution(
        a=Kernel2D(x, a, "upper"),
        b=Kernel2D(x, b, "upper"),
        c=Kernel2D(x, c, "upper"),
        d=Kernel2D(x, d, "upper"),
        w1=w1,
        w2=w2,
    )


def _neumann_inverse(operator: np.ndarray, terms: int) -> np.ndarray:
    """id + sum_{k <= terms} operator^k."""
    total = np.eye(operator.shape[0], dtype=complex)
    power = np.eye(operator.shape[0], dtype=complex)
    for _ in range(terms):
        power = power @ operator
        total = total + power
    return total


def resolvent_fields(f: Kernel2D, f_hat: Kernel2D, route: str = "inverse", terms: int = NEUMANN_TERMS,
                     decay_gate: float = DECAY_GATE, workers: Optional[int] = None) -> Tuple[Kernel2D, Kernel2D]:
    """
    B = -f g^-1 and C = -f.hat g.hat^-1 with g = id - f.hat f, g.hat = id - f f.hat
    discretised on each row's range [x_i, X].

    Args:
        route: "inverse" (dense solve) or "neumann" (truncated series with ``terms`` powers)

    Raises:
        SingularResolvent: If g or g.hat is numerically singular
        NeumannDivergence: If the Neumann route is requested while ||f.hat f|| >= 1
    """
    if route not in ROUTES:
        raise ValueError(f"Unknown route '{route}'; expected one of {ROUTES}")
    check_decay(f, f_hat, decay_gate)
    g = f.size
    n_dim, m_dim = f.block_shape
    dx = f.dx

    def operators(i: int):
        weights = trapezoid_weights(g - i, dx)
        p = _weighted_block(f.values[i:, i:], weights)
        p_hat = _weighted_block(f_hat.values[i:, i:], weights)
        return p, p_hat

    if route == "neumann":
        p, p_hat = operators(0)
        norm = max(np.linalg.norm(p_hat @ p), np.linalg.norm(p @ p_hat))
        if norm >= 1:
            raise NeumannDivergence(f"||f.hat f|| = {norm:.3g} >= 1; the Neumann series does not contract")
        if norm >= 0.5:
            logger.warning(f"Neumann route with ||f.hat f|| = {norm:.3g}; convergence is slow")

    def solve_row(i: int):
        p, p_hat = operators(i)
        n = g - i
        resolvent = np.eye(n * m_dim) - p_hat @ p
        resolvent_hat = np.eye(n * n_dim) - p @ p_hat
        rhs = _row_vector(f.values[i, i:])
        rhs_hat = _row_vector(f_hat.values[i, i:])
        if route == "inverse":
            _check_determinant(resolvent, "id - f.hat f", f.x[i])
            _check_determinant(resolvent_hat, "id - f f.hat", f.x[i])
            b_row = -np.linalg.solve(resolvent.T, rhs.T).T
            c_row = -np.linalg.solve(resolvent_hat.T, rhs_hat.T).T
        else:
            b_row = -rhs @ _neumann_inverse(p_hat @ p, terms)
            c_row = -rhs_hat @ _neumann_inverse(p @ p_hat, terms)
        return i, _row_blocks(b_row, n, m_dim), _row_blocks(c_row, n, n_dim)

    logger.info(f"Resolvent rows ({route}): {g}")
    rows = parallel_map(solve_row, range(g), workers)
    b = np.zeros((g, g, n_dim, m_dim), dtype=complex)
    c = np.zeros((g, g, m_dim, n_dim), dtype=complex)
    for i, b_row, c_row in rows:
        b[i, i:], c[i, i:] = b_row, c_row
    return Kernel2D(f.x, b, "upper"), Kernel2D(f.x, c, "upper")
