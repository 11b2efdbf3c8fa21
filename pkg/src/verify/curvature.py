"""Numerical zero-curvature residual d_t U - d_x V(n) + [U, V(n)]."""

import logging
from typing import Dict, Iterable, Optional

import numpy as np

from src.hierarchy.lax import time_component
from src.ncalg.blocks import BlockMatrix
from src.ncalg.evaluate import FieldSampler
from src.utils.errors import GridMismatch
from src.utils.grid import GridField
from src.verify.fd import FdScheme, fd_derivative, sup_norm

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (0, 1, -1, 1j, -1j, 2)


def _sigma(n: int, m: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(n), -np.ones(m)])).astype(complex)


def zero_curvature_map(n: int, field: GridField, lam: complex, scheme: Optional[FdScheme] = None) -> np.ndarray:
    """
    Pointwise residual at one spectral value; shape (T, X, N+M, N+M).

    d_x V is formed symbolically before evaluation, so only d_t is a
    finite difference across samples of the trajectory.
    """
    scheme = scheme or FdScheme()
    if field.flow is not None and field.flow != n:
        raise GridMismatch(f"Trajectory follows flow {field.flow}, not flow {n}")
    if len(field.t) < scheme.min_points(1):
        raise GridMismatch(f"d_t needs at least {scheme.min_points(1)} time levels, got {len(field.t)}")

    sampler = FieldSampler(field, scheme)
    component = time_component(n)
    potential = sampler.block(BlockMatrix.potential())
    u_matrix = lam / 2 * _sigma(field.n, field.m) + potential
    v_matrix = sum(lam ** power * sampler.block(block) for power, block in component.lambda_terms)
    dv_matrix = sum(lam ** power * sampler.block(block.derive()) for power, block in component.lambda_terms)
    dt_potential = fd_derivative(potential, 0, 1, scheme, field.dt)
    return dt_potential - dv_matrix + (u_matrix @ v_matrix - v_matrix @ u_matrix)


def zero_curvature_residual(
    n: int,
    field: GridField,
    lambda_samples: Iterable[complex] = DEFAULT_LAMBDAS,
    scheme: Optional[FdScheme] = None,
) -> Dict[str, float]:
    """
    Worst sup-norm residual over the spectral samples.

    Args:
        n: Flow index of V(n)
        field: Trajectory in the compact normalisation of flow n
        lambda_samples: Spectral values to test
        scheme: FD scheme for d_t and the x-derivatives inside V(n)

    Returns:
        {"residual": worst, "lambda=...": per-sample residual, ...}

    Raises:
        GridMismatch: If the trajectory follows another flow
    """
    per_sample = {}
    for lam in lambda_samples:
        per_sample[f"lambda={complex(lam)}"] = sup_norm(zero_curvature_map(n, field, lam, scheme))
    worst = max(per_sample.values()) if per_sample else 0.0
    logger.info(f"Zero curvature V({n}): worst residual {worst:.3e} over {len(per_sample)} lambda samples")
    return dict(per_sample, residual=worst)
