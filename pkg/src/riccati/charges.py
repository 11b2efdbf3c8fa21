"""Numerical trace charges, block charges and truncated-Riccati residuals."""

import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.integrate import trapezoid

from src.ncalg.evaluate import FieldSampler
from src.ncalg.polynomial import nc_derive
from src.riccati.expansion import GammaSeries, charge_density
from src.utils.errors import BoundaryLeak
from src.utils.grid import GridField
from src.verify.fd import FdScheme, sup_norm

logger = logging.getLogger(__name__)

BOUNDARY_DECAY = 1e-10


@dataclass
class ChargeReport:
    """Trace charge I(k) sampled along a trajectory."""

    k: int
    times: List[float]
    values: List[complex]
    variant: str = "plain"
    boundary_leak: bool = False
    notes: List[str] = field(default_factory=list)

    @property
    def drift(self) -> float:
        """max_t |I(t) - I(0)| / max(1, |I(0)|)."""
        if not self.values:
            return 0.0
        values = np.asarray(self.values, dtype=complex)
        reference = values[0]
        return float(np.max(np.abs(values - reference)) / max(1.0, abs(reference)))

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "variant": self.variant,
            "drift": self.drift,
            "boundary_leak": self.boundary_leak,
            "initial_value": [float(np.real(self.values[0])), float(np.imag(self.values[0]))] if self.values else None,
            "notes": list(self.notes),
        }


def boundary_leak(field: GridField, threshold: float = BOUNDARY_DECAY) -> bool:
    """
    True if |u| or |u.hat| reaches ``threshold`` at either grid end.

    Emits a BoundaryLeak warning when it does.
    """
    ends = [field.u[:, 0], field.u[:, -1], field.uhat[:, 0], field.uhat[:, -1]]
    largest = max(float(np.max(np.abs(e))) if e.size else 0.0 for e in ends)
    if largest >= threshold:
        message = f"Field '{field.label or 'unnamed'}' does not decay at the grid ends (max {largest:.2e})"
        logger.warning(message)
        warnings.warn(message, BoundaryLeak, stacklevel=2)
        return True
    return False


def _integrate_finite(x: np.ndarray, values: np.ndarray) -> complex:
    """Trapezoid rule over the points where ``values`` is finite (a contiguous interior)."""
    finite = np.isfinite(values)
    if not finite.any():
        return 0j
    return complex(trapezoid(values[finite], x[finite]))


def charge_series(k: int, field: GridField, fd: Optional[FdScheme] = None, variant: str = "plain") -> np.ndarray:
    """I(k) at every time level of ``field``; shape (T,)."""
    fd = fd or FdScheme()
    density = FieldSampler(field, fd).poly(charge_density(k, variant))
    traces = np.trace(density, axis1=-2, axis2=-1)
    return np.array([_integrate_finite(field.x, traces[t]) for t in range(traces.shape[0])])


def evaluate_charge(
    k: int,
    field: GridField,
    fd: Optional[FdScheme] = None,
    t_index: int = 0,
    variant: str = "plain",
) -> complex:
    """
    Trace charge I(k) = integral of tr(u.hat Gamma(k)) dx at one time level.

    Derivatives use ``fd``; under the shrink-domain policy the quadrature runs
    over the interior where every stencil fits.

    Raises:
        StencilOutOfRange: If the grid cannot hold the stencil
    """
    snapshot = field.snapshot(t_index)
    boundary_leak(snapshot)
    return complex(charge_series(k, snapshot, fd, variant)[0])


def block_charge(k: int, field: GridField, fd: Optional[FdScheme] = None, t_index: int = 0,
                 variant: str = "plain") -> np.ndarray:
    """Matrix-valued integral of u.hat Gamma(k) (no conservation claim attached)."""
    fd = fd or FdScheme()
    snapshot = field.snapshot(t_index)
    density = FieldSampler(snapshot, fd).poly(charge_density(k, variant))[0]
    finite = np.all(np.isfinite(density), axis=(-2, -1))
    if not finite.any():
        return np.zeros(density.shape[1:], dtype=complex)
    return trapezoid(density[finite], snapshot.x[finite], axis=0)


def riccati_residual(
    series: GammaSeries,
    lam: complex,
    field: GridField,
    fd: Optional[FdScheme] = None,
) -> float:
    """
    Sup norm of the truncated Riccati residual.

    plain: d(Gamma) - u + lambda Gamma + Gamma u.hat Gamma
    hat:   d(Gamma.hat) - u.hat - lambda Gamma.hat + Gamma.hat u Gamma.hat
    with Gamma = sum_{k <= kmax} Gamma(k) lambda^-k. Derivatives of the
    coefficients are taken symbolically before evaluation.
    """
    if lam == 0:
        raise ValueError("The Riccati expansion is in 1/lambda; lambda must be non-zero")
    fd = fd or FdScheme()
    sampler = FieldSampler(field, fd)

    gamma = 0
    d_gamma = 0
    for k in range(1, series.kmax + 1):
        weight = lam ** (-k)
        gamma = gamma + weight * sampler.poly(series[k])
        d_gamma = d_gamma + weight * sampler.poly(nc_derive(series[k]))

    if series.variant == "plain":
        residual = d_gamma - field.u + lam * gamma + gamma @ field.uhat @ gamma
    else:
        residual = d_gamma - field.uhat - lam * gamma + gamma @ field.u @ gamma
    return sup_norm(residual)
