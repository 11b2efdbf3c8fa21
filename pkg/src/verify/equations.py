"""
PDE residuals of every equation of motion, evaluated on exact trajectories.

Weighted forms (flow time t, weights w1, w2, h = w1 - w2):
    transport_s3:  d_t u - c d u,  d_t u.hat - c d u.hat,  c = (w1 what2 - w2 what1) / h
    nls_s3:        d_t u - a d2 u + b u u.hat u,  -d_t u.hat - a d2 u.hat + b u.hat u u.hat,
                   a = (w1 + w2) / h, b = 2 (w1 + w2) / (h w1 w2)
    mkdv_s3:       d_t u - (E / h^2) d3 u + (3 E / (h^2 w1 w2)) (u u.hat du + du u.hat u),
                   likewise for u.hat with u and u.hat exchanged, E = w1^2 + w2^2 + w1 w2
Compact forms (transport_s4, nls_s4, mkdv_s4_derived) are d_t u - R_u, d_t u.hat - R_uhat
with R from the symbolic hierarchy.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple, Union

import numpy as np

from src.hierarchy.lax import derive_eom
from src.linearsol.kernels import KernelSamples, linear_residuals
from src.ncalg.evaluate import FieldSampler
from src.utils.errors import GridMismatch, SingularScaling
from src.utils.grid import GridField
from src.verify.fd import FdScheme, estimate_fd_floor, fd_derivative, sup_norm

logger = logging.getLogger(__name__)


class EquationId(str, Enum):
    LINEAR_SPACE = "linear_space"
    LINEAR_TIME = "linear_time"
    TRANSPORT_S3 = "transport_s3"
    NLS_S3 = "nls_s3"
    MKDV_S3 = "mkdv_s3"
    TRANSPORT_S4 = "transport_s4"
    NLS_S4 = "nls_s4"
    MKDV_S4_DERIVED = "mkdv_s4_derived"
    BURGERS_VISCOUS = "burgers_viscous"
    BURGERS_INVISCID = "burgers_inviscid"
    AIRY_ODE = "airy_ode"


# Flow each hierarchy equation lives on
EQUATION_FLOWS = {
    EquationId.TRANSPORT_S3: 1,
    EquationId.TRANSPORT_S4: 1,
    EquationId.NLS_S3: 2,
    EquationId.NLS_S4: 2,
    EquationId.MKDV_S3: 3,
    EquationId.MKDV_S4_DERIVED: 3,
}

WEIGHTED_EQUATIONS = (EquationId.TRANSPORT_S3, EquationId.NLS_S3, EquationId.MKDV_S3)
COMPACT_EQUATIONS = (EquationId.TRANSPORT_S4, EquationId.NLS_S4, EquationId.MKDV_S4_DERIVED)
KERNEL_EQUATIONS = (EquationId.LINEAR_SPACE, EquationId.LINEAR_TIME)

DEFAULT_TOLERANCES = {
    EquationId.LINEAR_SPACE: 1e-6,
    EquationId.LINEAR_TIME: 1e-6,
    EquationId.TRANSPORT_S3: 1e-6,
    EquationId.NLS_S3: 1e-6,
    EquationId.MKDV_S3: 1e-6,
    EquationId.TRANSPORT_S4: 1e-6,
    EquationId.NLS_S4: 1e-6,
    EquationId.MKDV_S4_DERIVED: 1e-5,
    EquationId.BURGERS_VISCOUS: 1e-6,
    EquationId.BURGERS_INVISCID: 1e-6,
    EquationId.AIRY_ODE: 1e-6,
}


@dataclass(frozen=True)
class EquationSpec:
    """Equation identifier plus the parameters it needs."""

    eq: EquationId
    w1: Optional[complex] = None
    w2: Optional[complex] = None
    what1: complex = 1.0
    what2: complex = 1.0
    nu: Optional[float] = None
    n: Optional[int] = None

    def __post_init__(self):
        eq = EquationId(self.eq)
        object.__setattr__(self, "eq", eq)
        if eq in WEIGHTED_EQUATIONS:
            if self.w1 is None or self.w2 is None:
                raise ValueError(f"{eq.value} needs w1 and w2")
            if self.w1 == self.w2 or self.w1 == 0 or self.w2 == 0:
                raise ValueError(f"{eq.value} needs distinct non-zero weights, got w1={self.w1}, w2={self.w2}")
        if eq == EquationId.BURGERS_VISCOUS and self.nu is None:
            raise ValueError("burgers_viscous needs the viscosity nu")
        if eq == EquationId.LINEAR_TIME and (self.n is None or self.n < 1):
            raise ValueError("linear_time needs the flow index n >= 1")

    @property
    def flow(self) -> Optional[int]:
        if self.eq == EquationId.LINEAR_TIME:
            return self.n
        return EQUATION_FLOWS.get(self.eq)

    @property
    def label(self) -> str:
        return f"linear_time({self.n})" if self.eq == EquationId.LINEAR_TIME else self.eq.value


@dataclass
class Verdict:
    """Residual of one equation with its finite-difference floor and pass flag."""

    equation: str
    residual: float
    fd_floor: float
    tolerance: float
    details: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual < self.tolerance)

    def to_dict(self) -> dict:
        return {
            "equation": self.equation,
            "residual": self.residual,
            "fd_floor": self.fd_floor,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "details": dict(self.details),
        }


def compact_rescaling(n: int, w1: complex, w2: complex, what1: complex = 1.0, what2: complex = 1.0
                      ) -> Tuple[float, complex, complex]:
    """
    Map a weighted trajectory onto the compact normalisation of flow n.

    With T = t / tau and u.hat_new = u.hat / p (p = w1 w2, u unchanged) the
    compact residuals satisfy R4_u = tau R3_u and factor * R4_uhat = tau R3_uhat.

    Returns:
        (tau, p, factor)

    Raises:
        SingularScaling: If tau is undefined for these weights
    """
    h = w1 - w2
    p_hat = w1 * w2
    if n == 1:
        speed = w1 * what2 - w2 * what1
        if speed == 0:
            raise SingularScaling("Transport speed vanishes; no compact time exists")
        tau, factor = h / speed, p_hat
    elif n == 2:
        if w1 + w2 == 0:
            raise SingularScaling("w1 + w2 = 0 removes the NLS dispersion")
        tau, factor = -h / (w1 + w2), -p_hat
    elif n == 3:
        e_sum = w1 ** 2 + w2 ** 2 + w1 * w2
        if e_sum == 0:
            raise SingularScaling("w1^2 + w2^2 + w1 w2 = 0 removes the mKdV dispersion")
        tau, factor = h ** 2 / e_sum, p_hat
    else:
        raise ValueError(f"Compact rescaling is defined for n = 1, 2, 3, got {n}")
    if abs(np.imag(tau)) > 1e-14:
        raise SingularScaling(f"Compact time factor {tau} is not real")
    return float(np.real(tau)), p_hat, factor


def to_compact(field: GridField, n: int, w1: complex, w2: complex,
               what1: complex = 1.0, what2: complex = 1.0) -> GridField:
    """
    Weighted trajectory of flow n in the compact normalisation.

    The trace charges I(k) mix powers of u.hat, so they are conserved only
    in this normalisation.
    """
    tau, p_hat, _ = compact_rescaling(n, w1, w2, what1, what2)
    return field.rescaled(tau, p_hat)


def _check_flow(spec: EquationSpec, field: GridField) -> None:
    expected = spec.flow
    if expected is not None and field.flow is not None and field.flow != expected:
        raise GridMismatch(f"{spec.label} lives on flow {expected}, but the trajectory follows flow {field.flow}")


def _time_derivative(samples: np.ndarray, field: GridField, scheme: FdScheme) -> np.ndarray:
    if len(field.t) < scheme.min_points(1):
        raise GridMismatch(
            f"Time derivative needs at least {scheme.min_points(1)} time levels, got {len(field.t)}"
        )
    return fd_derivative(samples, 0, 1, scheme, field.dt)


def _space(samples: np.ndarray, field: GridField, d: int, scheme: FdScheme) -> np.ndarray:
    return fd_derivative(samples, 1, d, scheme, field.dx)


def _weighted_maps(spec: EquationSpec, field: GridField, scheme: FdScheme) -> Tuple[np.ndarray, np.ndarray]:
    w1, w2 = spec.w1, spec.w2
    h = w1 - w2
    u, uhat = field.u, field.uhat
    du_t = _time_derivative(u, field, scheme)
    duhat_t = _time_derivative(uhat, field, scheme)

    if spec.eq == EquationId.TRANSPORT_S3:
        speed = (w1 * spec.what2 - w2 * spec.what1) / h
        return du_t - speed * _space(u, field, 1, scheme), duhat_t - speed * _space(uhat, field, 1, scheme)

    if spec.eq == EquationId.NLS_S3:
        alpha = (w1 + w2) / h
        beta = 2 * (w1 + w2) / (h * w1 * w2)
        residual_u = du_t - alpha * _space(u, field, 2, scheme) + beta * (u @ uhat @ u)
        residual_uhat = -duhat_t - alpha * _space(uhat, field, 2, scheme) + beta * (uhat @ u @ uhat)
        return residual_u, residual_uhat

    # mkdv_s3
    e_sum = w1 ** 2 + w2 ** 2 + w1 * w2
    dispersion = e_sum / h ** 2
    cubic = 3 * e_sum / (h ** 2 * w1 * w2)
    du = _space(u, field, 1, scheme)
    duhat = _space(uhat, field, 1, scheme)
    residual_u = du_t - dispersion * _space(u, field, 3, scheme) + cubic * (u @ uhat @ du + du @ uhat @ u)
    residual_uhat = duhat_t - dispersion * _space(uhat, field, 3, scheme) + cubic * (uhat @ u @ duhat + duhat @ u @ uhat)
    return residual_u, residual_uhat


def _compact_maps(spec: EquationSpec, field: GridField, scheme: FdScheme) -> Tuple[np.ndarray, np.ndarray]:
    eom = derive_eom(spec.flow)
    sampler = FieldSampler(field, scheme)
    residual_u = _time_derivative(field.u, field, scheme) - sampler.poly(eom.u_rhs)
    residual_uhat = _time_derivative(field.uhat, field, scheme) - sampler.poly(eom.uhat_rhs)
    return residual_u, residual_uhat


def _burgers_map(spec: EquationSpec, field: GridField, scheme: FdScheme) -> np.ndarray:
    k = field.u
    if k.shape[2] != k.shape[3]:
        raise GridMismatch(f"Burgers fields must be square, got {k.shape[2:]}")
    residual = _time_derivative(k, field, scheme) + _space(k, field, 1, scheme) @ k
    if spec.eq == EquationId.BURGERS_VISCOUS:
        residual = residual - spec.nu * _space(k, field, 2, scheme)
    return residual


def _max_derivative(spec: EquationSpec) -> int:
    orders = {
        EquationId.TRANSPORT_S3: 1, EquationId.TRANSPORT_S4: 1,
        EquationId.NLS_S3: 2, EquationId.NLS_S4: 2,
        EquationId.MKDV_S3: 3, EquationId.MKDV_S4_DERIVED: 3,
        EquationId.BURGERS_VISCOUS: 2, EquationId.BURGERS_INVISCID: 1,
        EquationId.AIRY_ODE: 2, EquationId.LINEAR_SPACE: 1,
    }
    return orders.get(spec.eq, spec.n or 1)


def residual_maps(spec: EquationSpec, field: GridField, scheme: Optional[FdScheme] = None) -> Dict[str, np.ndarray]:
    """Per-point residual arrays keyed by component ("u", "uhat" or "K"/"g")."""
    scheme = scheme or FdScheme()
    _check_flow(spec, field)
    if spec.eq in WEIGHTED_EQUATIONS:
        residual_u, residual_uhat = _weighted_maps(spec, field, scheme)
        return {"u": residual_u, "uhat": residual_uhat}
    if spec.eq in COMPACT_EQUATIONS:
        residual_u, residual_uhat = _compact_maps(spec, field, scheme)
        return {"u": residual_u, "uhat": residual_uhat}
    if spec.eq in (EquationId.BURGERS_VISCOUS, EquationId.BURGERS_INVISCID):
        return {"K": _burgers_map(spec, field, scheme)}
    if spec.eq == EquationId.AIRY_ODE:
        zeta = field.x.reshape((1, -1, 1, 1))
        return {"g": _space(field.u, field, 2, scheme) - zeta * field.u}
    raise ValueError(f"{spec.label} is checked on kernel samples, not on a GridField")


def pde_residual(
    spec: Union[EquationSpec, EquationId, str],
    fields: Union[GridField, KernelSamples],
    scheme: Optional[FdScheme] = None,
    tolerance: Optional[float] = None,
) -> Verdict:
    """
    Sup-norm residual of an equation over the interior of the grid.

    Args:
        spec: Equation and parameters (a bare id is accepted when no parameters are needed)
        fields: GridField trajectory, or KernelSamples for the linear problem
        scheme: FD scheme (order 4, shrink-domain by default)
        tolerance: Pass threshold (per-equation default otherwise)

    Raises:
        GridMismatch: If the trajectory follows another flow or the grid is too short
    """
    if not isinstance(spec, EquationSpec):
        spec = EquationSpec(eq=EquationId(spec))
    scheme = scheme or FdScheme()
    tolerance = DEFAULT_TOLERANCES[spec.eq] if tolerance is None else tolerance
    d_max = _max_derivative(spec)

    if spec.eq in KERNEL_EQUATIONS:
        if not isinstance(fields, KernelSamples):
            raise GridMismatch(f"{spec.label} needs KernelSamples")
        if spec.eq == EquationId.LINEAR_TIME and fields.n != spec.n:
            raise GridMismatch(f"Kernel samples follow flow {fields.n}, not {spec.n}")
        parts = linear_residuals(fields, scheme)
        key = "space" if spec.eq == EquationId.LINEAR_SPACE else "time"
        if key not in parts:
            raise GridMismatch("Time residual needs several time levels")
        amplitude = max(float(np.max(np.abs(fields.f))), float(np.max(np.abs(fields.f_hat))))
        steps = [fields.x[1] - fields.x[0]] if len(fields.x) > 1 else []
        floor = max((estimate_fd_floor(scheme, s, d_max, amplitude) for s in steps), default=0.0)
        verdict = Verdict(spec.label, parts[key], floor, tolerance, details=parts)
    else:
        maps = residual_maps(spec, fields, scheme)
        details = {key: sup_norm(value) for key, value in maps.items()}
        amplitude = max(float(np.max(np.abs(fields.u))), float(np.max(np.abs(fields.uhat))) if fields.uhat.size else 0.0)
        floor = estimate_fd_floor(scheme, fields.dx, d_max, amplitude)
        if len(fields.t) > 1 and spec.eq != EquationId.AIRY_ODE:
            floor = max(floor, estimate_fd_floor(scheme, fields.dt, 1, amplitude))
        verdict = Verdict(spec.label, max(details.values()), floor, tolerance, details=details)

    logger.info(
        f"{verdict.equation}: residual {verdict.residual:.3e} (fd floor {verdict.fd_floor:.1e}) "
        f"{'PASS' if verdict.passed else 'FAIL'}"
    )
    return verdict
