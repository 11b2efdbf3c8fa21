"""
Solutions f (NxM) and f.hat (MxN) of the bare linear problem.

Space part:  w1 d_x f + w2 d_z f = 0,  w2 d_x f.hat + w1 d_z f.hat = 0.
Time part of flow n >= 2:  d_t F = d_x^n F - (-1)^n d_z^n F (both blocks);
for n = 1:  d_t f = what1 d_x f + what2 d_z f,  d_t f.hat = what2 d_x f.hat + what1 d_z f.hat.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np
from scipy.special import airy, gamma

from src.linearsol.dispersion import DispersionParams
from src.utils.errors import OutOfValidatedRange, SingularScaling, DegenerateDispersion
from src.utils.grid import uniform_step
from src.verify.fd import FdScheme, fd_derivative, sup_norm

logger = logging.getLogger(__name__)

AIRY_RANGE = (-15.0, 15.0)
KERNEL_KINDS = ("discrete-exponential", "airy", "heat")

Evaluator = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass(frozen=True, eq=False)
class KernelSamples:
    """
    Kernel pair sampled on a (t, x, z) product grid.

    f has shape (T, X, Z, N, M) and f_hat (T, X, Z, M, N).
    """

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    f: np.ndarray
    f_hat: np.ndarray
    w1: complex
    w2: complex
    n: int
    what1: complex = 1.0
    what2: complex = 1.0


@dataclass(frozen=True, eq=False)
class LinearKernel:
    """Evaluator pair for f(x, z, t) and f.hat(x, z, t) with its flow metadata."""

    kind: str
    n: int
    w1: complex
    w2: complex
    n_dim: int
    m_dim: int
    f_eval: Evaluator
    f_hat_eval: Evaluator
    t_default: float = 0.0
    what1: complex = 1.0
    what2: complex = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"Unknown kernel kind '{self.kind}'")

    def f(self, x, z, t: Optional[float] = None) -> np.ndarray:
        x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
        return self.f_eval(x, z, self.t_default if t is None else t)

    def f_hat(self, x, z, t: Optional[float] = None) -> np.ndarray:
        x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
        return self.f_hat_eval(x, z, self.t_default if t is None else t)

    def sample(self, x: np.ndarray, z: np.ndarray, t_levels) -> KernelSamples:
        """Sample both blocks on the product grid t_levels x x x z."""
        t_levels = np.atleast_1d(np.asarray(t_levels, dtype=float))
        xx, zz = np.meshgrid(np.asarray(x, dtype=float), np.asarray(z, dtype=float), indexing="ij")
        f = np.stack([self.f(xx, zz, t) for t in t_levels])
        f_hat = np.stack([self.f_hat(xx, zz, t) for t in t_levels])
        return KernelSamples(
            t=t_levels, x=np.asarray(x, dtype=float), z=np.asarray(z, dtype=float),
            f=f, f_hat=f_hat, w1=self.w1, w2=self.w2, n=self.n,
            what1=self.what1, what2=self.what2,
        )

    def sample_square(self, x: np.ndarray, t: Optional[float] = None):
        """(f, f_hat) on the square grid x_i, x_j with shapes (X, X, N, M) and (X, X, M, N)."""
        xx, zz = np.meshgrid(np.asarray(x, dtype=float), np.asarray(x, dtype=float), indexing="ij")
        return self.f(xx, zz, t), self.f_hat(xx, zz, t)


def discrete_kernel(params: DispersionParams, b: np.ndarray, b_hat: np.ndarray) -> LinearKernel:
    """
    Exponential sums f = sum_a b_a exp(Lambda_a t - kappa_a x - mu_a z),
    f.hat = sum_a b.hat_a exp(Lambda.hat_a t - mu.hat_a x - kappa.hat_a z).

    Args:
        params: Closed dispersion data for L modes
        b: Amplitudes of shape (L, N, M)
        b_hat: Amplitudes of shape (L, M, N)
    """
    b = np.asarray(b, dtype=complex)
    b_hat = np.asarray(b_hat, dtype=complex)
    if b.ndim != 3 or b_hat.ndim != 3 or b.shape[0] != params.modes or b_hat.shape[0] != params.modes:
        raise ValueError(
            f"Amplitudes must have shapes (L, N, M) and (L, M, N) with L={params.modes}, "
            f"got {b.shape} and {b_hat.shape}"
        )
    if b.shape[1:] != b_hat.shape[1:][::-1]:
        raise ValueError(f"b is {b.shape[1:]} per mode but b_hat is {b_hat.shape[1:]}")

    def f_eval(x, z, t):
        phase = np.exp(params.lam * t - np.multiply.outer(x, params.kappa) - np.multiply.outer(z, params.mu))
        return np.einsum("...a,anm->...nm", phase, b)

    def f_hat_eval(x, z, t):
        phase = np.exp(params.lam_hat * t - np.multiply.outer(x, params.mu_hat) - np.multiply.outer(z, params.kappa_hat))
        return np.einsum("...a,amn->...mn", phase, b_hat)

    return LinearKernel(
        kind="discrete-exponential",
        n=params.n,
        w1=params.w1,
        w2=params.w2,
        n_dim=b.shape[1],
        m_dim=b.shape[2],
        f_eval=f_eval,
        f_hat_eval=f_hat_eval,
        what1=params.what1,
        what2=params.what2,
    )


# ---------------------------------------------------------------------------
# Airy function
# ---------------------------------------------------------------------------

def airy_function(zeta):
    """
    Ai(zeta) via scipy.special.airy, restricted to the validated range [-15, 15].

    Raises:
        OutOfValidatedRange: If any argument lies outside the range
    """
    values = np.asarray(zeta, dtype=float)
    if np.any(values < AIRY_RANGE[0]) or np.any(values > AIRY_RANGE[1]) or np.any(~np.isfinite(values)):
        raise OutOfValidatedRange(f"Airy evaluation is validated on {list(AIRY_RANGE)}")
    ai, _, _, _ = airy(values)
    return ai if values.ndim else float(ai)


def airy_maclaurin(zeta: float, max_terms: int = 400) -> float:
    """
    Ai(zeta) from its Maclaurin series, Ai = c1 f(zeta) - c2 g(zeta) with
    c1 = 3^(-2/3) / Gamma(2/3), c2 = 3^(-1/3) / Gamma(1/3).

    Reference evaluator for moderate |zeta|; cancellation grows with |zeta|.
    """
    c1 = 3.0 ** (-2.0 / 3.0) / gamma(2.0 / 3.0)
    c2 = 3.0 ** (-1.0 / 3.0) / gamma(1.0 / 3.0)
    cube = zeta ** 3
    f_term, g_term = 1.0, zeta
    f_sum, g_sum = f_term, g_term
    for j in range(1, max_terms):
        f_term *= cube / ((3 * j - 1) * (3 * j))
        g_term *= cube / ((3 * j) * (3 * j + 1))
        f_sum += f_term
        g_sum += g_term
        if abs(f_term) < 1e-18 * max(1.0, abs(f_sum)) and abs(g_term) < 1e-18 * max(1.0, abs(g_sum)):
            break
    return c1 * f_sum - c2 * g_sum


def airy_scale(w1: complex, w2: complex, t: float) -> float:
    """
    Self-similar length nu with nu^3 = -3 (1 + s^3) t, s = -w1/w2 (real cube root).

    Raises:
        SingularScaling: If 1 + s^3 = 0 or t = 0
    """
    s = -w1 / w2
    factor = 1 + s ** 3
    if abs(factor) < 1e-14 or t == 0:
        raise SingularScaling(f"Airy scaling degenerates (1 + s^3 = {factor}, t = {t})")
    if abs(np.imag(factor)) > 1e-14:
        raise SingularScaling(f"Airy scaling needs a real weight ratio, got s = {s}")
    return float(np.cbrt(-3.0 * np.real(factor) * t))


def airy_kernel(w1: float, w2: float, t: float, m: np.ndarray, m_hat: np.ndarray) -> LinearKernel:
    """
    Airy solutions of the n = 3 linear problem from delta initial data:
    f = Ai((x + s z)/nu) m / nu, f.hat = Ai((s x + z)/nu) m.hat / nu.

    ``t`` is the default evaluation time; evaluating at another time
    recomputes nu.

    Raises:
        SingularScaling: If 1 + s^3 = 0 or t = 0
    """
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    m_hat = np.atleast_2d(np.asarray(m_hat, dtype=complex))
    if m.shape != m_hat.shape[::-1]:
        raise ValueError(f"m is {m.shape} but m_hat is {m_hat.shape}; expected transposed shapes")
    airy_scale(w1, w2, t)
    s = -w1 / w2

    def f_eval(x, z, time):
        nu = airy_scale(w1, w2, time)
        return (airy_function((x + s * z) / nu) / nu)[..., None, None] * m

    def f_hat_eval(x, z, time):
        nu = airy_scale(w1, w2, time)
        return (airy_function((s * x + z) / nu) / nu)[..., None, None] * m_hat

    return LinearKernel(
        kind="airy", n=3, w1=w1, w2=w2, n_dim=m.shape[0], m_dim=m.shape[1],
        f_eval=f_eval, f_hat_eval=f_hat_eval, t_default=t,
    )


def heat_kernel(w1: float, w2: float, t: float, m: np.ndarray, m_hat: np.ndarray, t0: float = 1.0) -> LinearKernel:
    """
    Gaussian solutions of the n = 2 linear problem:
    f = m G(x + s z, t0 + D t), f.hat = m.hat G(s x + z, t0 - D t),
    D = 1 - s^2, G(zeta, tau) = exp(-zeta^2 / (4 tau)) / sqrt(4 pi tau).

    Raises:
        DegenerateDispersion: If D = 0 (w1 = -w2)
    """
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    m_hat = np.atleast_2d(np.asarray(m_hat, dtype=complex))
    s = -w1 / w2
    diffusion = 1 - s ** 2
    if abs(diffusion) < 1e-14:
        raise DegenerateDispersion("Heat kernel needs s^2 != 1")

    def gaussian(zeta, tau):
        if np.any(np.real(tau) <= 0):
            raise ValueError(f"Heat kernel evaluated at non-positive variance {tau}")
        return np.exp(-zeta ** 2 / (4 * tau)) / np.sqrt(4 * np.pi * tau)

    def f_eval(x, z, time):
        return gaussian(x + s * z, t0 + diffusion * time)[..., None, None] * m

    def f_hat_eval(x, z, time):
        return gaussian(s * x + z, t0 - diffusion * time)[..., None, None] * m_hat

    return LinearKernel(
        kind="heat", n=2, w1=w1, w2=w2, n_dim=m.shape[0], m_dim=m.shape[1],
        f_eval=f_eval, f_hat_eval=f_hat_eval, t_default=t,
    )


# ---------------------------------------------------------------------------
# Residuals of the linear problem
# ---------------------------------------------------------------------------

def linear_residuals(samples: KernelSamples, scheme: Optional[FdScheme] = None) -> Dict[str, float]:
    """
    Sup-norm residuals of the space and time parts of the linear problem.

    The time part needs at least ``scheme.min_points(1)`` time levels.
    """
    scheme = scheme or FdScheme()
    dx = uniform_step(samples.x, "x")
    dz = uniform_step(samples.z, "z")
    w1, w2, n = samples.w1, samples.w2, samples.n

    def dxn(values, d):
        return fd_derivative(values, 1, d, scheme, dx)

    def dzn(values, d):
        return fd_derivative(values, 2, d, scheme, dz)

    space = max(
        sup_norm(w1 * dxn(samples.f, 1) + w2 * dzn(samples.f, 1)),
        sup_norm(w2 * dxn(samples.f_hat, 1) + w1 * dzn(samples.f_hat, 1)),
    )
    result = {"space": space}

    if len(samples.t) > 1:
        dt = uniform_step(samples.t, "t")
        df_dt = fd_derivative(samples.f, 0, 1, scheme, dt)
        df_hat_dt = fd_derivative(samples.f_hat, 0, 1, scheme, dt)
        if n == 1:
            rhs = samples.what1 * dxn(samples.f, 1) + samples.what2 * dzn(samples.f, 1)
            rhs_hat = samples.what2 * dxn(samples.f_hat, 1) + samples.what1 * dzn(samples.f_hat, 1)
        else:
            sign = (-1) ** n
            rhs = dxn(samples.f, n) - sign * dzn(samples.f, n)
            rhs_hat = dxn(samples.f_hat, n) - sign * dzn(samples.f_hat, n)
        result["time"] = max(sup_norm(df_dt - rhs), sup_norm(df_hat_dt - rhs_hat))
    return result


def airy_ode_residual(zeta: np.ndarray, values: np.ndarray, scheme: Optional[FdScheme] = None) -> float:
    """Sup norm of g'' - zeta g for samples g(zeta) on a uniform grid."""
    scheme = scheme or FdScheme()
    zeta = np.asarray(zeta, dtype=float)
    values = np.asarray(values)
    second = fd_derivative(values, 0, 2, scheme, uniform_step(zeta, "zeta"))
    shape = (len(zeta),) + (1,) * (values.ndim - 1)
    return sup_norm(second - zeta.reshape(shape) * values)
