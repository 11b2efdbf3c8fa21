"""
Matrix Burgers solutions from heat-equation data (Cole-Hopf) and the time and
viscosity normalisations of the two dressing routes that produce Burgers flows.
"""

import logging
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from src.utils.errors import DegenerateDispersion, NonPositivePhi
from src.utils.grid import GridField

logger = logging.getLogger(__name__)

HEAT_PROFILES = ("gaussian", "twohump", "constant")
IDEMPOTENT_TOLERANCE = 1e-12


def _heat_kernel(zeta, sigma):
    return np.exp(-zeta ** 2 / (4 * sigma)) / np.sqrt(4 * np.pi * sigma)


@dataclass(frozen=True)
class HeatSolution:
    """
    Positive solution of phi_tau = nu_hat phi_chichi:
    phi = 1 + sum_k A_k G(chi - c_k, nu_hat (tau + tau0)).

    The "constant" profile has no Gaussian terms (phi = 1).
    """

    kind: str = "gaussian"
    nu_hat: float = 0.5
    amplitudes: Tuple[float, ...] = (1.0,)
    centers: Tuple[float, ...] = (0.0,)
    tau0: float = 1.0

    def __post_init__(self):
        if self.kind not in HEAT_PROFILES:
            raise ValueError(f"Unknown heat profile '{self.kind}'; expected one of {HEAT_PROFILES}")
        if self.nu_hat <= 0:
            raise ValueError(f"nu_hat must be positive, got {self.nu_hat}")
        if self.tau0 <= 0:
            raise ValueError(f"tau0 must be positive, got {self.tau0}")
        if len(self.amplitudes) != len(self.centers):
            raise ValueError("amplitudes and centers must have the same length")

    @classmethod
    def gaussian(cls, nu_hat: float = 0.5, amplitude: float = 1.0, center: float = 0.0, tau0: float = 1.0):
        return cls("gaussian", nu_hat, (amplitude,), (center,), tau0)

    @classmethod
    def twohump(cls, nu_hat: float = 0.5, amplitudes: Sequence[float] = (1.0, 0.5),
                centers: Sequence[float] = (-2.0, 2.0), tau0: float = 1.0):
        return cls("twohump", nu_hat, tuple(amplitudes), tuple(centers), tau0)

    @classmethod
    def constant(cls, nu_hat: float = 0.5):
        return cls("constant", nu_hat, (), ())

    def _sigma(self, tau):
        sigma = self.nu_hat * (np.asarray(tau, dtype=float) + self.tau0)
        if np.any(sigma <= 0):
            raise ValueError(f"Heat solution evaluated before its initial time (tau <= {-self.tau0})")
        return sigma

    def phi(self, chi, tau) -> np.ndarray:
        chi, tau = np.broadcast_arrays(np.asarray(chi, dtype=float), np.asarray(tau, dtype=float))
        value = np.ones(chi.shape)
        if not self.amplitudes:
            return value
        sigma = self._sigma(tau)
        for amplitude, center in zip(self.amplitudes, self.centers):
            value = value + amplitude * _heat_kernel(chi - center, sigma)
        return value

    def phi_chi(self, chi, tau) -> np.ndarray:
        chi, tau = np.broadcast_arrays(np.asarray(chi, dtype=float), np.asarray(tau, dtype=float))
        value = np.zeros(chi.shape)
        if not self.amplitudes:
            return value
        sigma = self._sigma(tau)
        for amplitude, center in zip(self.amplitudes, self.centers):
            zeta = chi - center
            value = value - amplitude * zeta / (2 * sigma) * _heat_kernel(zeta, sigma)
        return value


@dataclass(frozen=True)
class BurgersScaling:
    """Burgers normalisation: tau = time_scale * t and viscosity nu."""

    time_scale: float
    viscosity: float
    inviscid: bool = False
    route: str = "integral"


def burgers_parameters(w: float) -> BurgersScaling:
    """
    Scaling of d_t K + (w^2 - 1) d^2 K - 2 (1 + w) dK K = 0 for K(x, y) = K(x + w y).

    tau = -2 (1 + w) t turns it into d_tau K + dK K = nu d^2 K with
    nu = (w - 1) / 2; w = 1 gives the inviscid equation.

    Raises:
        DegenerateDispersion: For w = -1, where the nonlinearity vanishes
    """
    if abs(w + 1) < 1e-14:
        raise DegenerateDispersion("w = -1 removes the Burgers nonlinearity")
    viscosity = (w - 1) / 2
    inviscid = abs(w - 1) < 1e-14
    return BurgersScaling(time_scale=-2 * (1 + w), viscosity=0.0 if inviscid else viscosity,
                          inviscid=inviscid, route="integral")


def differential_burgers_scaling() -> BurgersScaling:
    """Differential-Darboux route: tau = 2 t, nu = 1/2."""
    return BurgersScaling(time_scale=2.0, viscosity=0.5, route="differential")


def idempotent_factor(b: np.ndarray) -> float:
    """
    kappa_b with b^2 = kappa_b b.

    Raises:
        ValueError: If b is not square, b = 0, or b^2 is not proportional to b
    """
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    if b.shape[0] != b.shape[1]:
        raise ValueError(f"b must be square, got {b.shape}")
    norm = np.vdot(b, b)
    if abs(norm) == 0:
        raise ValueError("b must be non-zero")
    square = b @ b
    kappa_b = np.vdot(b, square) / norm
    if np.linalg.norm(square - kappa_b * b) > IDEMPOTENT_TOLERANCE * max(1.0, np.linalg.norm(square)):
        raise ValueError("b^2 is not proportional to b")
    if abs(kappa_b) < 1e-14:
        raise ValueError("kappa_b must be non-zero")
    if abs(np.imag(kappa_b)) > 1e-12:
        raise ValueError(f"kappa_b must be real, got {kappa_b}")
    return float(np.real(kappa_b))


@dataclass(frozen=True)
class ColeHopfBurgers:
    """
    K(chi, tau) = f(chi, kappa_b tau) b with f = -2 nu_hat d_chi log phi.

    Solves d_tau K + (d_chi K) K = nu d_chi^2 K with nu = kappa_b nu_hat.
    """

    phi: HeatSolution
    b: np.ndarray = field(compare=False)
    kappa_b: float

    @property
    def viscosity(self) -> float:
        return self.kappa_b * self.phi.nu_hat

    def scalar(self, chi, tau) -> np.ndarray:
        """Scalar profile f(chi, kappa_b tau)."""
        tau_hat = self.kappa_b * np.asarray(tau, dtype=float)
        phi = self.phi.phi(chi, tau_hat)
        if np.any(phi <= 0):
            raise NonPositivePhi(f"phi reaches {float(np.min(phi)):.3g}; Cole-Hopf needs phi > 0")
        return -2 * self.phi.nu_hat * self.phi.phi_chi(chi, tau_hat) / phi

    def __call__(self, chi, tau) -> np.ndarray:
        return self.scalar(chi, tau)[..., None, None] * self.b

    def sample(self, chi: np.ndarray, tau: np.ndarray) -> GridField:
        """K on the grid, stored in the u slot of a GridField (u.hat = 0)."""
        return burgers_grid_field(chi, tau, lambda c, t: self(c, t), label=f"burgers-{self.phi.kind}")


def cole_hopf_burgers(phi: HeatSolution, nu_hat: float, b) -> ColeHopfBurgers:
    """
    Matrix Cole-Hopf solution built on a heat-equation solution.

    Args:
        phi: Positive heat-equation solution
        nu_hat: Heat diffusivity; must match ``phi.nu_hat``
        b: Square matrix with b^2 = kappa_b b

    Raises:
        NonPositivePhi: If phi is not positive at an evaluation point
    """
    if abs(phi.nu_hat - nu_hat) > 1e-14:
        raise ValueError(f"phi was built with nu_hat={phi.nu_hat}, got {nu_hat}")
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    kappa_b = idempotent_factor(b)
    logger.debug(f"Cole-Hopf Burgers: kappa_b={kappa_b}, nu={kappa_b * nu_hat}")
    return ColeHopfBurgers(phi=phi, b=b, kappa_b=kappa_b)


def inviscid_burgers_field(chi: np.ndarray, tau: np.ndarray, b) -> GridField:
    """Exact inviscid solution K = chi b / (1 + kappa_b tau) on the grid."""
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    kappa_b = idempotent_factor(b)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(1 + kappa_b * tau <= 0):
        raise ValueError("Inviscid solution breaks down at tau = -1 / kappa_b")

    def evaluate(c, t):
        return (c / (1 + kappa_b * t))[..., None, None] * b

    return burgers_grid_field(chi, tau, evaluate, label="burgers-inviscid")


def burgers_grid_field(chi: np.ndarray, tau: np.ndarray, evaluate, label: str = "") -> GridField:
    chi = np.asarray(chi, dtype=float)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    cc, tt = np.meshgrid(chi, tau)
    k = evaluate(cc, tt)
    return GridField(x=chi, t=tau, u=k, uhat=np.zeros_like(np.swapaxes(k, -1, -2)), label=label)
