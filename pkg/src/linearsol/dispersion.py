"""Dispersion relations tying the mode exponents of the bare linear problem."""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.utils.errors import ConvergenceViolation, DegenerateDispersion

logger = logging.getLogger(__name__)

DEGENERACY_TOLERANCE = 1e-14


@dataclass(frozen=True, eq=False)
class DispersionParams:
    """
    Weights and per-mode exponents of flow n.

    w1 kappa + w2 mu = 0, w1 kappa.hat + w2 mu.hat = 0,
    Lambda = (-1)^n kappa^n - mu^n, Lambda.hat = (-1)^n mu.hat^n - kappa.hat^n
    (for n = 1 the weighted form Lambda = -what1 kappa - what2 mu,
    Lambda.hat = -what2 mu.hat - what1 kappa.hat).
    """

    w1: complex
    w2: complex
    n: int
    kappa: np.ndarray
    kappa_hat: np.ndarray
    mu: np.ndarray
    mu_hat: np.ndarray
    lam: np.ndarray
    lam_hat: np.ndarray
    what1: complex = 1.0
    what2: complex = 1.0

    @property
    def h(self) -> complex:
        return self.w1 - self.w2

    @property
    def s(self) -> complex:
        """Exponent ratio mu / kappa = -w1 / w2."""
        return -self.w1 / self.w2

    @property
    def modes(self) -> int:
        return len(self.kappa)

    def to_dict(self) -> dict:
        def pairs(values):
            return [[float(np.real(v)), float(np.imag(v))] for v in values]

        return {
            "w1": [float(np.real(self.w1)), float(np.imag(self.w1))],
            "w2": [float(np.real(self.w2)), float(np.imag(self.w2))],
            "n": self.n,
            "kappa": pairs(self.kappa),
            "kappa_hat": pairs(self.kappa_hat),
            "mu": pairs(self.mu),
            "mu_hat": pairs(self.mu_hat),
            "lambda": pairs(self.lam),
            "lambda_hat": pairs(self.lam_hat),
        }


def check_convergence(mu: np.ndarray, mu_hat: np.ndarray, kappa: np.ndarray, kappa_hat: np.ndarray) -> None:
    """
    Require Re(mu_b + mu.hat_g) > 0 and Re(kappa.hat_g + kappa_a) > 0 for all mode pairs.

    Raises:
        ConvergenceViolation: Naming the first offending pair
    """
    first = np.real(mu[:, None] + mu_hat[None, :])
    second = np.real(kappa_hat[:, None] + kappa[None, :])
    if np.any(first <= 0):
        b, g = np.argwhere(first <= 0)[0]
        raise ConvergenceViolation(f"Re(mu[{b}] + mu_hat[{g}]) = {first[b, g]:.3g} is not positive")
    if np.any(second <= 0):
        g, a = np.argwhere(second <= 0)[0]
        raise ConvergenceViolation(f"Re(kappa_hat[{g}] + kappa[{a}]) = {second[g, a]:.3g} is not positive")


def close_dispersion(
    w1: complex,
    w2: complex,
    kappa: Sequence[complex],
    kappa_hat: Sequence[complex],
    n: int,
    what1: complex = 1.0,
    what2: complex = 1.0,
    validate: bool = True,
) -> DispersionParams:
    """
    Fill in mu, mu.hat, Lambda, Lambda.hat from the dispersion relations.

    Args:
        w1, w2: Distinct weights, w2 non-zero
        kappa, kappa_hat: Per-mode exponents (same length)
        n: Flow index, at least 1
        what1, what2: Time weights of the n = 1 flow
        validate: Enforce the convergence sign conditions

    Raises:
        DegenerateDispersion: If Lambda vanishes for every mode
        ConvergenceViolation: If a sign condition fails
    """
    if w1 == w2:
        raise ValueError(f"w1 and w2 must differ, got {w1}")
    if w2 == 0:
        raise ValueError("w2 must be non-zero")
    if n < 1:
        raise ValueError(f"Flow index must be at least 1, got {n}")
    kappa = np.atleast_1d(np.asarray(kappa, dtype=complex))
    kappa_hat = np.atleast_1d(np.asarray(kappa_hat, dtype=complex))
    if kappa.shape != kappa_hat.shape:
        raise ValueError(f"kappa has {kappa.size} modes but kappa_hat has {kappa_hat.size}")

    s = -w1 / w2
    mu = s * kappa
    mu_hat = s * kappa_hat
    if n == 1:
        lam = -what1 * kappa - what2 * mu
        lam_hat = -what2 * mu_hat - what1 * kappa_hat
    else:
        lam = (-1) ** n * kappa ** n - mu ** n
        lam_hat = (-1) ** n * mu_hat ** n - kappa_hat ** n

    if np.all(np.abs(lam) < DEGENERACY_TOLERANCE) and np.all(np.abs(lam_hat) < DEGENERACY_TOLERANCE):
        raise DegenerateDispersion(f"Flow {n} dispersion vanishes for every mode (w1={w1}, w2={w2})")
    if validate:
        check_convergence(mu, mu_hat, kappa, kappa_hat)

    logger.debug(f"Closed dispersion for n={n}: mu={mu}, Lambda={lam}")
    return DispersionParams(
        w1=w1,
        w2=w2,
        n=n,
        kappa=kappa,
        kappa_hat=kappa_hat,
        mu=mu,
        mu_hat=mu_hat,
        lam=lam,
        lam_hat=lam_hat,
        what1=what1,
        what2=what2,
    )
