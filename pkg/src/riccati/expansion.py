"""
Noncommutative Riccati expansion and the charges it generates.

Gamma solves d(Gamma) = u - lambda Gamma - Gamma u.hat Gamma. Expanding
Gamma = sum_k Gamma(k) lambda^-k gives
    Gamma(1) = u,  Gamma(k+1) = -d(Gamma(k)) - sum_l Gamma(l) u.hat Gamma(k-l).
The hat variant solves d(Gamma.hat) = u.hat + lambda Gamma.hat - Gamma.hat u Gamma.hat:
    Gamma.hat(1) = -u.hat,  Gamma.hat(k+1) = d(Gamma.hat(k)) + sum_l Gamma.hat(l) u Gamma.hat(k-l).
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

from src.ncalg.polynomial import (
    Base,
    NcPoly,
    Word,
    coeff_mul,
    nc_derive,
    nc_sum,
)
from src.utils.errors import UnsupportedOrder

logger = logging.getLogger(__name__)

VARIANTS = ("plain", "hat")

# Sign s_k with flow d_t u = s_k * delta(I_k)/delta(u.hat): H(2) = -I(2), H(3) = I(3)
HAMILTONIAN_SIGNS = {2: -1, 3: 1}


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise ValueError(f"Unknown Riccati variant '{variant}'; expected one of {VARIANTS}")


@dataclass(frozen=True)
class GammaSeries:
    """Truncated Riccati expansion Gamma(1) .. Gamma(kmax)."""

    terms: Tuple[NcPoly, ...]
    variant: str = "plain"

    @property
    def kmax(self) -> int:
        return len(self.terms)

    def __getitem__(self, k: int) -> NcPoly:
        """1-based access: series[1] is Gamma(1)."""
        if not 1 <= k <= self.kmax:
            raise IndexError(f"Gamma({k}) outside 1..{self.kmax}")
        return self.terms[k - 1]

    def to_text(self) -> str:
        name = "Gamma.hat" if self.variant == "hat" else "Gamma"
        return "\n".join(f"{name}({k}) = {p.to_text()}" for k, p in enumerate(self.terms, start=1))


@lru_cache(maxsize=None)
def _gamma_terms(kmax: int, variant: str) -> Tuple[NcPoly, ...]:
    if variant == "plain":
        first = NcPoly.symbol(Base.U)
        middle = NcPoly.symbol(Base.UHAT)
        sign = -1
    else:
        first = NcPoly.symbol(Base.UHAT, coefficient=-1)
        middle = NcPoly.symbol(Base.U)
        sign = 1

    terms: List[NcPoly] = [first]
    for k in range(1, kmax):
        quadratic = nc_sum(
            [terms[l - 1] * middle * terms[k - l - 1] for l in range(1, k)],
            shape=first.shape,
        )
        terms.append((nc_derive(terms[k - 1]) + quadratic).scale(sign))
    return tuple(terms)


def gamma_terms(kmax: int, variant: str = "plain") -> GammaSeries:
    """
    Exact Riccati coefficients up to order kmax.

    Args:
        kmax: Highest order, at least 1
        variant: "plain" for Gamma (MxN) or "hat" for Gamma.hat (NxM)
    """
    _check_variant(variant)
    if kmax < 1:
        raise ValueError(f"kmax must be at least 1, got {kmax}")
    return GammaSeries(terms=_gamma_terms(kmax, variant), variant=variant)


def charge_density(k: int, variant: str = "plain") -> NcPoly:
    """
    Conserved density u.hat Gamma(k) (NxN), or u Gamma.hat(k) (MxM) for the hat variant.

    The k-th trace charge is the integral of the trace of this density.
    """
    if k < 1:
        raise ValueError(f"Charge order must be at least 1, got {k}")
    series = gamma_terms(k, variant)
    if variant == "plain":
        return NcPoly.symbol(Base.UHAT) * series[k]
    return NcPoly.symbol(Base.U) * series[k]


def variational_derivative(density: NcPoly) -> NcPoly:
    """
    delta/delta(u.hat) of the integrated trace of ``density``.

    For every u.hat-type factor in a word L * d^d(u.hat) * R the trace is
    rotated to d^d(u.hat) * (R L); integrating by parts contributes
    (-1)^d d^d(R L). The result has the shape of u (MxN).
    """
    if density.rows != density.cols:
        raise ValueError(f"Trace densities must be square, got {density.shape}")
    pieces = []
    for word, coefficient in density.terms:
        for position, sym in enumerate(word):
            if sym.base != Base.UHAT:
                continue
            rotated: Word = word[position + 1:] + word[:position]
            if not rotated:
                raise ValueError("Bare u.hat density has no variational derivative in u")
            piece = NcPoly.from_terms(("M", "N"), [(rotated, coeff_mul(coefficient, (-1) ** sym.deriv_order))])
            for _ in range(sym.deriv_order):
                piece = nc_derive(piece)
            pieces.append(piece)
    return nc_sum(pieces, shape=("M", "N"))


def variational_flow(k: int) -> NcPoly:
    """
    Hamiltonian flow d_t u = {H(k), u} = s_k delta(I_k)/delta(u.hat).

    With H(2) = -I(2) this is d(u) (transport); with H(3) = I(3) it is
    d2(u) - 2 u u.hat u, the NLS right-hand side with opposite overall sign.

    Raises:
        UnsupportedOrder: For k outside {2, 3}
    """
    if k not in HAMILTONIAN_SIGNS:
        raise UnsupportedOrder(f"Hamiltonian flows are validated for k in {sorted(HAMILTONIAN_SIGNS)}, got {k}")
    return variational_derivative(charge_density(k)).scale(HAMILTONIAN_SIGNS[k])
