"""
Lax hierarchy of the matrix NLS system.

U = (lambda/2) Sigma + Q with Q = [[0, u.hat], [u, 0]]. The time components
V(n) come from the matrix Darboux recursion: the dressing matrix
K = [[A, -u.hat], [u, D]] enters through auxiliary diagonal symbols A, D,
which are eliminated with the relations u A = d(u) and u.hat D = -d(u.hat)
that follow from d(K) = Q K.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Mapping, Tuple

from src.ncalg.blocks import BlockMatrix, commutator
from src.ncalg.polynomial import (
    Base,
    Coefficient,
    NcPoly,
    Word,
    coeff_mul,
    nc_derive,
    normalize_coefficient,
    substitute_words,
)
from src.utils.errors import LambdaOrderResidual, ResidualAuxiliarySymbols, UnsupportedOrder

logger = logging.getLogger(__name__)

DEFAULT_MAX_DEPTH = 6

# Flow index -> equation name
FLOW_NAMES = {
    1: "matrix transport",
    2: "matrix NLS",
    3: "matrix mKdV",
}


@dataclass(frozen=True)
class LaxComponent:
    """Polynomial in lambda with BlockMatrix coefficients, stored as sorted (power, block) pairs."""

    lambda_terms: Tuple[Tuple[int, BlockMatrix], ...]

    @classmethod
    def from_dict(cls, terms: Mapping[int, BlockMatrix]) -> "LaxComponent":
        for power in terms:
            if power < 0:
                raise ValueError(f"Lambda powers must be non-negative, got {power}")
        kept = sorted((p, b) for p, b in terms.items() if not b.is_zero) if terms else []
        return cls(tuple(kept))

    def as_dict(self) -> Dict[int, BlockMatrix]:
        return dict(self.lambda_terms)

    def coefficient(self, power: int) -> BlockMatrix:
        return self.as_dict().get(power, BlockMatrix.zero())

    @property
    def degree(self) -> int:
        return max((p for p, _ in self.lambda_terms), default=0)

    def __add__(self, other: "LaxComponent") -> "LaxComponent":
        merged = self.as_dict()
        for power, block in other.lambda_terms:
            merged[power] = merged[power] + block if power in merged else block
        return LaxComponent.from_dict(merged)

    def __neg__(self) -> "LaxComponent":
        return LaxComponent.from_dict({p: -b for p, b in self.lambda_terms})

    def __sub__(self, other: "LaxComponent") -> "LaxComponent":
        return self + (-other)

    def __mul__(self, other: "LaxComponent") -> "LaxComponent":
        product: Dict[int, BlockMatrix] = {}
        for pa, a in self.lambda_terms:
            for pb, b in other.lambda_terms:
                term = a.matmul(b)
                product[pa + pb] = product[pa + pb] + term if pa + pb in product else term
        return LaxComponent.from_dict(product)

    def shift(self, powers: int = 1) -> "LaxComponent":
        """Multiply by lambda**powers."""
        return LaxComponent.from_dict({p + powers: b for p, b in self.lambda_terms})

    def derive(self) -> "LaxComponent":
        return LaxComponent.from_dict({p: b.derive() for p, b in self.lambda_terms})

    def max_deriv_order(self) -> int:
        return max((b.max_deriv_order() for _, b in self.lambda_terms), default=0)

    def to_text(self) -> str:
        lines = []
        for power, block in sorted(self.lambda_terms, reverse=True):
            lines.append(f"lambda^{power}:")
            lines.append(block.to_text(indent="  "))
        return "\n".join(lines) if lines else "0"

    def to_json(self) -> dict:
        return {str(p): b.to_json() for p, b in sorted(self.lambda_terms, reverse=True)}


@dataclass(frozen=True)
class EomResult:
    """Equations of motion of flow n: d_t u = u_rhs, d_t u.hat = uhat_rhs."""

    n: int
    u_rhs: NcPoly
    uhat_rhs: NcPoly

    @property
    def time_label(self) -> str:
        # printed equation lists label the flow of V(n) as t_{n+1}
        return f"t{self.n + 1}"

    @property
    def name(self) -> str:
        return FLOW_NAMES.get(self.n, f"flow {self.n}")

    def to_text(self) -> str:
        return (
            f"d_t u = {self.u_rhs.to_text()}\n"
            f"d_t u.hat = {self.uhat_rhs.to_text()}"
        )

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "time_label": self.time_label,
            "name": self.name,
            "u_rhs": self.u_rhs.to_json(),
            "uhat_rhs": self.uhat_rhs.to_json(),
            "u_rhs_text": self.u_rhs.to_text(),
            "uhat_rhs_text": self.uhat_rhs.to_text(),
        }


# ---------------------------------------------------------------------------
# Auxiliary-symbol elimination
# ---------------------------------------------------------------------------

class AuxiliaryRules:
    """
    Rewrite rules for the auxiliary diagonal dressing symbols A (NxN) and D (MxM).

    Relations: u A = c_A d(u), u.hat D = c_D d(u.hat), d(A) = dA, d(D) = dD.
    Differentiating the first relation k times gives
    d^k(u) A = E(k) with E(0) = c_A d(u), E(k) = d(E(k-1)) - d^{k-1}(u) dA,
    and likewise for u.hat with D.
    """

    def __init__(self, c_a, c_d, d_a: NcPoly, d_d: NcPoly):
        if d_a.shape != ("N", "N") or d_d.shape != ("M", "M"):
            raise ValueError(f"Derivative rules must be NxN and MxM, got {d_a.shape} and {d_d.shape}")
        if d_a.has_auxiliary() or d_d.has_auxiliary():
            raise ValueError("Derivative rules must be free of auxiliary symbols")
        self.c_a = normalize_coefficient(c_a)
        self.c_d = normalize_coefficient(c_d)
        self.d_a = d_a
        self.d_d = d_d
        self._pair_cache: Dict[Tuple[Base, int], NcPoly] = {}

    @classmethod
    def lax_rules(cls) -> "AuxiliaryRules":
        """Relations following from d(K) = Q K with K = [[A, -u.hat], [u, D]]."""
        return cls(
            c_a=1,
            c_d=-1,
            d_a=NcPoly.word((Base.UHAT, 0), (Base.U, 0)),
            d_d=NcPoly.word((Base.U, 0), (Base.UHAT, 0), coefficient=-1),
        )

    @classmethod
    def fundamental_rules(cls, w1, w2) -> "AuxiliaryRules":
        """
        Relations of the first-order differential Darboux matrix
        K = [[A, -u.hat/h], [u/h, D]], h = w1 - w2.
        """
        w1, w2 = normalize_coefficient(w1), normalize_coefficient(w2)
        h = w1 - w2
        if h == 0 or w1 == 0 or w2 == 0:
            raise ValueError(f"Weights must be non-zero and distinct, got w1={w1}, w2={w2}")
        return cls(
            c_a=-w2 / h,
            c_d=w1 / h,
            d_a=NcPoly.word((Base.UHAT, 0), (Base.U, 0), coefficient=-1 / (h * w1)),
            d_d=NcPoly.word((Base.U, 0), (Base.UHAT, 0), coefficient=1 / (h * w2)),
        )

    def derivative_rules(self) -> Dict[Base, NcPoly]:
        return {Base.A: self.d_a, Base.D: self.d_d}

    def pair(self, field: Base, order: int) -> NcPoly:
        """d^order(field) followed by its auxiliary partner, as an auxiliary-free polynomial."""
        key = (field, order)
        if key in self._pair_cache:
            return self._pair_cache[key]
        if field == Base.U:
            c, rule = self.c_a, self.d_a
        elif field == Base.UHAT:
            c, rule = self.c_d, self.d_d
        else:
            raise ValueError(f"No elimination pair for {field}")
        if order == 0:
            result = NcPoly.symbol(field, 1, coefficient=c)
        else:
            result = nc_derive(self.pair(field, order - 1)) - NcPoly.symbol(field, order - 1) * rule
        self._pair_cache[key] = result
        return result

    def _eliminate_word(self, word: Word, start: int, strict: bool) -> List[Tuple[Word, Coefficient]]:
        for position in range(start, len(word)):
            sym = word[position]
            if not sym.is_auxiliary:
                continue
            previous = word[position - 1] if position > 0 else None
            partner = {Base.A: Base.U, Base.D: Base.UHAT}[sym.base]
            if previous is None or previous.base != partner or sym.deriv_order != 0:
                if strict:
                    raise ResidualAuxiliarySymbols(
                        f"Unmatched auxiliary symbol {sym.to_text()} at position {position} "
                        f"of word {' * '.join(s.to_text() for s in word)}"
                    )
                continue
            left, right = word[:position - 1], word[position + 1:]
            expanded = []
            for pair_word, pair_coefficient in self.pair(previous.base, previous.deriv_order).terms:
                new_word = left + pair_word + right
                for w, c in self._eliminate_word(new_word, len(left), strict):
                    expanded.append((w, coeff_mul(pair_coefficient, c)))
            return expanded
        return [(word, Fraction(1))]

    def eliminate(self, p: NcPoly, strict: bool = True) -> NcPoly:
        """
        Remove every (d^k(u), A) and (d^k(u.hat), D) pair.

        Args:
            p: Polynomial over the extended alphabet
            strict: Raise on an auxiliary symbol without a matching predecessor;
                when False such symbols are left in place

        Raises:
            ResidualAuxiliarySymbols: In strict mode, if a symbol cannot be eliminated
        """
        result = []
        for word, coefficient in p.terms:
            for w, c in self._eliminate_word(word, 0, strict):
                result.append((w, coeff_mul(coefficient, c)))
        return NcPoly.from_terms(p.shape, result)

    def eliminate_block(self, matrix: BlockMatrix, strict: bool = True) -> BlockMatrix:
        return matrix.map(lambda p: self.eliminate(p, strict))


def dressing_matrix(b_scale=1, c_scale=1) -> BlockMatrix:
    """K = [[A, -b_scale * u.hat], [c_scale * u, D]] over the extended alphabet."""
    return BlockMatrix.from_blocks(
        NcPoly.symbol(Base.A),
        NcPoly.symbol(Base.UHAT, coefficient=-normalize_coefficient(b_scale)),
        NcPoly.symbol(Base.U, coefficient=normalize_coefficient(c_scale)),
        NcPoly.symbol(Base.D),
    )


# ---------------------------------------------------------------------------
# Hierarchy
# ---------------------------------------------------------------------------

def build_u_matrix() -> LaxComponent:
    """U = (lambda/2) Sigma + Q."""
    return LaxComponent.from_dict({
        1: BlockMatrix.sigma().scale(Fraction(1, 2)),
        0: BlockMatrix.potential(),
    })


@lru_cache(maxsize=None)
def _leading_coefficients(n: int) -> BlockMatrix:
    """w0(n): lambda^0 coefficient of V(n), free of auxiliary symbols."""
    rules = AuxiliaryRules.lax_rules()
    if n == 1:
        half_commutator = commutator(dressing_matrix(), BlockMatrix.sigma()).scale(Fraction(1, 2))
        return rules.eliminate_block(half_commutator)
    product = (-_leading_coefficients(n - 1)).matmul(dressing_matrix())
    return rules.eliminate_block(product)


def recursion_coefficient(n: int) -> BlockMatrix:
    """w0(n) = (-1)^(n-1) w0(1) K^(n-1) after elimination."""
    if n < 1:
        raise ValueError(f"Recursion coefficients start at n=1, got {n}")
    return _leading_coefficients(n)


def time_component(n: int, max_depth: int = DEFAULT_MAX_DEPTH) -> LaxComponent:
    """
    V(n) = lambda V(n-1) + w0(n), V(0) = Sigma / 2.

    Args:
        n: Flow index, 0 <= n <= max_depth
        max_depth: Depth cap

    Raises:
        ValueError: If n is negative or exceeds max_depth
        ResidualAuxiliarySymbols: If A or D survive elimination
    """
    if n < 0:
        raise ValueError(f"Flow index must be non-negative, got {n}")
    if n > max_depth:
        raise ValueError(f"Flow index {n} exceeds hierarchy depth cap {max_depth}")
    terms = {n: BlockMatrix.sigma().scale(Fraction(1, 2))}
    for j in range(1, n + 1):
        terms[n - j] = recursion_coefficient(j)
    component = LaxComponent.from_dict(terms)
    if any(block.has_auxiliary() for _, block in component.lambda_terms):
        raise ResidualAuxiliarySymbols(f"Auxiliary symbols survived in V({n})")
    logger.debug(f"Built V({n}) with {len(component.lambda_terms)} lambda orders")
    return component


def curvature(n: int, max_depth: int = DEFAULT_MAX_DEPTH) -> LaxComponent:
    """d_x V(n) - [U, V(n)] as a lambda polynomial."""
    u_matrix = build_u_matrix()
    v_matrix = time_component(n, max_depth)
    return v_matrix.derive() - (u_matrix * v_matrix - v_matrix * u_matrix)


def derive_eom(n: int, max_depth: int = DEFAULT_MAX_DEPTH) -> EomResult:
    """
    Equations of motion of flow n from zero curvature d_t U - d_x V + [U, V] = 0.

    Raises:
        LambdaOrderResidual: If a positive lambda power, or the lambda^0
            diagonal, of d_x V - [U, V] does not vanish
    """
    if n < 1:
        raise ValueError(f"Equations of motion need n >= 1, got {n}")
    result = curvature(n, max_depth)
    for power, block in result.lambda_terms:
        if power >= 1:
            raise LambdaOrderResidual(f"lambda^{power} term of the V({n}) curvature does not vanish")
    constant = result.coefficient(0)
    if not (constant[0, 0].is_zero and constant[1, 1].is_zero):
        raise LambdaOrderResidual(f"Diagonal lambda^0 blocks of the V({n}) curvature do not vanish")
    eom = EomResult(n=n, u_rhs=constant[1, 0], uhat_rhs=constant[0, 1])
    logger.debug(f"Derived {eom.name} ({eom.time_label}): {eom.u_rhs.to_text()}")
    return eom


def reduce_odd_flow(p: NcPoly) -> Dict[Tuple[int, ...], Coefficient]:
    """
    Square reduction u.hat -> u of a polynomial (N = M).

    Returns a map from the derivative orders of each word to its coefficient,
    e.g. d3(u) - 3 d1(u) u u - 3 u u d1(u) gives
    {(3,): 1, (1, 0, 0): -3, (0, 0, 1): -3}.
    """
    reduced = substitute_words(p, ("N", "N"), {Base.UHAT: Base.U})
    return {tuple(s.deriv_order for s in word): c for word, c in reduced.terms}


def weighted_potential(n: int, w1, w2, what1=1, what2=1) -> Tuple[BlockMatrix, ...]:
    """
    Potential part of the weighted time operators L(n) = I d_t - d_x^n + ...

    Returns the block coefficients of d_x^0, d_x^1, ... for n = 1, 2, 3 in
    the (w1, w2) normalisation with h = w1 - w2. For n = 1 the operator is
    I d_t - W.hat d_x - kappa Q with kappa = (what1 - what2) / h.
    """
    w1, w2 = normalize_coefficient(w1), normalize_coefficient(w2)
    what1, what2 = normalize_coefficient(what1), normalize_coefficient(what2)
    h = w1 - w2
    if h == 0 or w1 == 0 or w2 == 0:
        raise ValueError(f"Weights must be non-zero and distinct, got w1={w1}, w2={w2}")

    def sym(base, order=0, c=1):
        return NcPoly.symbol(base, order, coefficient=c)

    def word(*factors, c=1):
        return NcPoly.word(*factors, coefficient=c)

    first_order = BlockMatrix.from_blocks(
        word((Base.UHAT, 0), (Base.U, 0), c=-1 / w1),
        sym(Base.UHAT, 1, -1),
        sym(Base.U, 1),
        word((Base.U, 0), (Base.UHAT, 0), c=1 / w2),
    )
    if n == 1:
        kappa = (what1 - what2) / h
        return (BlockMatrix.potential().scale(-kappa),)
    if n == 2:
        return (first_order.scale(2 / h),)
    if n == 3:
        e_sum = (w1 + w2) / (w1 * w2)
        zeroth = BlockMatrix.from_blocks(
            word((Base.UHAT, 0), (Base.U, 1), c=-1) + word((Base.UHAT, 1), (Base.U, 0), c=w1 / w2),
            sym(Base.UHAT, 2, w2) + word((Base.UHAT, 0), (Base.U, 0), (Base.UHAT, 0), c=-e_sum),
            sym(Base.U, 2, w1) + word((Base.U, 0), (Base.UHAT, 0), (Base.U, 0), c=-e_sum),
            word((Base.U, 1), (Base.UHAT, 0)) + word((Base.U, 0), (Base.UHAT, 1), c=-w2 / w1),
        )
        return (zeroth.scale(3 / h ** 2), first_order.scale(3 / h))
    raise UnsupportedOrder(f"Weighted potentials are available for n = 1, 2, 3, not {n}")

