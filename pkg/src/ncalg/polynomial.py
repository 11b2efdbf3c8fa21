"""
Exact noncommutative differential polynomials in the fields u, u.hat.

Words are ordered products of symbols d^k(u), d^k(u.hat) (plus the auxiliary
dressing symbols A, D used while building the hierarchy). Coefficients are
exact: ``fractions.Fraction`` by default, promoted to a sympy Gaussian rational
only when an imaginary unit appears.
"""

import logging
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import sympy

from src.utils.errors import ShapeMismatch

logger = logging.getLogger(__name__)

Coefficient = Union[Fraction, sympy.Expr]


class Base(IntEnum):
    """Symbol alphabet. The integer value is the canonical ordering key."""

    U = 0
    UHAT = 1
    A = 2
    D = 3


# Symbolic (rows, cols) of every base; N and M stay abstract until evaluation
BASE_SHAPES = {
    Base.U: ("M", "N"),
    Base.UHAT: ("N", "M"),
    Base.A: ("N", "N"),
    Base.D: ("M", "M"),
}

BASE_LABELS = {
    Base.U: "u",
    Base.UHAT: "u.hat",
    Base.A: "A",
    Base.D: "D",
}

AUXILIARY_BASES = (Base.A, Base.D)


@dataclass(frozen=True)
class Symbol:
    """d^deriv_order applied to a base field."""

    base: Base
    deriv_order: int = 0

    def __post_init__(self):
        if self.deriv_order < 0:
            raise ValueError(f"Derivative order must be non-negative, got {self.deriv_order}")

    @property
    def rows(self) -> str:
        return BASE_SHAPES[self.base][0]

    @property
    def cols(self) -> str:
        return BASE_SHAPES[self.base][1]

    @property
    def is_auxiliary(self) -> bool:
        return self.base in AUXILIARY_BASES

    @property
    def weight(self) -> int:
        return 1 + self.deriv_order

    def sort_key(self) -> Tuple[int, int]:
        return (int(self.base), self.deriv_order)

    def derived(self) -> "Symbol":
        return Symbol(self.base, self.deriv_order + 1)

    def to_text(self) -> str:
        label = BASE_LABELS[self.base]
        if self.deriv_order == 0:
            return label
        return f"d{self.deriv_order}({label})"


Word = Tuple[Symbol, ...]


# ---------------------------------------------------------------------------
# Coefficient arithmetic
# ---------------------------------------------------------------------------

def _to_sympy(value: Coefficient) -> sympy.Expr:
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    return sympy.sympify(value)


def normalize_coefficient(value) -> Coefficient:
    """
    Exact coefficient in canonical form.

    Accepts int, Fraction, decimal strings ("3/4"), finite floats (taken at
    their exact binary value), Python complex and sympy Gaussian rationals.
    Real values are returned as Fraction, the rest as an expanded sympy
    expression a + b*I with rational a, b.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("Booleans are not valid coefficients")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, complex):
        value = _to_sympy(Fraction(value.real)) + sympy.I * _to_sympy(Fraction(value.imag))

    expr = sympy.expand(sympy.sympify(value))
    real, imag = expr.as_real_imag()
    if not (real.is_Rational and imag.is_Rational):
        raise TypeError(f"Coefficient {value} is not a Gaussian rational")
    if imag == 0:
        return Fraction(int(real.p), int(real.q))
    return sympy.expand(real + sympy.I * imag)


def coeff_add(a: Coefficient, b: Coefficient) -> Coefficient:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    return normalize_coefficient(_to_sympy(a) + _to_sympy(b))


def coeff_mul(a: Coefficient, b: Coefficient) -> Coefficient:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a * b
    return normalize_coefficient(_to_sympy(a) * _to_sympy(b))


def coeff_is_zero(value: Coefficient) -> bool:
    if isinstance(value, Fraction):
        return value == 0
    return sympy.expand(value) == 0


def coeff_to_complex(value: Coefficient) -> complex:
    if isinstance(value, Fraction):
        return complex(float(value))
    return complex(value)


def coeff_to_text(value: Coefficient) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return f"({sympy.sstr(value)})"


# ---------------------------------------------------------------------------
# Words
# ---------------------------------------------------------------------------

def word_key(word: Word) -> Tuple:
    """Canonical ordering: by length, then factor list."""
    return (len(word), tuple(s.sort_key() for s in word))


def word_weight(word: Word) -> int:
    """Grading with deg(d) = 1 and deg(field) = 1."""
    return sum(s.weight for s in word)


def word_shape(word: Word) -> Tuple[str, str]:
    """(rows, cols) of a non-empty word; raises ShapeMismatch if factors do not compose."""
    if not word:
        raise ValueError("The empty word has no intrinsic shape")
    for left, right in zip(word, word[1:]):
        if left.cols != right.rows:
            raise ShapeMismatch(
                f"Cannot compose {left.to_text()} ({left.rows}x{left.cols}) "
                f"with {right.to_text()} ({right.rows}x{right.cols})"
            )
    return (word[0].rows, word[-1].cols)


def word_to_text(word: Word) -> str:
    if not word:
        return "I"
    return " * ".join(s.to_text() for s in word)


# ---------------------------------------------------------------------------
# NcPoly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NcPoly:
    """
    Noncommutative differential polynomial with a declared symbolic shape.

    ``terms`` is a tuple of (word, coefficient) pairs in canonical order with
    distinct words and non-zero coefficients, so equal polynomials compare
    equal field by field. Build instances through the class constructors or
    ``NcPoly.from_terms``; the zero polynomial has no terms.
    """

    shape: Tuple[str, str]
    terms: Tuple[Tuple[Word, Coefficient], ...] = ()

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_terms(cls, shape: Tuple[str, str], terms: Iterable[Tuple[Word, object]]) -> "NcPoly":
        """Collect like words, drop zeros, sort and validate shapes."""
        shape = tuple(shape)
        collected: Dict[Word, Coefficient] = {}
        for word, coefficient in terms:
            word = tuple(word)
            if word:
                if word_shape(word) != shape:
                    raise ShapeMismatch(
                        f"Word {word_to_text(word)} has shape {word_shape(word)}, expected {shape}"
                    )
            elif shape[0] != shape[1]:
                raise ShapeMismatch(f"Identity word is only defined for square shapes, not {shape}")
            coefficient = normalize_coefficient(coefficient)
            if word in collected:
                collected[word] = coeff_add(collected[word], coefficient)
            else:
                collected[word] = coefficient
        ordered = sorted(
            ((w, c) for w, c in collected.items() if not coeff_is_zero(c)),
            key=lambda item: word_key(item[0]),
        )
        return cls(shape=shape, terms=tuple(ordered))

    @classmethod
    def zero(cls, shape: Tuple[str, str]) -> "NcPoly":
        return cls(shape=tuple(shape), terms=())

    @classmethod
    def identity(cls, dim: str, coefficient=1) -> "NcPoly":
        return cls.from_terms((dim, dim), [((), coefficient)])

    @classmethod
    def symbol(cls, base: Base, deriv_order: int = 0, coefficient=1) -> "NcPoly":
        sym = Symbol(base, deriv_order)
        return cls.from_terms((sym.rows, sym.cols), [((sym,), coefficient)])

    @classmethod
    def word(cls, *factors: Tuple[Base, int], coefficient=1) -> "NcPoly":
        """Single word from (base, deriv_order) pairs, e.g. NcPoly.word((Base.UHAT, 0), (Base.U, 1))."""
        word = tuple(Symbol(base, order) for base, order in factors)
        return cls.from_terms(word_shape(word), [(word, coefficient)])

    # -- queries ------------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def rows(self) -> str:
        return self.shape[0]

    @property
    def cols(self) -> str:
        return self.shape[1]

    def coefficient_of(self, word: Word) -> Coefficient:
        for w, c in self.terms:
            if w == tuple(word):
                return c
        return Fraction(0)

    def words(self) -> List[Word]:
        return [w for w, _ in self.terms]

    def max_deriv_order(self) -> int:
        return max((s.deriv_order for w, _ in self.terms for s in w), default=0)

    def has_auxiliary(self) -> bool:
        return any(s.is_auxiliary for w, _ in self.terms for s in w)

    def weights(self) -> set:
        """Set of word weights present (empty for the zero polynomial)."""
        return {word_weight(w) for w, _ in self.terms}

    # -- arithmetic ---------------------------------------------------------

    def _check_same_shape(self, other: "NcPoly") -> None:
        if self.shape != other.shape:
            raise ShapeMismatch(f"Cannot add polynomials of shapes {self.shape} and {other.shape}")

    def __add__(self, other: "NcPoly") -> "NcPoly":
        self._check_same_shape(other)
        return NcPoly.from_terms(self.shape, list(self.terms) + list(other.terms))

    def __neg__(self) -> "NcPoly":
        return self.scale(-1)

    def __sub__(self, other: "NcPoly") -> "NcPoly":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, NcPoly):
            return nc_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, factor) -> "NcPoly":
        factor = normalize_coefficient(factor)
        if coeff_is_zero(factor):
            return NcPoly.zero(self.shape)
        return NcPoly.from_terms(self.shape, [(w, coeff_mul(factor, c)) for w, c in self.terms])

    # -- output -------------------------------------------------------------

    def to_text(self) -> str:
        """Stable text form, e.g. "u.hat * d1(u) - 2 * u * u.hat * u"."""
        if self.is_zero:
            return "0"
        pieces = []
        for word, coefficient in self.terms:
            body = word_to_text(word)
            if coefficient == 1:
                piece = body
            elif coefficient == -1:
                piece = f"-{body}"
            else:
                piece = f"{coeff_to_text(coefficient)} * {body}"
            pieces.append(piece)
        return " + ".join(pieces).replace("+ -", "- ")

    def __str__(self) -> str:
        return self.to_text()

    def to_json(self) -> dict:
        return {
            "shape": list(self.shape),
            "terms": [
                {
                    "coefficient": str(c) if isinstance(c, Fraction) else sympy.sstr(c),
                    "factors": [
                        {"base": BASE_LABELS[s.base], "order": s.deriv_order} for s in w
                    ],
                }
                for w, c in self.terms
            ],
        }


def nc_mul(a: NcPoly, b: NcPoly) -> NcPoly:
    """
    Distributed product a * b.

    Raises:
        ShapeMismatch: If the column dimension of a is not the row dimension of b
    """
    if a.cols != b.rows:
        raise ShapeMismatch(f"Cannot multiply {a.shape} by {b.shape}")
    shape = (a.rows, b.cols)
    products = [
        (wa + wb, coeff_mul(ca, cb))
        for wa, ca in a.terms
        for wb, cb in b.terms
    ]
    return NcPoly.from_terms(shape, products)


def nc_sum(polys: Iterable[NcPoly], shape: Optional[Tuple[str, str]] = None) -> NcPoly:
    polys = list(polys)
    if not polys:
        if shape is None:
            raise ValueError("Shape required for an empty sum")
        return NcPoly.zero(shape)
    shape = tuple(shape) if shape is not None else polys[0].shape
    for p in polys:
        if p.shape != shape:
            raise ShapeMismatch(f"Cannot add polynomials of shapes {shape} and {p.shape}")
    return NcPoly.from_terms(shape, [t for p in polys for t in p.terms])


def nc_derive(p: NcPoly, rules: Optional[Mapping[Base, NcPoly]] = None) -> NcPoly:
    """
    Leibniz derivative d/dx.

    Args:
        p: Polynomial to differentiate
        rules: Optional derivative rewrites for auxiliary symbols; an
            underived symbol whose base has a rule is replaced by that
            polynomial instead of gaining a derivative order

    Returns:
        The derivative in canonical form
    """
    rules = rules or {}
    result: List[Tuple[Word, Coefficient]] = []
    for word, coefficient in p.terms:
        for position, sym in enumerate(word):
            left, right = word[:position], word[position + 1:]
            rule = rules.get(sym.base)
            if rule is not None and sym.deriv_order == 0:
                for rule_word, rule_coefficient in rule.terms:
                    result.append((left + rule_word + right, coeff_mul(coefficient, rule_coefficient)))
            else:
                result.append((left + (sym.derived(),) + right, coefficient))
    return NcPoly.from_terms(p.shape, result)


def nc_derive_n(p: NcPoly, times: int, rules: Optional[Mapping[Base, NcPoly]] = None) -> NcPoly:
    for _ in range(times):
        p = nc_derive(p, rules)
    return p


def normalize(p: NcPoly) -> NcPoly:
    """Re-collect a polynomial; idempotent on canonical input."""
    return NcPoly.from_terms(p.shape, p.terms)


def substitute_words(p: NcPoly, shape: Tuple[str, str], mapping: Mapping[Base, Base]) -> NcPoly:
    """
    Rename bases inside every word (e.g. u.hat -> u for the square reduction).

    The caller supplies the resulting shape; symbolic composability is checked
    against BASE_SHAPES, so this is meant for reductions where the renamed
    words still compose (N = M).
    """
    renamed = []
    for word, coefficient in p.terms:
        new_word = tuple(Symbol(mapping.get(s.base, s.base), s.deriv_order) for s in word)
        renamed.append((new_word, coefficient))
    collected: Dict[Word, Coefficient] = {}
    for word, coefficient in renamed:
        collected[word] = coeff_add(collected.get(word, Fraction(0)), coefficient)
    ordered = sorted(
        ((w, c) for w, c in collected.items() if not coeff_is_zero(c)),
        key=lambda item: word_key(item[0]),
    )
    return NcPoly(shape=tuple(shape), terms=tuple(ordered))
