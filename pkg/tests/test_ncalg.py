"""Tests for noncommutative polynomials, block matrices and their numeric evaluation."""

import sys
import os

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from fractions import Fraction

import numpy as np
import pytest
import sympy
import logging

from src.ncalg.blocks import BlockMatrix, commutator
from src.ncalg.evaluate import FieldSampler, nc_eval
from src.ncalg.polynomial import Base, NcPoly, Symbol, nc_derive, nc_derive_n, normalize, normalize_coefficient
from src.utils.errors import ResidualAuxiliarySymbols, ShapeMismatch, StencilOutOfRange
from src.utils.grid import GridField
from src.verify.fd import FdScheme

# Set up logging
logging.basicConfig(level=logging.INFO, format='%(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

U = NcPoly.symbol(Base.U)
UHAT = NcPoly.symbol(Base.UHAT)


def create_sample_field(n=2, m=1, dx=0.01):
    """Smooth matrix field u = a(x) P, u.hat = b(x) R on [-3, 3] at one time level."""
    x = np.arange(-3.0, 3.0 + dx / 2, dx)
    p = np.arange(1, m * n + 1, dtype=complex).reshape(m, n)
    r = (1 + 0.5j) * np.arange(1, m * n + 1, dtype=complex).reshape(n, m)
    u = np.sin(x)[:, None, None] * p
    uhat = np.exp(-x ** 2)[:, None, None] * r
    return GridField(x=x, t=[0.0], u=u[None], uhat=uhat[None]), p, r


def test_coefficients_stay_exact():
    assert normalize_coefficient(0.5) == Fraction(1, 2)
    assert normalize_coefficient("3/4") == Fraction(3, 4)
    value = normalize_coefficient(complex(1, 2))
    assert isinstance(value, sympy.Expr), f"complex coefficient should be sympy, got {type(value)}"
    assert normalize_coefficient(sympy.I * sympy.I) == Fraction(-1), "I^2 must collapse to a Fraction"
    logger.info("PASSED: coefficient normalization")


def test_like_words_collect_and_cancel():
    p = U * UHAT * U + (U * UHAT * U).scale(2) - (U * UHAT * U).scale(3)
    assert p.is_zero, f"expected zero polynomial, got {p.to_text()}"
    q = U * UHAT + U * UHAT
    assert len(q.terms) == 1
    assert q.coefficient_of((Symbol(Base.U), Symbol(Base.UHAT))) == 2
    logger.info("PASSED: collection of like words")


def test_shapes_must_compose():
    with pytest.raises(ShapeMismatch):
        U * U
    with pytest.raises(ShapeMismatch):
        U + UHAT
    assert (U * UHAT).shape == ("M", "M")
    assert (UHAT * U).shape == ("N", "N")


def test_derivative_follows_leibniz():
    p = U * UHAT * U
    d = nc_derive(p)
    expected = (
        NcPoly.word((Base.U, 1), (Base.UHAT, 0), (Base.U, 0))
        + NcPoly.word((Base.U, 0), (Base.UHAT, 1), (Base.U, 0))
        + NcPoly.word((Base.U, 0), (Base.UHAT, 0), (Base.U, 1))
    )
    assert d == expected, f"{d.to_text()} != {expected.to_text()}"
    assert nc_derive_n(U, 3) == NcPoly.symbol(Base.U, 3)
    assert d.weights() == {4}, f"derivative should raise the weight by one, got {d.weights()}"


def test_derivative_rules_rewrite_auxiliary_symbols():
    a = NcPoly.symbol(Base.A)
    rule = UHAT * U
    d = nc_derive(U * a, {Base.A: rule})
    expected = NcPoly.word((Base.U, 1), (Base.A, 0)) + U * UHAT * U
    assert d == expected, f"{d.to_text()} != {expected.to_text()}"


def test_text_form_is_stable():
    p = (UHAT * NcPoly.symbol(Base.U, 1)) - (UHAT * U * UHAT * U).scale(2)
    assert p.to_text() == "u.hat * d1(u) - 2 * u.hat * u * u.hat * u", p.to_text()


def test_block_products_and_commutators():
    q = BlockMatrix.potential()
    sigma = BlockMatrix.sigma()
    anti = commutator(sigma, q)
    # [Sigma, Q] = [[0, 2 u.hat], [-2 u, 0]]
    assert anti[0, 1] == UHAT.scale(2), anti[0, 1].to_text()
    assert anti[1, 0] == U.scale(-2), anti[1, 0].to_text()
    assert anti[0, 0].is_zero and anti[1, 1].is_zero
    square = q.matmul(q)
    assert square.is_block_diagonal
    assert square[0, 0] == UHAT * U
    assert square[1, 1] == U * UHAT


def test_sampler_matches_direct_evaluation():
    field, p, r = create_sample_field()
    sampler = FieldSampler(field, FdScheme(order=4))
    values = sampler.poly(UHAT * U)
    expected = (np.exp(-field.x ** 2) * np.sin(field.x))[:, None, None] * (r @ p)
    assert np.allclose(values[0], expected), "u.hat u evaluation mismatch"

    derivative = sampler.poly(NcPoly.symbol(Base.U, 1))[0]
    interior = np.isfinite(derivative[:, 0, 0])
    exact = np.cos(field.x)[:, None, None] * p
    error = np.max(np.abs(derivative[interior] - exact[interior]))
    assert error < 1e-8, f"fourth-order d1(u) error {error:.2e}"
    logger.info(f"PASSED: sampler derivative error {error:.2e}")


def test_block_assembly_layout():
    field, p, r = create_sample_field(n=2, m=1)
    block = FieldSampler(field, FdScheme()).block(BlockMatrix.potential())
    assert block.shape == (1, len(field.x), 3, 3)
    assert np.allclose(block[0, :, :2, 2:], field.uhat[0])
    assert np.allclose(block[0, :, 2:, :2], field.u[0])
    assert np.allclose(block[0, :, :2, :2], 0)


def test_point_evaluation_and_stencil_bounds():
    field, p, r = create_sample_field()
    scheme = FdScheme(order=4)
    index = len(field.x) // 2
    value = nc_eval(NcPoly.symbol(Base.U, 2), field, index, scheme)
    exact = -np.sin(field.x[index]) * p
    assert np.allclose(value, exact, atol=1e-7)
    with pytest.raises(StencilOutOfRange):
        nc_eval(NcPoly.symbol(Base.U, 2), field, 1, scheme)
    one_sided = nc_eval(NcPoly.symbol(Base.U, 2), field, 1, FdScheme(order=4, boundary="one-sided"))
    assert np.allclose(one_sided, -np.sin(field.x[1]) * p, atol=1e-6)


def test_auxiliary_symbols_cannot_be_evaluated():
    field, _, _ = create_sample_field(n=1, m=1)
    with pytest.raises(ResidualAuxiliarySymbols):
        FieldSampler(field, FdScheme()).poly(NcPoly.symbol(Base.A))

def create_random_poly(rng, pairs=2, max_order=2):
    """Random N x N polynomial: words u.hat^(i) u^(j) repeated up to ``pairs`` times, plus the identity."""
    terms = []
    for _ in range(int(rng.integers(1, 5))):
        word = []
        for _ in range(int(rng.integers(0, pairs + 1))):
            word.append(Symbol(Base.UHAT, int(rng.integers(0, max_order + 1))))
            word.append(Symbol(Base.U, int(rng.integers(0, max_order + 1))))
        coefficient = Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4)))
        terms.append((tuple(word), coefficient))
    return NcPoly.from_terms(("N", "N"), terms)


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_ring_axioms_on_random_polynomials(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (create_random_poly(rng) for _ in range(3))
    assert (a * b) * c == a * (b * c), "product is not associative"
    assert a * (b + c) == a * b + a * c, "left distributivity fails"
    assert (a + b) * c == a * c + b * c, "right distributivity fails"
    identity = NcPoly.identity("N")
    assert identity * a == a and a * identity == a


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_product_leibniz_on_random_polynomials(seed):
    rng = np.random.default_rng(100 + seed)
    a, b = create_random_poly(rng), create_random_poly(rng)
    left = nc_derive(a * b)
    right = nc_derive(a) * b + a * nc_derive(b)
    assert left == right, f"{left.to_text()} != {right.to_text()}"
    assert nc_derive(NcPoly.identity("N")).is_zero


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_normalize_is_idempotent(seed):
    rng = np.random.default_rng(200 + seed)
    p = create_random_poly(rng) * create_random_poly(rng) - create_random_poly(rng)
    once = normalize(p)
    assert once == p
    assert normalize(once) == once
    shuffled = NcPoly(shape=p.shape, terms=tuple(reversed(p.terms)) + p.terms)
    assert normalize(shuffled) == p.scale(2), "duplicated terms were not collected"


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_evaluation_is_a_ring_homomorphism(seed):
    rng = np.random.default_rng(300 + seed)
    field, _, _ = create_sample_field(n=2, m=1)
    scheme = FdScheme(order=4)
    index = len(field.x) // 3
    a, b = create_random_poly(rng), create_random_poly(rng)
    value_a = nc_eval(a, field, index, scheme)
    value_b = nc_eval(b, field, index, scheme)
    assert np.allclose(nc_eval(a * b, field, index, scheme), value_a @ value_b, rtol=1e-10, atol=1e-10)
    assert np.allclose(nc_eval(a + b, field, index, scheme), value_a + value_b, rtol=1e-10, atol=1e-10)
    assert np.allclose(nc_eval(a.scale(3), field, index, scheme), 3 * value_a, rtol=1e-10, atol=1e-10)


def main():
    """Run all tests."""
    logger.info("=" * 80)
    logger.info("NCALG TESTS")
    logger.info("=" * 80)
    test_coefficients_stay_exact()
    test_like_words_collect_and_cancel()
    test_shapes_must_compose()
    test_derivative_follows_leibniz()
    test_derivative_rules_rewrite_auxiliary_symbols()
    test_text_form_is_stable()
    test_block_products_and_commutators()
    test_sampler_matches_direct_evaluation()
    test_block_assembly_layout()
    test_point_evaluation_and_stencil_bounds()
    test_auxiliary_symbols_cannot_be_evaluated()
    for seed in range(5):
        test_ring_axioms_on_random_polynomials(seed)
        test_product_leibniz_on_random_polynomials(seed)
    for seed in range(3):
        test_normalize_is_idempotent(seed)
        test_evaluation_is_a_ring_homomorphism(seed)
    logger.info("ALL TESTS PASSED SUCCESSFULLY")


if __name__ == "__main__":
    main()
