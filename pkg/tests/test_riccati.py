"""Tests for the Riccati expansion, charge densities, Hamiltonian flows and numeric charges."""

import sys
import os

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest
import logging

from src.hierarchy.lax import derive_eom
from src.ncalg.polynomial import Base, NcPoly
from src.riccati.charges import ChargeReport, block_charge, evaluate_charge, riccati_residual
from src.riccati.expansion import charge_density, gamma_terms, variational_flow
from src.soliton.config import SolitonConfig
from src.soliton.fields import SolitonField
from src.utils.errors import BoundaryLeak, UnsupportedOrder
from src.utils.grid import GridField

# Set up logging
logging.basicConfig(level=logging.INFO, format='%(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

U = NcPoly.symbol(Base.U)
UHAT = NcPoly.symbol(Base.UHAT)


def create_gaussian_field(a=0.3, b=0.2, dx=0.01, x_max=10.0):
    """Scalar fields u = a exp(-x^2/2), u.hat = b exp(-x^2/2) at one time level."""
    x = np.arange(-x_max, x_max + dx / 2, dx)
    profile = np.exp(-x ** 2 / 2)
    u = (a * profile)[None, :, None, None]
    uhat = (b * profile)[None, :, None, None]
    return GridField(x=x, t=[0.0], u=u, uhat=uhat, label="gaussian")


def test_plain_coefficients():
    series = gamma_terms(3)
    assert series[1] == U
    assert series[2] == NcPoly.symbol(Base.U, 1, coefficient=-1)
    expected = NcPoly.symbol(Base.U, 2) - U * UHAT * U
    assert series[3] == expected, f"Gamma(3) = {series[3].to_text()}"
    with pytest.raises(IndexError):
        series[4]


def test_hat_coefficients():
    series = gamma_terms(2, variant="hat")
    assert series[1] == NcPoly.symbol(Base.UHAT, coefficient=-1)
    assert series[2] == NcPoly.symbol(Base.UHAT, 1, coefficient=-1)
    assert series[1].shape == ("N", "M")
    with pytest.raises(ValueError):
        gamma_terms(2, variant="other")


def test_densities():
    assert charge_density(1) == UHAT * U
    assert charge_density(1, variant="hat") == (U * UHAT).scale(-1)
    for k in range(1, 5):
        assert charge_density(k).weights() == {k + 1}, f"density {k} weights"
    logger.info("PASSED: charge densities")


def test_hamiltonian_flows_match_hierarchy():
    assert variational_flow(2) == derive_eom(1).u_rhs, variational_flow(2).to_text()
    combined = variational_flow(3) + derive_eom(2).u_rhs
    assert combined.is_zero, f"H(3) flow should be minus the NLS flow, residue {combined.to_text()}"
    with pytest.raises(UnsupportedOrder):
        variational_flow(4)


def test_truncated_riccati_residual_is_small():
    field = create_gaussian_field()
    fine = riccati_residual(gamma_terms(6), 50.0, field)
    coarse = riccati_residual(gamma_terms(2), 50.0, field)
    assert fine < 1e-8, f"kmax=6 residual {fine:.2e}"
    assert fine < coarse, f"truncation should shrink the residual: {fine:.2e} vs {coarse:.2e}"
    hat = riccati_residual(gamma_terms(6, variant="hat"), 50.0, field)
    assert hat < 1e-8, f"hat residual {hat:.2e}"
    with pytest.raises(ValueError):
        riccati_residual(gamma_terms(2), 0, field)
    logger.info(f"PASSED: Riccati residual {fine:.2e} (kmax=6), {coarse:.2e} (kmax=2)")


def test_soliton_residual_decays_with_lambda():
    cfg = SolitonConfig.from_dict(
        {"w1": 1, "w2": -2, "n": 2},
        {"modes": [{"kappa": 1.5, "kappa_hat": 1.3, "b": [[1], [0.5]], "b_hat": [[-1, -2]]}], "xi": -2},
    )
    x = np.arange(-15.0, 15.0 + 0.005, 0.01)
    field = SolitonField.closed_form(cfg).sample(x, np.array([0.0]))
    series = gamma_terms(4)
    near = riccati_residual(series, 10.0, field)
    far = riccati_residual(series, 20.0, field)
    assert far > 0, "truncated residual vanished"
    ratio = near / far
    assert ratio >= 8, f"r(10)/r(20) = {ratio:.2f} ({near:.3e} vs {far:.3e})"
    logger.info(f"PASSED: soliton Riccati residual ratio {ratio:.1f}")


def test_first_charges_match_integrals():
    a, b = 0.3, 0.2
    field = create_gaussian_field(a, b)
    first = evaluate_charge(1, field)
    assert first == pytest.approx(a * b * np.sqrt(np.pi), abs=1e-8)
    # u.hat d(u) is odd for even profiles
    assert abs(evaluate_charge(2, field)) < 1e-8
    assert block_charge(1, field)[0, 0] == pytest.approx(first, abs=1e-12)


def test_boundary_leak_warns():
    x = np.linspace(-1.0, 1.0, 201)
    ones = np.ones((1, len(x), 1, 1))
    field = GridField(x=x, t=[0.0], u=ones, uhat=ones, label="flat")
    with pytest.warns(BoundaryLeak):
        evaluate_charge(1, field)


def test_drift_is_relative():
    report = ChargeReport(k=1, times=[0.0, 1.0], values=[4.0, 4.0 + 1e-6])
    assert report.drift == pytest.approx(2.5e-7)
    small = ChargeReport(k=1, times=[0.0, 1.0], values=[0.1, 0.1 + 1e-6])
    assert small.drift == pytest.approx(1e-6)
    assert report.to_dict()["initial_value"] == [4.0, 0.0]


def main():
    """Run all tests."""
    logger.info("=" * 80)
    logger.info("RICCATI TESTS")
    logger.info("=" * 80)
    test_plain_coefficients()
    test_hat_coefficients()
    test_densities()
    test_hamiltonian_flows_match_hierarchy()
    test_truncated_riccati_residual_is_small()
    test_soliton_residual_decays_with_lambda()
    test_first_charges_match_integrals()
    test_boundary_leak_warns()
    test_drift_is_relative()
    logger.info("ALL TESTS PASSED SUCCESSFULLY")


if __name__ == "__main__":
    main()
