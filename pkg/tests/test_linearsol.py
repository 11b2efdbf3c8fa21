"""Tests for dispersion relations, linear kernels, Airy evaluators and the Burgers reductions."""

import sys
import os

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest
import logging

from src.linearsol.burgers import (
    HeatSolution,
    burgers_parameters,
    cole_hopf_burgers,
    differential_burgers_scaling,
    idempotent_factor,
    inviscid_burgers_field,
)
from src.linearsol.dispersion import close_dispersion
from src.linearsol.kernels import (
    airy_function,
    airy_kernel,
    airy_maclaurin,
    airy_scale,
    discrete_kernel,
    heat_kernel,
)
from src.utils.errors import (
    ConvergenceViolation,
    DegenerateDispersion,
    NonPositivePhi,
    OutOfValidatedRange,
    SingularScaling,
)
from src.utils.grid import GridField
from src.verify.equations import EquationId, EquationSpec, pde_residual

# Set up logging
logging.basicConfig(level=logging.INFO, format='%(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def create_sample_dispersion(n=2):
    return close_dispersion(1.0, -2.0, [1.5], [1.3], n)


def create_kernel_grid(lo=0.0, hi=2.0, dx=0.01):
    return np.arange(lo, hi + dx / 2, dx)


def test_dispersion_values():
    params = create_sample_dispersion()
    assert params.s == pytest.approx(0.5)
    assert params.mu[0] == pytest.approx(0.75)
    assert params.mu_hat[0] == pytest.approx(0.65)
    assert params.lam[0] == pytest.approx(1.6875)
    assert params.lam_hat[0] == pytest.approx(-1.2675)
    assert params.to_dict()["lambda"] == [[1.6875, 0.0]]
    logger.info("PASSED: dispersion relation n=2")


def test_transport_dispersion_uses_time_weights():
    params = close_dispersion(1.0, -2.0, [1.5], [1.3], 1, what1=1.0, what2=2.0)
    assert params.lam[0] == pytest.approx(-1.5 - 2.0 * 0.75)
    assert params.lam_hat[0] == pytest.approx(-2.0 * 0.65 - 1.3)


def test_dispersion_rejections():
    with pytest.raises(DegenerateDispersion):
        close_dispersion(1.0, -1.0, [1.5], [1.3], 2)
    with pytest.raises(ConvergenceViolation):
        close_dispersion(1.0, -2.0, [-2.0], [1.3], 2)
    # validation can be switched off for exploratory runs
    close_dispersion(1.0, -2.0, [-2.0], [1.3], 2, validate=False)
    with pytest.raises(ValueError):
        close_dispersion(1.0, 1.0, [1.5], [1.3], 2)
    with pytest.raises(ValueError):
        close_dispersion(1.0, -2.0, [1.5, 2.0], [1.3], 2)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_discrete_kernel_solves_linear_problem(n):
    params = close_dispersion(1.0, -2.0, [1.5], [1.3], n, what1=1.0, what2=2.0)
    kernel = discrete_kernel(params, [[[1.0]]], [[[-0.5]]])
    x = create_kernel_grid()
    samples = kernel.sample(x, x, np.arange(5) * 1e-3)
    space = pde_residual(EquationSpec(eq=EquationId.LINEAR_SPACE), samples)
    time = pde_residual(EquationSpec(eq=EquationId.LINEAR_TIME, n=n), samples)
    assert space.passed, f"n={n} space residual {space.residual:.2e}"
    assert time.passed, f"n={n} time residual {time.residual:.2e}"


def test_heat_kernel_solves_nls_linear_problem():
    kernel = heat_kernel(1.0, -2.0, 0.0, [[1.0]], [[1.0]])
    x = create_kernel_grid(-2.0, 2.0)
    samples = kernel.sample(x, x, np.arange(5) * 1e-3)
    time = pde_residual(EquationSpec(eq=EquationId.LINEAR_TIME, n=2), samples)
    assert time.passed, f"heat kernel time residual {time.residual:.2e}"
    with pytest.raises(DegenerateDispersion):
        heat_kernel(1.0, -1.0, 0.0, [[1.0]], [[1.0]])


def test_airy_scale():
    assert airy_scale(1.0, -2.0, -1.0) == pytest.approx(1.5)
    with pytest.raises(SingularScaling):
        airy_scale(1.0, -2.0, 0.0)
    with pytest.raises(SingularScaling):
        airy_scale(1.0, 1.0, -1.0)


def test_airy_evaluators_agree():
    zeta = np.linspace(-5.0, 5.0, 101)
    series = np.array([airy_maclaurin(z) for z in zeta])
    error = float(np.max(np.abs(airy_function(zeta) - series)))
    assert error < 1e-10, f"Maclaurin vs scipy {error:.2e}"
    assert airy_function(0.0) == pytest.approx(0.355028053887817, abs=1e-14)
    with pytest.raises(OutOfValidatedRange):
        airy_function(16.0)
    logger.info(f"PASSED: Airy evaluators agree to {error:.2e}")


def test_airy_kernel_solves_mkdv_linear_problem():
    kernel = airy_kernel(1.0, -2.0, -1.0, [[1.0]], [[1.0]])
    x = create_kernel_grid(-2.0, 2.0)
    samples = kernel.sample(x, x, -1.0 + np.arange(5) * 1e-3)
    space = pde_residual(EquationSpec(eq=EquationId.LINEAR_SPACE), samples)
    time = pde_residual(EquationSpec(eq=EquationId.LINEAR_TIME, n=3), samples)
    assert space.passed, f"Airy space residual {space.residual:.2e}"
    assert time.passed, f"Airy time residual {time.residual:.2e}"

    zeta = np.linspace(-5.0, 5.0, 1001)
    g = 1.5 * kernel.f(1.5 * zeta, np.zeros_like(zeta))
    ode = GridField(x=zeta, t=[0.0], u=g[None], uhat=np.zeros_like(g)[None])
    verdict = pde_residual(EquationSpec(eq=EquationId.AIRY_ODE), ode)
    assert verdict.passed, f"Airy ODE residual {verdict.residual:.2e}"


def test_burgers_parameters():
    inviscid = burgers_parameters(1.0)
    assert inviscid.inviscid and inviscid.viscosity == 0.0
    assert inviscid.time_scale == pytest.approx(-4.0)
    viscous = burgers_parameters(3.0)
    assert viscous.time_scale == pytest.approx(-8.0)
    assert viscous.viscosity == pytest.approx(1.0)
    assert not viscous.inviscid
    with pytest.raises(DegenerateDispersion):
        burgers_parameters(-1.0)
    differential = differential_burgers_scaling()
    assert (differential.time_scale, differential.viscosity) == (2.0, 0.5)


def test_idempotent_factor():
    assert idempotent_factor([[2.0, 2.0], [0.0, 0.0]]) == pytest.approx(2.0)
    assert idempotent_factor([[1.0]]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        idempotent_factor([[1.0, 1.0], [0.0, 2.0]])
    with pytest.raises(ValueError):
        idempotent_factor([[0.0, 0.0], [0.0, 0.0]])


@pytest.mark.parametrize("phi", [
    HeatSolution.gaussian(0.5),
    HeatSolution.twohump(0.5),
])
def test_cole_hopf_solves_viscous_burgers(phi):
    solution = cole_hopf_burgers(phi, phi.nu_hat, [[2.0, 2.0], [0.0, 0.0]])
    assert solution.viscosity == pytest.approx(1.0)
    chi = np.arange(-10.0, 10.0 + 0.005, 0.01)
    trajectory = solution.sample(chi, np.arange(5) * 1e-3)
    verdict = pde_residual(EquationSpec(eq=EquationId.BURGERS_VISCOUS, nu=solution.viscosity), trajectory)
    assert verdict.passed, f"{phi.kind} Burgers residual {verdict.residual:.2e}"


def test_constant_phi_gives_zero_field():
    solution = cole_hopf_burgers(HeatSolution.constant(), 0.5, [[1.0]])
    assert np.all(solution(np.linspace(-1, 1, 5), 0.0) == 0)


def test_cole_hopf_needs_positive_phi():
    solution = cole_hopf_burgers(HeatSolution.gaussian(0.5, amplitude=-10.0), 0.5, [[1.0]])
    with pytest.raises(NonPositivePhi):
        solution.scalar(np.array([0.0]), 0.0)


def test_inviscid_burgers():
    chi = np.linspace(-5.0, 5.0, 501)
    field = inviscid_burgers_field(chi, np.arange(5) * 1e-3, [[2.0, 2.0], [0.0, 0.0]])
    verdict = pde_residual(EquationSpec(eq=EquationId.BURGERS_INVISCID), field)
    assert verdict.residual < 1e-8, f"inviscid residual {verdict.residual:.2e}"
    with pytest.raises(ValueError):
        inviscid_burgers_field(chi, [-0.6], [[2.0, 2.0], [0.0, 0.0]])


def main():
    """Run all tests."""
    logger.info("=" * 80)
    logger.info("LINEAR PROBLEM TESTS")
    logger.info("=" * 80)
    test_dispersion_values()
    test_transport_dispersion_uses_time_weights()
    test_dispersion_rejections()
    for n in (1, 2, 3):
        test_discrete_kernel_solves_linear_problem(n)
    test_heat_kernel_solves_nls_linear_problem()
    test_airy_scale()
    test_airy_evaluators_agree()
    test_airy_kernel_solves_mkdv_linear_problem()
    test_burgers_parameters()
    test_idempotent_factor()
    test_cole_hopf_solves_viscous_burgers(HeatSolution.gaussian(0.5))
    test_cole_hopf_solves_viscous_burgers(HeatSolution.twohump(0.5))
    test_constant_phi_gives_zero_field()
    test_cole_hopf_needs_positive_phi()
    test_inviscid_burgers()
    logger.info("ALL TESTS PASSED SUCCESSFULLY")


if __name__ == "__main__":
    main()
