"""Tests for the finite-difference engine, equation residuals, zero curvature and kernel constraints."""

import sys
import os

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest
import logging

from src.soliton.config import SolitonConfig
from src.soliton.fields import SolitonField, soliton_kernels
from src.utils.errors import GridMismatch, SingularScaling, StencilOutOfRange
from src.utils.grid import GridField
from src.verify.constraints import constraint_residual_maps, constraint_residuals, stencil_constraint_residuals
from src.verify.curvature import zero_curvature_residual
from src.verify.equations import (
    EquationId,
    EquationSpec,
    compact_rescaling,
    pde_residual,
    to_compact,
)
from src.verify.fd import (
    FdScheme,
    central_stencil,
    estimate_fd_floor,
    fd_derivative,
    interior,
    stencil_weights,
    sup_norm,
)

# Set up logging
logging.basicConfig(level=logging.INFO, format='%(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def create_sample_config():
    return SolitonConfig.from_dict(
        {"w1": 1, "w2": -2, "n": 2},
        {"modes": [{"kappa": 1.5, "kappa_hat": 1.3, "b": [[1], [0.5]], "b_hat": [[-1, -2]]}], "xi": -2},
    )


def create_trajectory(cfg=None):
    cfg = cfg or create_sample_config()
    x = np.arange(-15.0, 15.0 + 0.0025, 0.005)
    return SolitonField.closed_form(cfg).sample(x, np.arange(5) * 0.005)


def test_stencil_weights():
    assert np.allclose(stencil_weights((-1, 0, 1), 1), [-0.5, 0.0, 0.5])
    assert np.allclose(stencil_weights((-1, 0, 1), 2), [1.0, -2.0, 1.0])
    offsets, weights = central_stencil(1, 4)
    assert offsets == (-2, -1, 0, 1, 2)
    assert np.allclose(weights, [1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12])
    with pytest.raises(ValueError):
        stencil_weights((0, 1), 2)


def test_scheme_validation():
    assert FdScheme().half_width(1) == 2
    assert FdScheme(order=2).half_width(3) == 2
    assert FdScheme().half_width(0) == 0
    with pytest.raises(ValueError):
        FdScheme(order=3)
    with pytest.raises(ValueError):
        FdScheme(boundary="periodic")


@pytest.mark.parametrize("boundary", ["shrink-domain", "one-sided"])
def test_fd_derivative_accuracy(boundary):
    scheme = FdScheme(boundary=boundary)
    x = np.linspace(0.0, 2.0, 401)
    samples = np.sin(x)
    first = fd_derivative(samples, 0, 1, scheme, x[1] - x[0])
    third = fd_derivative(samples, 0, 3, scheme, x[1] - x[0])
    assert sup_norm(first - np.cos(x)) < 1e-9
    assert sup_norm(third + np.cos(x)) < 1e-5
    if boundary == "shrink-domain":
        assert np.isnan(first[0]) and np.isnan(first[-1])
    else:
        assert np.all(np.isfinite(first))


def test_fd_derivative_errors():
    with pytest.raises(StencilOutOfRange):
        fd_derivative(np.zeros(4), 0, 1, FdScheme(), 0.1)
    with pytest.raises(ValueError):
        fd_derivative(np.zeros(20), 0, 7, FdScheme(), 0.1)
    with pytest.raises(StencilOutOfRange):
        interior(4, 2)
    assert interior(10, 2) == slice(2, 8)
    assert np.array_equal(fd_derivative(np.arange(5.0), 0, 0, FdScheme(), 1.0), np.arange(5.0))


def test_fd_floor_grows_with_derivative_order():
    scheme = FdScheme()
    low = estimate_fd_floor(scheme, 0.01, 1, 1.0)
    high = estimate_fd_floor(scheme, 0.01, 3, 1.0)
    assert 0 < low < high
    assert estimate_fd_floor(scheme, 0.01, 0, 0.5) == pytest.approx(np.finfo(float).eps)


def test_sup_norm_ignores_nan():
    assert sup_norm(np.array([np.nan, -3.0, 2.0])) == 3.0
    assert sup_norm(np.array([np.nan])) == 0.0


def test_equation_spec_validation():
    with pytest.raises(ValueError):
        EquationSpec(eq=EquationId.NLS_S3)
    with pytest.raises(ValueError):
        EquationSpec(eq=EquationId.NLS_S3, w1=1.0, w2=1.0)
    with pytest.raises(ValueError):
        EquationSpec(eq=EquationId.BURGERS_VISCOUS)
    with pytest.raises(ValueError):
        EquationSpec(eq=EquationId.LINEAR_TIME, n=0)
    spec = EquationSpec(eq="mkdv_s4_derived")
    assert spec.eq is EquationId.MKDV_S4_DERIVED
    assert spec.flow == 3
    assert EquationSpec(eq=EquationId.LINEAR_TIME, n=2).label == "linear_time(2)"


def test_residual_rejects_other_flow():
    trajectory = create_trajectory()
    assert trajectory.flow == 2
    with pytest.raises(GridMismatch):
        pde_residual(EquationSpec(eq=EquationId.MKDV_S3, w1=1.0, w2=-2.0), trajectory)
    with pytest.raises(GridMismatch):
        pde_residual(EquationSpec(eq=EquationId.NLS_S4), trajectory.snapshot(0))


def test_compact_rescaling():
    assert compact_rescaling(2, 1.0, -2.0) == pytest.approx((3.0, -2.0, 2.0))
    assert compact_rescaling(3, 1.0, -2.0) == pytest.approx((3.0, -2.0, -2.0))
    assert compact_rescaling(1, 1.0, -2.0)[0] == pytest.approx(1.0)
    with pytest.raises(SingularScaling):
        compact_rescaling(2, 1.0, -1.0)
    with pytest.raises(SingularScaling):
        compact_rescaling(1, 1.0, -2.0, what1=1.0, what2=-2.0)
    with pytest.raises(ValueError):
        compact_rescaling(4, 1.0, -2.0)


def test_to_compact_rescales_time_and_uhat():
    trajectory = create_trajectory()
    compact = to_compact(trajectory, 2, 1.0, -2.0)
    assert np.allclose(compact.t, trajectory.t / 3.0)
    assert np.allclose(compact.uhat, trajectory.uhat / -2.0)
    assert np.array_equal(compact.u, trajectory.u)
    assert compact.flow == 2


def test_zero_curvature_on_compact_trajectory():
    trajectory = create_trajectory()
    compact = to_compact(trajectory, 2, 1.0, -2.0)
    residual = zero_curvature_residual(2, compact)
    assert residual["residual"] < 1e-6, f"zero curvature {residual['residual']:.2e}"
    weighted = zero_curvature_residual(2, trajectory, [1.0])
    assert weighted["residual"] > 1e-3, "the weighted time does not match V(2)"
    with pytest.raises(GridMismatch):
        zero_curvature_residual(3, compact)
    logger.info(f"PASSED: zero curvature {residual['residual']:.2e}")


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_zero_curvature_rejects_random_smooth_fields(seed):
    rng = np.random.default_rng(seed)
    x = np.arange(-6.0, 6.0 + 0.005, 0.01)
    t = np.arange(5) * 0.005
    amplitude, width, drift = rng.uniform(0.5, 1.5, size=3)
    profile = amplitude * np.exp(-((x[None, :] - drift * t[:, None]) / width) ** 2)
    phase = np.exp(1j * rng.uniform(-1.0, 1.0) * x)[None, :]
    u = (profile * phase)[..., None, None]
    uhat = (rng.uniform(0.5, 1.5) * np.conj(profile * phase))[..., None, None]
    field = GridField(x=x, t=t, u=u, uhat=uhat, flow=2, label=f"random-{seed}")
    residual = zero_curvature_residual(2, field)
    assert residual["residual"] > 1e-2, f"random fields pass zero curvature: {residual['residual']:.2e}"


def test_kernel_constraints():
    cfg = create_sample_config()
    x = np.arange(-5.0, 5.0 + 0.01, 0.02)

    def kernels_at(xs, zs):
        return soliton_kernels(cfg, xs, zs)

    residuals = stencil_constraint_residuals(kernels_at, x, 1.0, -2.0)
    assert set(residuals) == {"A", "B", "C", "D"}
    assert max(residuals.values()) < 1e-6, f"kernel constraints {residuals}"

    def wrong_b(xs, zs):
        kernels = soliton_kernels(cfg, xs, zs)
        kernels["B"] = 1.1 * kernels["B"]
        return kernels

    broken = stencil_constraint_residuals(wrong_b, x, 1.0, -2.0)
    assert max(broken.values()) > 1e-3, f"scaled B still satisfies the constraints: {broken}"
    with pytest.raises(ValueError):
        stencil_constraint_residuals(kernels_at, x, 1.0, -2.0, step=0.0)
    logger.info(f"PASSED: kernel constraints {max(residuals.values()):.2e}")


def test_grid_constraints_converge_at_fd_order():
    cfg = create_sample_config()
    errors = []
    for dx in (0.04, 0.02):
        x = np.arange(-5.0, 5.0 + dx / 2, dx)
        errors.append(max(constraint_residuals(soliton_kernels(cfg, x, x), x, 1.0, -2.0).values()))
    order = float(np.log2(errors[0] / errors[1]))
    assert order > 3.5, f"grid FD order {order:.2f} ({errors})"

    x = np.arange(-1.0, 1.0 + 0.025, 0.05)
    kernels = soliton_kernels(cfg, x, x)
    maps = constraint_residual_maps(kernels, x, 1.0, -2.0, support="upper")
    assert np.isnan(maps["B"][10, 9]).all()
    with pytest.raises(ValueError):
        constraint_residuals(kernels, x, 1.0, -2.0, support="lower")
    with pytest.raises(GridMismatch):
        constraint_residuals(kernels, x[:-1], 1.0, -2.0)


def test_zero_field_solves_every_weighted_equation():
    x = np.linspace(-1.0, 1.0, 41)
    for eq, flow in ((EquationId.TRANSPORT_S3, 1), (EquationId.NLS_S3, 2), (EquationId.MKDV_S3, 3)):
        zero = GridField.zeros(x, np.arange(5) * 0.01, 1, 1, flow=flow)
        verdict = pde_residual(EquationSpec(eq=eq, w1=1.0, w2=-2.0), zero)
        assert verdict.residual == 0.0 and verdict.passed


def main():
    """Run all tests."""
    logger.info("=" * 80)
    logger.info("VERIFICATION TESTS")
    logger.info("=" * 80)
    test_stencil_weights()
    test_scheme_validation()
    test_fd_derivative_accuracy("shrink-domain")
    test_fd_derivative_accuracy("one-sided")
    test_fd_derivative_errors()
    test_fd_floor_grows_with_derivative_order()
    test_sup_norm_ignores_nan()
    test_equation_spec_validation()
    test_residual_rejects_other_flow()
    test_compact_rescaling()
    test_to_compact_rescales_time_and_uhat()
    test_zero_curvature_on_compact_trajectory()
    for seed in range(3):
        test_zero_curvature_rejects_random_smooth_fields(seed)
    test_kernel_constraints()
    test_grid_constraints_converge_at_fd_order()
    test_zero_field_solves_every_weighted_equation()
    logger.info("ALL TESTS PASSED SUCCESSFULLY")


if __name__ == "__main__":
    main()
