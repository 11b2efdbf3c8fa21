"""
Tests for the GLM module.

A scalar Temperley-Lieb soliton kernel is solved on the truncated grid and
checked against its closed form, the resolvent routes, the operator
factorization, the kernel equations and the integral Riccati equation.
"""

import sys
import os

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import tempfile
from pathlib import Path
from functools import lru_cache

import numpy as np
import pandas as pd
import pytest
import logging

from src.glm.checks import (
    factorization_check,
    glm_constraint_residuals,
    integral_riccati_residual,
    richardson_solution,
)
from src.glm.kernel import (
    Kernel2D,
    read_kernel_csv,
    sample_kernel,
    simpson_weights,
    support_mask,
    trapezoid_weights,
    write_kernel_csv,
)
from src.glm.solver import check_decay, resolvent_fields, solve_glm
from src.linearsol.kernels import discrete_kernel
from src.soliton.config import SolitonConfig
from src.soliton.fields import closed_form_one_soliton
from src.utils.errors import ConfigError, GridMismatch, NeumannDivergence, TruncationError
from src.utils.parallel import parallel_map, worker_count
from src.verify.fd import sup_norm

# Set up logging
logging.basicConfig(level=logging.INFO, format='%(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

W1, W2 = 1.0, -2.0
FINE_DX = 0.01


def create_soliton_config(b=1.0, b_hat=-2.0):
    """Scalar single mode with kappa = kappa.hat = 2; xi = b.hat b."""
    return SolitonConfig.from_dict(
        {"w1": W1, "w2": W2, "n": 2},
        {"modes": [{"kappa": 2, "kappa_hat": 2, "b": [[b]], "b_hat": [[b_hat]]}], "xi": b * b_hat},
    )


def create_grid(lo=-1.0, hi=6.5, dx=FINE_DX):
    return np.arange(lo, hi + dx / 2, dx)


def create_kernels(cfg, x):
    return sample_kernel(discrete_kernel(cfg.params, cfg.b, cfg.b_hat), x, 0.0)


@lru_cache(maxsize=None)
def solved(stride=1):
    """Closed-form setup solved on the fine grid (stride 1) or every other point."""
    cfg = create_soliton_config()
    x = create_grid()[::stride]
    f, f_hat = create_kernels(cfg, x)
    return cfg, f, f_hat, solve_glm(f, f_hat, W1, W2)


def closed_form_error(stride):
    cfg, _, _, solution = solved(stride)
    exact_b, exact_c = closed_form_one_soliton(cfg, solution.x, solution.x)
    return max(sup_norm(solution.b_diag - exact_b), sup_norm(solution.c_diag - exact_c))


def test_quadrature_weights():
    assert np.allclose(trapezoid_weights(3, 0.5), [0.25, 0.5, 0.25])
    assert np.allclose(simpson_weights(3, 1.0), [1 / 3, 4 / 3, 1 / 3])
    assert trapezoid_weights(11, 0.1).sum() == pytest.approx(1.0)
    assert simpson_weights(11, 0.1).sum() == pytest.approx(1.0)


def test_kernel_support():
    x = create_grid(0.0, 1.0, 0.25)
    kernel = Kernel2D(x, np.ones((5, 5, 1, 2)), "upper")
    assert kernel.block_shape == (1, 2)
    assert kernel.values[3, 1, 0, 0] == 0
    assert kernel.values[1, 3, 0, 1] == 1
    assert kernel.outside_support() == 0.0
    assert np.all(kernel.diagonal() == 1)
    assert support_mask(3, "lower").sum() == 6
    with pytest.raises(ValueError):
        support_mask(3, "band")
    with pytest.raises(GridMismatch):
        Kernel2D(x, np.ones((4, 5, 1, 1)))


def test_truncation_gate():
    cfg = create_soliton_config()
    f, f_hat = create_kernels(cfg, create_grid(0.0, 2.0, 0.1))
    with pytest.raises(TruncationError):
        check_decay(f, f_hat)
    with pytest.raises(TruncationError):
        solve_glm(f, f_hat, W1, W2)
    _, f, f_hat, _ = solved(2)
    assert check_decay(f, f_hat) < 1e-8


def test_solution_blocks_are_upper():
    _, _, _, solution = solved(2)
    blocks = solution.blocks()
    assert sorted(blocks) == ["A", "B", "C", "D"]
    assert max(kernel.outside_support() for kernel in blocks.values()) == 0.0
    field = solution.field()
    assert field.u.shape == (1, len(solution.x), 1, 1)
    assert np.allclose(field.u[0], -3.0 * solution.c_diag)


def test_closed_form_and_convergence_order():
    fine = closed_form_error(1)
    coarse = closed_form_error(2)
    order = float(np.log2(coarse / fine))
    assert fine < 5e-4, f"fine grid error {fine:.2e}"
    assert order > 1.8, f"convergence order {order:.2f} (errors {coarse:.2e} -> {fine:.2e})"
    logger.info(f"PASSED: GLM error {fine:.2e}, order {order:.2f}")


def test_route_equivalence():
    _, f, f_hat, solution = solved(2)
    b_route, c_route = resolvent_fields(f, f_hat, "inverse")
    gap = max(sup_norm(b_route.values - solution.b.values), sup_norm(c_route.values - solution.c.values))
    assert gap < 1e-8, f"resolvent route vs row solve {gap:.2e}"
    with pytest.raises(ValueError):
        resolvent_fields(f, f_hat, "series")


def test_neumann_route_on_small_kernel():
    cfg = create_soliton_config(0.3, 0.3)
    x = create_grid(0.0, 6.5, 0.05)
    f, f_hat = create_kernels(cfg, x)
    direct = solve_glm(f, f_hat, W1, W2)
    b_series, c_series = resolvent_fields(f, f_hat, "neumann", terms=25)
    gap = max(sup_norm(b_series.values - direct.b.values), sup_norm(c_series.values - direct.c.values))
    assert gap < 1e-8, f"Neumann series vs direct solve {gap:.2e}"


def test_neumann_route_refuses_large_kernel():
    cfg = create_soliton_config(20.0, 20.0)
    f, f_hat = create_kernels(cfg, create_grid(0.0, 9.0, 0.1))
    with pytest.raises(NeumannDivergence):
        resolvent_fields(f, f_hat, "neumann")


def test_factorization():
    _, f, f_hat, solution = solved(1)
    report = factorization_check(solution, f, f_hat)
    assert report.residual < 1e-6, f"factorization residual {report.residual:.2e}"
    assert report.diagonal_mismatch < 1e-6
    assert report.k_minus.outside_support() == 0.0
    assert set(report.to_dict()) == {"residual", "diagonal_mismatch", "k_minus_outside_support", "rule"}

    simpson = factorization_check(solution, f, f_hat, rule="simpson")
    assert 10 * report.residual < simpson.residual < 1e-2, f"Simpson residual {simpson.residual:.2e}"
    with pytest.raises(ValueError):
        factorization_check(solution, f, f_hat, rule="gauss")
    logger.info(f"PASSED: factorization {report.residual:.2e} (Simpson {simpson.residual:.2e})")


def test_kernel_equations():
    _, _, _, solution = solved(1)
    _, _, _, coarse = solved(2)
    raw = max(glm_constraint_residuals(solution).values())
    residuals = glm_constraint_residuals(solution, coarse=coarse)
    worst = max(residuals.values())
    assert worst < 1e-3, f"kernel equation residuals {residuals}"
    assert worst < raw, f"extrapolation did not help: {worst:.2e} vs {raw:.2e}"
    extrapolated = richardson_solution(solution, coarse)
    assert np.allclose(extrapolated.x, coarse.x)
    assert extrapolated.b.outside_support() == 0.0
    with pytest.raises(GridMismatch):
        richardson_solution(solution, solution)
    logger.info(f"PASSED: kernel equations {worst:.2e} (unextrapolated {raw:.2e})")


@pytest.mark.parametrize("variant", ["plain", "hat"])
def test_integral_riccati(variant):
    _, _, _, solution = solved(1)
    residuals = integral_riccati_residual(solution, variant=variant)
    assert residuals["diagonal"] < 1e-10, f"{variant} diagonal {residuals['diagonal']:.2e}"
    assert residuals["riccati"] < 5e-3, f"{variant} Riccati residual {residuals['riccati']:.2e}"
    with pytest.raises(ValueError):
        integral_riccati_residual(solution, variant="both")


def test_kernel_csv(tmp_path):
    cfg = create_soliton_config()
    x = create_grid(0.0, 1.0, 0.25)
    f, f_hat = create_kernels(cfg, x)
    path = write_kernel_csv(str(tmp_path / "kernels" / "f.csv"), {"f": f, "f_hat": f_hat})
    blocks = read_kernel_csv(path, x)
    assert sorted(blocks) == ["f", "f_hat"]
    assert np.allclose(blocks["f"].values, f.values, rtol=0, atol=1e-15)

    broken = tmp_path / "broken.csv"
    pd.DataFrame({"block": ["f"], "i": [0], "j": [0], "re": [1.0]}).to_csv(broken, index=False)
    with pytest.raises(ConfigError) as excinfo:
        read_kernel_csv(str(broken), x)
    assert excinfo.value.field_path == "kernel.path"

    outside = tmp_path / "outside.csv"
    pd.DataFrame({"block": ["f"], "i": [0], "j": [9], "re": [1.0], "im": [0.0]}).to_csv(outside, index=False)
    with pytest.raises(ConfigError):
        read_kernel_csv(str(outside), x)
    with pytest.raises(FileNotFoundError):
        read_kernel_csv(str(tmp_path / "missing.csv"), x)


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("AKNS_THREADS", "2")
    assert worker_count(8) == 2
    assert parallel_map(lambda k: k * k, range(6), 4) == [0, 1, 4, 9, 16, 25]
    monkeypatch.setenv("AKNS_THREADS", "zero")
    with pytest.raises(ConfigError) as excinfo:
        worker_count()
    assert excinfo.value.field_path == "AKNS_THREADS"
    monkeypatch.setenv("AKNS_THREADS", "0")
    with pytest.raises(ConfigError):
        worker_count()


def main():
    """Run all tests."""
    logger.info("=" * 80)
    logger.info("GLM TESTS")
    logger.info("=" * 80)
    test_quadrature_weights()
    test_kernel_support()
    test_truncation_gate()
    test_solution_blocks_are_upper()
    test_closed_form_and_convergence_order()
    test_route_equivalence()
    test_neumann_route_on_small_kernel()
    test_neumann_route_refuses_large_kernel()
    test_factorization()
    test_kernel_equations()
    test_integral_riccati("plain")
    test_integral_riccati("hat")
    with tempfile.TemporaryDirectory() as directory:
        test_kernel_csv(Path(directory))
    with pytest.MonkeyPatch.context() as monkeypatch:
        test_thread_cap(monkeypatch)
    logger.info("ALL TESTS PASSED SUCCESSFULLY")


if __name__ == "__main__":
    main()
