"""
Tests for the soliton module.

Single-mode Temperley-Lieb solitons are compared against the matrix solve,
checked on the weighted and compact NLS equations, translated and conserved;
two-mode data are compared against the Neumann series of the same system.
"""

import sys
import os

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import copy

import numpy as np
import pytest
import logging

from src.soliton.config import SolitonConfig, parse_complex, parse_matrix
from src.soliton.fields import (
    SolitonField,
    closed_form_one_soliton,
    neumann_coefficients,
    solve_coefficients,
    solve_fields,
    tl_denominator,
)
from src.utils.errors import ConfigError, PoleAt, SingularM
from src.verify.conservation import DRIFT_TOLERANCE, conservation_drift
from src.verify.equations import EquationId, EquationSpec, pde_residual, to_compact

# Set up logging
logging.basicConfig(level=logging.INFO, format='%(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

SAMPLE_PARAMETERS = {"w1": 1, "w2": -2, "n": 2}
SAMPLE_SOLITON = {
    "modes": [{"kappa": 1.5, "kappa_hat": 1.3, "b": [[1], [0.5]], "b_hat": [[-1, -2]]}],
    "xi": -2,
}


def create_sample_config():
    """N=2, M=1 single mode obeying the Temperley-Lieb relations with xi = -2."""
    return SolitonConfig.from_dict(SAMPLE_PARAMETERS, SAMPLE_SOLITON)


def create_two_mode_config():
    """Small-amplitude L=2 data (no Temperley-Lieb scalar)."""
    return SolitonConfig.from_parameters(
        1.0, -2.0, 2,
        kappa=[1.5, 2.0],
        kappa_hat=[1.3, 1.8],
        b=[[[0.3], [0.1]], [[0.2], [-0.1]]],
        b_hat=[[[0.2, 0.1]], [[-0.1, 0.3]]],
    )


def create_grid(lo=-15.0, hi=15.0, dx=0.005):
    return np.arange(lo, hi + dx / 2, dx)


def test_config_shapes():
    cfg = create_sample_config()
    assert (cfg.modes, cfg.n_dim, cfg.m_dim) == (1, 2, 1)
    assert cfg.flow == 2
    assert cfg.h == 3
    assert cfg.xi == -2


def test_temperley_lieb_relations_are_enforced():
    with pytest.raises(ValueError):
        SolitonConfig.from_parameters(1.0, -2.0, 2, [1.5], [1.3], [[1], [0.5]], [[-1, -2]], xi=-1)
    broken = copy.deepcopy(SAMPLE_SOLITON)
    broken["xi"] = 3
    with pytest.raises(ConfigError) as excinfo:
        SolitonConfig.from_dict(SAMPLE_PARAMETERS, broken)
    assert excinfo.value.field_path == "soliton.xi"


@pytest.mark.parametrize("parameters, soliton, field_path", [
    ({"w1": 1, "n": 2}, SAMPLE_SOLITON, "parameters.w2"),
    ({"w1": 1, "w2": 1, "n": 2}, SAMPLE_SOLITON, "parameters.w2"),
    ({"w1": 1, "w2": -2, "n": 0}, SAMPLE_SOLITON, "parameters.n"),
    (SAMPLE_PARAMETERS, {"modes": []}, "soliton.modes"),
    (SAMPLE_PARAMETERS, {"modes": [{"kappa": "abc", "kappa_hat": 1.3, "b": [[1], [0.5]], "b_hat": [[-1, -2]]}]},
     "soliton.modes[0].kappa"),
    (SAMPLE_PARAMETERS, {"modes": [{"kappa": 1.5, "kappa_hat": 1.3, "b": [[1], [0.5]], "b_hat": [[-1]]}]},
     "soliton.modes[0].b_hat"),
    (SAMPLE_PARAMETERS, {"modes": [{"kappa": 1.5, "b": [[1], [0.5]], "b_hat": [[-1, -2]]}]},
     "soliton.modes[0].kappa_hat"),
])
def test_config_errors_name_the_field(parameters, soliton, field_path):
    with pytest.raises(ConfigError) as excinfo:
        SolitonConfig.from_dict(parameters, soliton)
    assert excinfo.value.field_path == field_path, f"got {excinfo.value.field_path}"


def test_json_number_forms():
    assert parse_complex([1, -2], "x") == 1 - 2j
    assert parse_complex("1 - 2j", "x") == 1 - 2j
    assert parse_complex(3, "x") == 3
    with pytest.raises(ConfigError):
        parse_complex(True, "x")
    with pytest.raises(ConfigError):
        parse_matrix([[1, 2], [3]], "m")


def test_closed_form_matches_solve():
    cfg = create_sample_config()
    x = create_grid()
    assert np.all(np.real(tl_denominator(cfg, x)) >= 1), "xi < 0 keeps the denominator at or above one"
    u, uhat = solve_fields(cfg, x, 0.2)
    kernel_b, kernel_c = closed_form_one_soliton(cfg, x, x, 0.2)
    gap = max(np.max(np.abs(u + cfg.h * kernel_c)), np.max(np.abs(uhat - cfg.h * kernel_b)))
    assert gap < 1e-12, f"closed form vs matrix solve {gap:.2e}"
    logger.info(f"PASSED: closed form matches solve to {gap:.2e}")


def test_weighted_and_compact_nls():
    cfg = create_sample_config()
    trajectory = SolitonField.closed_form(cfg).sample(create_grid(), np.arange(5) * 0.005)
    p = cfg.params
    weighted = pde_residual(EquationSpec(eq=EquationId.NLS_S3, w1=p.w1, w2=p.w2), trajectory)
    assert weighted.passed, f"nls_s3 residual {weighted.residual:.2e}"
    compact = pde_residual(EquationSpec(eq=EquationId.NLS_S4), to_compact(trajectory, 2, p.w1, p.w2))
    assert compact.passed, f"nls_s4 residual {compact.residual:.2e}"


def test_translation():
    cfg = create_sample_config()
    x = create_grid()
    points = 40
    delta = points * (x[1] - x[0])
    u_old, _ = solve_fields(cfg, x)
    u_new, _ = solve_fields(cfg.shifted(delta), x)
    gap = float(np.max(np.abs(u_new[:-points] - u_old[points:])))
    assert gap < 1e-10, f"translation gap {gap:.2e}"
    assert cfg.shifted(delta).notes["shift"] == pytest.approx(delta)


def test_solve_far_from_the_core():
    cfg = create_sample_config()
    x = np.array([-15.0, -10.0, -8.0, 0.0, 8.0, 15.0])
    u, uhat = solve_fields(cfg, x)
    kernel_b, kernel_c = closed_form_one_soliton(cfg, x, x)
    exact_u, exact_uhat = -cfg.h * kernel_c, cfg.h * kernel_b
    assert np.all(np.abs(exact_u) > 0), "closed form underflowed"
    relative = max(
        np.max(np.abs(u - exact_u) / np.abs(exact_u)),
        np.max(np.abs(uhat - exact_uhat) / np.abs(exact_uhat)),
    )
    assert relative < 1e-10, f"relative gap to the closed form {relative:.2e}"
    logger.info(f"PASSED: solve on [-15, 15] within {relative:.2e} of the closed form")


def test_blow_up_locus_is_singular():
    soliton = copy.deepcopy(SAMPLE_SOLITON)
    soliton["modes"][0]["b_hat"] = [[1, 2]]
    soliton["xi"] = 2
    cfg = SolitonConfig.from_dict(SAMPLE_PARAMETERS, soliton)
    p = cfg.params
    rate = np.real(p.mu[0] + p.mu_hat[0] + p.kappa_hat[0] + p.kappa[0])
    scale = np.real((p.mu[0] + p.mu_hat[0]) * (p.kappa_hat[0] + p.kappa[0]))
    pole = float(np.log(cfg.xi.real / scale) / rate)
    assert abs(tl_denominator(cfg, pole)) < 1e-12
    with pytest.raises(SingularM) as excinfo:
        solve_fields(cfg, np.array([pole - 1.0, pole]))
    assert abs(excinfo.value.det) < 1e-10
    with pytest.raises(PoleAt):
        closed_form_one_soliton(cfg, pole, pole)
    u, _ = solve_fields(cfg, np.array([pole - 1.0, pole + 1.0]))
    assert np.all(np.isfinite(u))


def test_two_mode_solve_matches_neumann():
    cfg = create_two_mode_config()
    x = create_grid(0.0, 6.0)
    coeffs, coeffs_hat = solve_coefficients(cfg, x, 0.1)
    series, series_hat = neumann_coefficients(cfg, x, 0.1, terms=20)
    assert coeffs.shape == (len(x), 2, 2, 1)
    assert np.allclose(coeffs, series, atol=1e-12)
    assert np.allclose(coeffs_hat, series_hat, atol=1e-12)
    with pytest.raises(ValueError):
        closed_form_one_soliton(cfg, x, x)


def test_two_mode_fields_solve_nls():
    cfg = create_two_mode_config()
    trajectory = SolitonField(cfg).sample(create_grid(0.0, 6.0), np.arange(5) * 0.005)
    p = cfg.params
    verdict = pde_residual(EquationSpec(eq=EquationId.NLS_S3, w1=p.w1, w2=p.w2), trajectory)
    assert verdict.passed, f"two-mode nls_s3 residual {verdict.residual:.2e}"


def test_perturbed_fields_fail():
    cfg = create_sample_config()
    trajectory = SolitonField.closed_form(cfg).sample(create_grid(), np.arange(5) * 0.005)
    perturbed = trajectory.with_fields(trajectory.u * 1.1, trajectory.uhat, label="perturbed")
    p = cfg.params
    verdict = pde_residual(EquationSpec(eq=EquationId.NLS_S3, w1=p.w1, w2=p.w2), perturbed)
    assert not verdict.passed, f"a 10% perturbation should fail, residual {verdict.residual:.2e}"
    assert verdict.residual > 1e-2, f"10% perturbation residual {verdict.residual:.2e}"


def test_charges_are_conserved():
    cfg = create_sample_config()
    p = cfg.params
    trajectory = SolitonField(cfg).sample(create_grid(), np.linspace(0.0, 1.0, 21))
    reports = conservation_drift(3, to_compact(trajectory, 2, p.w1, p.w2), workers=1)
    assert [r.k for r in reports] == [1, 2, 3]
    for report in reports:
        assert not report.boundary_leak
        assert report.drift < 1e-6, f"I({report.k}) drift {report.drift:.2e}"
        logger.info(f"PASSED: I({report.k}) drift {report.drift:.2e}")


def test_drift_tolerance_notes_reports():
    cfg = create_sample_config()
    p = cfg.params
    trajectory = to_compact(SolitonField(cfg).sample(create_grid(), np.linspace(0.0, 0.1, 3)), 2, p.w1, p.w2)
    quiet = conservation_drift(2, trajectory, workers=1)
    assert DRIFT_TOLERANCE == 1e-6
    assert all(not report.notes for report in quiet), "default tolerance flagged a conserved charge"
    strict = conservation_drift(2, trajectory, workers=1, tolerance=0.0)
    for report in strict:
        assert report.notes == ["drift above 0.0e+00"], report.notes


def main():
    """Run all tests."""
    logger.info("=" * 80)
    logger.info("SOLITON TESTS")
    logger.info("=" * 80)
    test_config_shapes()
    test_temperley_lieb_relations_are_enforced()
    test_json_number_forms()
    test_closed_form_matches_solve()
    test_weighted_and_compact_nls()
    test_translation()
    test_solve_far_from_the_core()
    test_blow_up_locus_is_singular()
    test_two_mode_solve_matches_neumann()
    test_two_mode_fields_solve_nls()
    test_perturbed_fields_fail()
    test_charges_are_conserved()
    test_drift_tolerance_notes_reports()
    logger.info("ALL TESTS PASSED SUCCESSFULLY")


if __name__ == "__main__":
    main()
