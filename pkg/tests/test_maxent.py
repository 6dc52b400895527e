import numpy as np
import pytest

from dckernel import kernels, maxent
from dckernel.errors import DomainError
from dckernel.grids import halfline_grid, unit_grid
from dckernel.kernelmat import assemble

SPEC = kernels.dc(0.2, 0.3)
GRID = halfline_grid([0.15, 0.4, 0.9, 1.3, 2.2, 3.0])


def reversed_image_grid(grid, beta):
    return unit_grid(np.exp(-2.0 * beta * grid.points)[::-1])


def test_process_covariance_is_the_gram_matrix():
    cov = maxent.dc_process_exact_covariance(GRID, SPEC)
    gram = assemble(SPEC, GRID).values
    assert np.max(np.abs(cov - gram)) <= 1e-15
    # independent spot value: exp(-alpha*(t+s) - beta*|t-s|) at (0.15, 0.4)
    assert cov[0, 1] == pytest.approx(np.exp(-0.2 * 0.55 - 0.3 * 0.25), rel=1e-15)


def test_markov_covariance_is_the_gram_matrix():
    cov = maxent.dc_markov_exact_covariance(GRID, SPEC)
    gram = assemble(SPEC, GRID).values
    assert np.max(np.abs(cov - gram)) <= 1e-13


def test_genspline_covariance_matches_unit_kernel():
    grid = unit_grid([0.1, 0.25, 0.5, 0.8, 1.0])
    rho = -0.2
    cov = maxent.genspline_exact_covariance(grid, rho)
    gram = assemble(kernels.genspline1(rho), grid).values
    assert np.max(np.abs(cov - gram)) <= 1e-14


def test_matched_seed_reversal_equivalence():
    # same noise, exponential change of coordinates: identical numbers
    _, beta, rho = kernels.stable_params(SPEC)
    image = reversed_image_grid(GRID, beta)
    dc_vals = maxent.values_matrix(maxent.sample_dc_process(GRID, SPEC, seed=11, count=64))
    gs_vals = maxent.values_matrix(
        maxent.sample_genspline_process(image, rho, seed=11, count=64)
    )
    assert np.max(np.abs(gs_vals - dc_vals[:, ::-1])) <= 1e-14


def test_markov_draws_share_law_not_paths():
    direct = maxent.values_matrix(maxent.sample_dc_process(GRID, SPEC, seed=3, count=8))
    markov = maxent.values_matrix(maxent.sample_dc_markov(GRID, SPEC, seed=3, count=8))
    assert direct.shape == markov.shape
    assert np.max(np.abs(direct - markov)) > 1e-3


def test_normal_matrix_block_prefix_property():
    # block b never depends on how many rows were requested after it
    short = maxent.standard_normal_matrix(5, 5000, 2)
    long = maxent.standard_normal_matrix(5, 8192, 2)
    assert np.array_equal(short, long[:5000])
    other = maxent.standard_normal_matrix(6, 5000, 2)
    assert not np.allclose(short, other)


def test_seed_and_count_validation():
    with pytest.raises(DomainError):
        maxent.standard_normal_matrix(-1, 4, 2)
    with pytest.raises(DomainError):
        maxent.standard_normal_matrix(1.5, 4, 2)
    with pytest.raises(DomainError):
        maxent.sample_dc_process(GRID, SPEC, seed=0, count=-3)
    assert maxent.sample_dc_process(GRID, SPEC, seed=0, count=0) == []


def test_domain_mismatches_are_rejected():
    unit = unit_grid([0.2, 0.7])
    with pytest.raises(DomainError):
        maxent.sample_genspline_process(GRID, 0.5, seed=0, count=1)
    with pytest.raises(DomainError):
        maxent.sample_dc_process(unit, SPEC, seed=0, count=1)
    with pytest.raises(DomainError):
        maxent.genspline_exact_covariance(GRID, 0.5)
    with pytest.raises(DomainError):
        maxent.verify_maxent_constraints(unit, SPEC, covariance=np.eye(2))
    with pytest.raises(DomainError):
        maxent.sample_genspline_process(unit, -0.5, seed=0, count=1)


def test_sample_wrapper_fields():
    draws = maxent.sample_dc_markov(GRID, SPEC, seed=9, count=3)
    assert len(draws) == 3
    for d in draws:
        assert d.grid is GRID
        assert d.seed == 9
        assert d.values.shape == (GRID.n,)


def test_exact_constraint_report():
    gram = assemble(SPEC, GRID).values
    report = maxent.verify_maxent_constraints(GRID, SPEC, covariance=gram)
    assert report.passed
    assert report.standard_errors is None
    assert report.max_abs_residual <= 1e-13
    assert np.all(report.mean_residuals == 0.0)


def test_mc_constraint_report():
    draws = maxent.sample_dc_process(GRID, SPEC, seed=77, count=20000)
    report = maxent.verify_maxent_constraints(GRID, SPEC, samples=draws)
    assert report.passed
    mean_se, inc_se, term_se = report.standard_errors
    assert mean_se.shape == (GRID.n,)
    assert inc_se.shape == (GRID.n - 1,)
    assert term_se > 0.0
    # inflating the trajectories breaks the variance constraints
    bad = maxent.values_matrix(draws) * 1.5
    assert not maxent.verify_maxent_constraints(GRID, SPEC, samples=bad).passed


def test_constraint_input_is_exclusive():
    gram = assemble(SPEC, GRID).values
    with pytest.raises(DomainError):
        maxent.verify_maxent_constraints(GRID, SPEC)
    with pytest.raises(DomainError):
        maxent.verify_maxent_constraints(
            GRID, SPEC, covariance=gram, samples=np.zeros((4, GRID.n))
        )
    with pytest.raises(DomainError):
        maxent.verify_maxent_constraints(GRID, SPEC, covariance=np.eye(3))
    with pytest.raises(DomainError):
        maxent.verify_maxent_constraints(GRID, SPEC, samples=np.zeros((1, GRID.n)))


def test_negative_control_keeps_constraints_loses_entropy():
    reference = maxent.dc_process_exact_covariance(GRID, SPEC)
    ref_log_det = maxent.gaussian_log_det(reference)
    for c in (0.2, 0.5):
        control = maxent.dc_negative_control_covariance(GRID, SPEC, c)
        report = maxent.verify_maxent_constraints(GRID, SPEC, covariance=control)
        assert report.passed, f"control c={c} must satisfy the constraint set"
        assert maxent.gaussian_log_det(control) < ref_log_det - 1e-2
    # zero correlation reproduces the reference construction
    same = maxent.dc_negative_control_covariance(GRID, SPEC, 0.0)
    assert np.max(np.abs(same - reference)) <= 1e-15


def test_genspline_negative_control_loses_entropy():
    grid = unit_grid([0.1, 0.3, 0.55, 0.8, 1.0])
    rho = 0.4
    reference = maxent.genspline_exact_covariance(grid, rho)
    control = maxent.genspline_negative_control_covariance(grid, rho, 0.3)
    assert maxent.gaussian_log_det(control) < maxent.gaussian_log_det(reference)
    with pytest.raises(DomainError):
        maxent.genspline_negative_control_covariance(grid, rho, 1.0)
    with pytest.raises(DomainError):
        maxent.dc_negative_control_covariance(GRID, SPEC, -0.1)


def test_log_det_rejects_singular():
    with pytest.raises(DomainError):
        maxent.gaussian_log_det(np.ones((3, 3)))
    assert maxent.gaussian_log_det(np.diag([1.0, np.e])) == pytest.approx(1.0)


def test_values_matrix_passthrough():
    mat = np.arange(6.0).reshape(2, 3)
    assert maxent.values_matrix(mat) is not None
    assert np.array_equal(maxent.values_matrix(mat), mat)
    row = np.arange(3.0)
    assert maxent.values_matrix(row).shape == (1, 3)
