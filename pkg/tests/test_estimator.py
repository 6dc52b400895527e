import numpy as np
import pytest
from scipy.integrate import dblquad

from dckernel import estimator, kernels
from dckernel.errors import ConditioningError, DomainError
from dckernel.grids import halfline_grid
from dckernel.kernelmat import assemble
from dckernel.quadrature import QuadratureConfig

# step-response representer of the beta = 0.5 single-rate kernel,
# integral of exp(-max(t, nu)) over nu in [0, s], frozen from exact arithmetic
A_STEP_T08_S05 = 0.2246644820586107957150511925077813979671
A_STEP_T08_S20 = 0.673456852174386172680184798055528629274
A_STEP_T15_S15 = 0.3346952402226447433999207061460187820133


def step_dataset(times, outputs=None, noise=0.0):
    times = np.asarray(times, dtype=float)
    if outputs is None:
        outputs = np.zeros_like(times)
    return estimator.Dataset(times, outputs, estimator.StepInput(), noise)


def test_step_and_expsum_values():
    step = estimator.StepInput(2.0)
    assert np.array_equal(step.value([-1.0, 0.0, 3.0]), [0.0, 2.0, 2.0])
    assert step.breakpoints() == (0.0,)

    mix = estimator.ExpSumInput([1.0, 2.0], [0.5, 0.0])
    assert mix.value(0.0) == pytest.approx(3.0)
    assert mix.value(-0.5) == 0.0
    assert mix.value(2.0) == pytest.approx(np.exp(-1.0) + 2.0)


def test_zoh_values_and_breakpoints():
    zoh = estimator.ZohInput([0.0, 1.0, 2.5], [1.0, -1.0, 0.5])
    got = zoh.value([-0.1, 0.0, 0.99, 1.0, 3.0, 10.0])
    assert np.array_equal(got, [0.0, 1.0, 1.0, -1.0, 0.5, 0.5])
    assert zoh.breakpoints() == (0.0, 1.0, 2.5)
    # zero before the first hold instant when it starts late
    assert estimator.ZohInput([0.5], [2.0]).value(0.2) == 0.0


def test_impulse_has_no_pointwise_values():
    imp = estimator.ImpulseInput()
    assert imp.is_impulse
    assert not estimator.StepInput().is_impulse
    with pytest.raises(DomainError):
        imp.value(0.3)


@pytest.mark.parametrize(
    "build",
    [
        lambda: estimator.StepInput(np.inf),
        lambda: estimator.ExpSumInput([1.0], [-0.1]),
        lambda: estimator.ExpSumInput([1.0, 2.0], [0.5]),
        lambda: estimator.ExpSumInput([], []),
        lambda: estimator.ZohInput([1.0, 0.5], [1.0, 2.0]),
        lambda: estimator.ZohInput([-0.5], [1.0]),
        lambda: estimator.ZohInput([0.0, 1.0], [1.0]),
    ],
)
def test_input_validation(build):
    with pytest.raises(DomainError):
        build()


def test_dataset_validation():
    with pytest.raises(DomainError):
        step_dataset([0.5, 0.5])
    with pytest.raises(DomainError):
        step_dataset([-0.1, 0.5])
    with pytest.raises(DomainError):
        step_dataset([0.1, 0.5], outputs=[np.nan, 0.0])
    with pytest.raises(DomainError):
        estimator.Dataset(np.array([0.1]), np.array([0.0]), "step", 0.0)
    with pytest.raises(DomainError):
        step_dataset([0.1, 0.5], noise=-1.0)
    ds = step_dataset([0.1, 0.5])
    with pytest.raises(ValueError):
        ds.output_times[0] = 9.0


def test_impulse_bypass_is_exact():
    spec = kernels.dc(0.2, 0.3)
    times = np.linspace(0.1, 3.0, 6)
    ds = estimator.Dataset(times, np.zeros(6), estimator.ImpulseInput(), 0.0)
    A, basis = estimator.output_kernel(spec, ds)
    gram = assemble(spec, halfline_grid(times)).values
    assert np.array_equal(A, gram)
    probes = np.array([0.05, 0.7, 2.2])
    expected = kernels.eval_kernel(spec, probes[:, None], times[None, :])
    assert np.array_equal(basis(probes), expected)


def test_step_representer_closed_form():
    ds = step_dataset([0.5, 1.5, 2.0], outputs=[0.0, 0.0, 0.0])
    _, basis = estimator.output_kernel(kernels.tc(0.5), ds)
    row = basis(np.array([0.8]))[0]
    assert row[0] == pytest.approx(A_STEP_T08_S05, rel=1e-12)
    assert row[2] == pytest.approx(A_STEP_T08_S20, rel=1e-12)
    assert basis(np.array([1.5]))[0, 1] == pytest.approx(A_STEP_T15_S15, rel=1e-12)


def test_output_kernel_against_generic_quadrature():
    spec = kernels.dc(0.2, 0.3)
    times = np.array([0.6, 1.1, 1.9])
    ds = step_dataset(times)
    A, _ = estimator.output_kernel(spec, ds)
    assert np.array_equal(A, A.T)

    def kernel(tau, nu):
        return float(kernels.eval_kernel(spec, tau, nu))

    # an adaptive library integrator agrees to its own accuracy
    ref, err = dblquad(lambda nu, tau: kernel(tau, nu), 0.0, 1.9, 0.0, 1.1)
    assert err < 1e-6
    assert A[2, 1] == pytest.approx(ref, abs=5e-7)


def test_zero_time_sample_contributes_nothing():
    spec = kernels.tc(0.5)
    ds = step_dataset([0.0, 0.8, 1.6])
    A, basis = estimator.output_kernel(spec, ds)
    assert np.all(A[0, :] == 0.0)
    assert np.all(A[:, 0] == 0.0)
    assert np.all(basis(np.array([0.5]))[:, 0] == 0.0)


def test_output_kernel_needs_halfline_kernel():
    ds = step_dataset([0.5, 1.0])
    with pytest.raises(DomainError):
        estimator.output_kernel(kernels.spline1(), ds)


def test_solve_coefficients():
    c = estimator.solve_coefficients(np.diag([2.0, 3.0]), np.array([2.0, 3.0]), 1.0)
    assert c == pytest.approx([2.0 / 3.0, 3.0 / 4.0], rel=1e-14)
    with pytest.raises(ConditioningError):
        estimator.solve_coefficients(np.ones((3, 3)), np.ones(3), 0.0)


def test_noise_free_recovery_from_step_data():
    # true response exp(-t); step outputs are then 1 - exp(-t) exactly
    spec = kernels.tc(0.4)
    times = np.linspace(0.2, 4.0, 21)
    ds = step_dataset(times, outputs=1.0 - np.exp(-times))
    result = estimator.estimate(spec, ds, gamma=1e-8)
    assert np.max(np.abs(result.fitted_outputs() - ds.outputs)) <= 1e-6
    probe = np.linspace(0.3, 3.0, 28)
    err = np.max(np.abs(estimator.reconstruct(result, probe) - np.exp(-probe)))
    assert err <= 5e-3


def test_gamma_defaults_and_floor():
    spec = kernels.dc(0.2, 0.3)
    times = np.linspace(0.1, 2.0, 5)
    gram = assemble(spec, halfline_grid(times)).values
    y = gram @ np.ones(5)
    ds = estimator.Dataset(times, y, estimator.ImpulseInput(), 0.0)
    with pytest.warns(RuntimeWarning, match="floored"):
        result = estimator.estimate(spec, ds)
    assert result.gamma == estimator.GAMMA_FLOOR
    assert result.coefficients == pytest.approx(np.ones(5), abs=1e-6)

    ds2 = estimator.Dataset(times, y, estimator.ImpulseInput(), 0.01)
    assert estimator.estimate(spec, ds2).gamma == 0.01
    with pytest.raises(DomainError):
        estimator.estimate(spec, ds2, gamma=-1.0)
    with pytest.raises(DomainError):
        estimator.estimate(spec, ds2, gamma=np.nan)


def test_reconstruct_scalar_round_trip():
    spec = kernels.dc(0.2, 0.3)
    times = np.linspace(0.1, 2.0, 4)
    ds = estimator.Dataset(times, np.ones(4), estimator.ImpulseInput(), 0.1)
    result = estimator.estimate(spec, ds)
    out = estimator.reconstruct(result, 0.5)
    assert isinstance(out, float)
    arr = estimator.reconstruct(result, np.array([0.5, 1.0]))
    assert arr.shape == (2,)
    assert arr[0] == pytest.approx(out)


def test_grid_search_validation_and_ties():
    spec = kernels.dc(0.2, 0.3)
    times = np.linspace(0.1, 2.0, 10)
    rng = np.random.default_rng(42)
    gram = assemble(spec, halfline_grid(times)).values
    y = gram @ rng.normal(size=10) + 0.01 * rng.normal(size=10)
    ds = estimator.Dataset(times, y, estimator.ImpulseInput(), 0.0)

    search = estimator.grid_search_gamma(spec, ds, [1.0, 1e-4, 1e-2])
    assert np.array_equal(search.gammas, np.sort(search.gammas))
    assert np.all(np.isfinite(search.scores))
    assert search.best_gamma == search.gammas[search.best_index]

    # all-zero data scores every gamma identically; ties go to the largest
    flat = estimator.Dataset(times, np.zeros(10), estimator.ImpulseInput(), 0.0)
    tie = estimator.grid_search_gamma(spec, flat, [1e-3, 1e-1, 10.0])
    assert tie.best_gamma == 10.0

    small = estimator.Dataset(times[:4], y[:4], estimator.ImpulseInput(), 0.0)
    with pytest.raises(DomainError):
        estimator.grid_search_gamma(spec, small, [0.1, 1.0])
    with pytest.raises(DomainError):
        estimator.grid_search_gamma(spec, ds, [])
    with pytest.raises(DomainError):
        estimator.grid_search_gamma(spec, ds, [0.1, -1.0])


def test_quadrature_self_convergence():
    spec = kernels.dc(0.2, 0.3)
    times = np.linspace(0.4, 3.2, 6)
    ds = estimator.Dataset(
        times, np.zeros(6), estimator.ExpSumInput([1.0], [0.8]), 0.0
    )
    ref, _ = estimator.output_kernel(spec, ds, QuadratureConfig(panels=32, nodes=8))
    errs = []
    for panels in (2, 4):
        coarse, _ = estimator.output_kernel(
            spec, ds, QuadratureConfig(panels=panels, nodes=2)
        )
        errs.append(np.max(np.abs(coarse - ref)))
    assert errs[0] / errs[1] >= 2.0
