import math

import numpy as np
import pytest

from thinsteklov.convergence import (
    SweepReport,
    default_epsilons,
    eigenfunction_gap,
    fit_rate,
    run_sweep,
    thin_spectrum,
    trace_flatness,
    zero_mode_deviation,
)
from thinsteklov.curve import ThicknessProfile
from thinsteklov.errors import ConfigError, InadmissibleThickness, InsufficientModes, MultiplicityMismatch
from thinsteklov.fermiform import ThinProblemSpec, build_basis
from thinsteklov.limit1d import assemble_limit, limit_spectrum

CIRCLE_EPS = [0.2, 0.1, 0.05, 0.025]
ELLIPSE_EPS = [0.1, 0.05, 0.025, 0.0125]


@pytest.fixture(scope="module")
def circle_sweep(circle):
    return run_sweep(circle, CIRCLE_EPS)


@pytest.fixture(scope="module")
def ellipse_sweep(ellipse):
    return run_sweep(ellipse, ELLIPSE_EPS)


@pytest.mark.parametrize("p", [1.0, 2.0, 0.5])
def test_fit_rate_on_exact_power_law(p):
    eps = np.array([0.1, 0.05, 0.025])
    assert fit_rate(eps, 3.0 * eps**p) == pytest.approx(p, abs=1e-12)


def test_fit_rate_degenerate_input():
    assert math.isnan(fit_rate([0.1, 0.05], [1e-3, 0.0]))
    assert math.isnan(fit_rate([0.1], [1e-3]))


def test_thin_spectrum_circle(circle):
    res = thin_spectrum(ThinProblemSpec(circle, 0.05), build_basis(24, 8), 4)
    assert res.theta.shape == (5,)
    assert abs(res.theta[0]) <= 1e-8
    assert zero_mode_deviation(res) <= 1e-6
    assert res.theta[1] == pytest.approx(1.5, rel=0.05)
    assert res.theta[2] == pytest.approx(res.theta[1], rel=1e-6)
    assert np.all(np.diff(res.theta_all[np.isfinite(res.theta_all)]) >= -1e-9)


def test_thin_vectors_have_unit_boundary_mass(ellipse):
    from thinsteklov.fermiform import assemble_thin_form

    spec = ThinProblemSpec(ellipse, 0.1)
    basis = build_basis(12, 6)
    res = thin_spectrum(spec, basis, 6)
    Mb = assemble_thin_form(spec, basis).Mb
    V = res.vectors[:, :7]
    np.testing.assert_allclose(V.T @ Mb @ V, np.eye(7), atol=1e-9)


def test_thin_spectrum_mode_limit(circle):
    basis = build_basis(4, 2)
    with pytest.raises(InsufficientModes):
        thin_spectrum(ThinProblemSpec(circle, 0.1), basis, 2 * basis.n_s)


def test_gap_of_identical_spans(circle):
    basis = build_basis(6, 2)
    op = assemble_limit(circle, 6)
    lim = limit_spectrum(op, 3)
    # embed the limit eigenfunctions as t-independent strip functions
    V = np.zeros((basis.n, 2))
    for j in range(2):
        for mode in range(basis.n_s):
            V[basis.index(mode, 0, 0), j] = lim.eigenvectors[mode, 1 + j]
    assert eigenfunction_gap(V, lim.eigenvectors[:, 1:3], basis, circle) < 1e-12
    with pytest.raises(MultiplicityMismatch):
        eigenfunction_gap(V, lim.eigenvectors[:, 1:2], basis, circle)


def test_zero_cluster_gap(circle_sweep, ellipse_sweep):
    for rep in (circle_sweep, ellipse_sweep):
        assert np.all(rep.eigenfunction_gaps[:, 0] <= 1e-6)


def test_circle_sweep_converges(circle_sweep):
    rep = circle_sweep
    np.testing.assert_allclose(rep.limit_lambdas, [0, 1.5, 1.5, 12, 12], atol=1e-10)
    assert np.all(np.abs(rep.theta[:, 0]) <= 1e-8)
    assert np.all(rep.theta[:, 1] > 0)
    for k in range(1, 5):
        assert np.all(np.diff(rep.errors[-3:, k]) < 0)
        assert rep.errors[-1, k] / rep.limit_lambdas[k] <= 0.05
    assert math.isnan(rep.rates[0])
    assert np.all(np.isfinite(rep.rates[1:]) & (rep.rates[1:] > 0))


def test_ellipse_sweep_converges(ellipse_sweep):
    rep = ellipse_sweep
    for k in range(1, 5):
        assert np.all(np.diff(rep.errors[-3:, k]) < 0)
        assert rep.errors[-1, k] / rep.limit_lambdas[k] <= 0.05


def test_circle_pairs(circle_sweep):
    th = circle_sweep.theta
    for i, j in ((1, 2), (3, 4)):
        np.testing.assert_allclose(th[:, i], th[:, j], rtol=1e-6)


def test_trace_flattening(circle_sweep, ellipse_sweep):
    for rep in (circle_sweep, ellipse_sweep):
        for k in range(1, 5):
            assert np.all(np.diff(rep.trace_flatness[:, k]) < 0)


def test_circle_gaps_sit_at_rounding_level(circle_sweep):
    # traces on the circle are exact Fourier modes, so no decrease is measurable
    assert np.max(circle_sweep.eigenfunction_gaps) < 1e-9


def test_ellipse_gaps_decrease(ellipse_sweep):
    gaps = ellipse_sweep.eigenfunction_gaps
    for k in range(1, 5):
        assert np.all(np.diff(gaps[:, k]) < 0)


def test_b_independence(circle, circle_sweep):
    other = run_sweep(circle, CIRCLE_EPS, b=2.0)
    np.testing.assert_allclose(other.theta, circle_sweep.theta, atol=1e-7, rtol=0)


def test_flatness_of_single_vector(circle):
    basis = build_basis(6, 2)
    u = np.zeros(basis.n)
    u[basis.index(0, 0, 1)] = 1.0
    # d_t u(., 0) = 1 on a curve of length 2 pi
    assert trace_flatness(basis, u, circle, 0.1) == pytest.approx(10 * math.sqrt(2 * math.pi), rel=1e-12)


def test_default_epsilons(circle, ellipse):
    assert default_epsilons(circle) == CIRCLE_EPS
    assert default_epsilons(ellipse) == ELLIPSE_EPS


@pytest.mark.parametrize("eps", [[0.2, 0.1], [0.1, 0.2, 0.05], [0.2, 0.2, 0.1]])
def test_sweep_rejects_bad_grids(circle, eps):
    with pytest.raises(ConfigError):
        run_sweep(circle, eps)


def test_sweep_rejects_inadmissible_eps(circle):
    with pytest.raises(InadmissibleThickness):
        run_sweep(circle, [0.8, 0.4, 0.2])


def test_report_round_trip(circle_sweep):
    again = SweepReport.from_json(circle_sweep.to_json())
    assert again.equals(circle_sweep)
    assert again.to_csv() == circle_sweep.to_csv()


def test_csv_layout(circle_sweep):
    lines = circle_sweep.to_csv().splitlines()
    assert lines[0] == "epsilon,k,theta,lambda_limit,abs_error,rate,gap,flatness"
    assert len(lines) == 1 + 4 * 5
    first = lines[1].split(",")
    assert first[0] == "0.2" and first[1] == "0"
    assert first[5] == ""  # no rate for the zero mode


def test_sweep_is_deterministic(circle, circle_sweep):
    again = run_sweep(circle, CIRCLE_EPS)
    assert again.to_csv() == circle_sweep.to_csv()
    threaded = run_sweep(circle, CIRCLE_EPS, threads=3)
    np.testing.assert_allclose(threaded.theta, circle_sweep.theta, rtol=1e-12, atol=1e-14)


def test_config_echo(circle_sweep):
    cfg = circle_sweep.config
    assert cfg["curve"] == {"kind": "circle", "radius": 1.0}
    assert (cfg["mu"], cfg["b"], cfg["M_s"], cfg["N_t"], cfg["M"]) == (1.0, 1.0, 24, 8, 48)
    assert cfg["mass_factor"] == 2.0


@pytest.fixture(scope="module")
def profile_sweeps(ellipse):
    g = ThicknessProfile([0.7, 0.2], [0.0, 0.0, 0.05])
    eps = [e * 0.25 / 0.5 for e in (0.2, 0.1, 0.05, 0.025)]
    return {f: run_sweep(ellipse, eps, g=g, mass_factor=f, M_s=16) for f in (1.0, 2.0)}


def test_variable_thickness_converges_with_mass_factor_two(profile_sweeps):
    rep = profile_sweeps[2.0]
    for k in range(1, 5):
        assert np.all(np.diff(rep.errors[:, k]) < 0)
        assert rep.errors[-1, k] / rep.limit_lambdas[k] < 0.05


def test_variable_thickness_literal_normalization_is_off_by_two(profile_sweeps):
    # with the unit mass factor the strip eigenvalues approach half the limit ones
    rep = profile_sweeps[1.0]
    ratio = rep.theta[:, 1:] / rep.limit_lambdas[1:]
    assert np.all(np.abs(ratio[-1] - 0.5) < 0.03)
    assert np.all(np.abs(ratio[-1] - 0.5) < np.abs(ratio[0] - 0.5))
