import numpy as np
import pytest

from thinsteklov.curve import ThicknessProfile
from thinsteklov.errors import ConfigError, InadmissibleThickness, JacobianDegenerate, NotPositiveDefinite
from thinsteklov.fermiform import (
    ThinProblemSpec,
    assemble_mapped_form,
    assemble_thin_form,
    assemble_volume_mass,
    build_basis,
    dump_forms,
    extract_traces,
    load_forms,
)
from thinsteklov.spectra import cholesky


def constant(basis, c=1.0):
    u = np.zeros(basis.n)
    u[basis.index(0, 0, 0)] = c
    return u


@pytest.fixture(scope="module")
def circle_forms(circle):
    basis = build_basis(12, 4)
    return assemble_thin_form(ThinProblemSpec(circle, 0.1, 1.0, 1.0), basis)


@pytest.fixture(scope="module")
def ellipse_forms(ellipse):
    basis = build_basis(12, 4)
    return assemble_thin_form(ThinProblemSpec(ellipse, 0.15, 2.0, 1.0), basis)


def test_basis_dimensions():
    basis = build_basis(4, 2)
    assert basis.n == 54 == 9 * 6
    t0, t1 = basis.trace_indices
    assert len(t0) == len(t1) == 9
    assert all(basis.triple(i)[1:] == (0, 0) for i in t0)
    d0, d1 = basis.normal_derivative_indices
    assert len(d1) == 9
    assert all(basis.triple(i)[1:] == (2, 1) for i in d1)
    assert all(basis.triple(i)[1:] == (0, 1) for i in d0)


def test_index_layout_is_a_bijection():
    basis = build_basis(5, 3)
    seen = {basis.triple(i) for i in range(basis.n)}
    assert len(seen) == basis.n
    for i in range(basis.n):
        assert basis.index(*basis.triple(i)) == i


@pytest.mark.parametrize("M_s, N_t", [(3, 4), (8, 1), (4.5, 2)])
def test_basis_rejects_small_sizes(M_s, N_t):
    with pytest.raises(ConfigError):
        build_basis(M_s, N_t) if float(M_s).is_integer() else type(build_basis(4, 2))(M_s, N_t)


def test_t_basis_is_c1_and_interpolates():
    basis = build_basis(4, 4)
    nodes = basis.nodes
    h = 1e-9
    for order in (0, 1):
        left = basis.t_basis(nodes[1:-1] - h, order)
        right = basis.t_basis(nodes[1:-1] + h, order)
        np.testing.assert_allclose(left, right, atol=1e-6)
    V = basis.t_basis(nodes, 0)
    D = basis.t_basis(nodes, 1)
    # column 0 is the constant; node-j value columns read off u(t_j) - u(0)
    np.testing.assert_allclose(V[:, 0], 1.0)
    for j in range(1, 5):
        e = np.zeros(5)
        e[j] = 1.0
        np.testing.assert_allclose(V[:, 2 * j], e, atol=1e-15)
    for j in range(5):
        e = np.zeros(5)
        e[j] = 1.0
        np.testing.assert_allclose(D[:, 2 * j + 1], e, atol=1e-12)
        np.testing.assert_allclose(V[:, 2 * j + 1], 0.0, atol=1e-15)


def test_trace_operator_right_inverse():
    basis = build_basis(6, 3)
    T, R = basis.trace_operator(), basis.trace_right_inverse()
    np.testing.assert_array_equal(T @ R, np.eye(2 * basis.n_s))


def test_constant_has_zero_energy(circle_forms, ellipse_forms):
    for forms in (circle_forms, ellipse_forms):
        u = constant(forms.basis)
        assert u @ forms.K0 @ u == 0.0
        assert np.max(np.abs(forms.K0 @ u)) == 0.0


def test_boundary_mass_of_constant(circle_forms):
    u = constant(circle_forms.basis)
    assert u @ circle_forms.Mb @ u == pytest.approx(2 * np.pi * 1.9, abs=1e-9)
    assert 2 * np.pi * 1.9 == pytest.approx(11.9380520836, abs=1e-9)


def test_boundary_mass_structure(ellipse_forms):
    Mb = ellipse_forms.Mb
    n_s = ellipse_forms.basis.n_s
    assert np.max(np.abs(Mb - Mb.T)) <= 1e-12 * np.max(np.abs(Mb))
    vals = np.linalg.eigvalsh(Mb)
    assert vals.min() > -1e-12 * vals.max()
    assert np.sum(vals > 1e-10 * vals.max()) == 2 * n_s


def test_form_symmetry_and_nonnegativity(ellipse_forms, rng):
    K0 = ellipse_forms.K0
    x, y = rng.standard_normal((2, K0.shape[0]))
    assert x @ K0 @ y == pytest.approx(y @ K0 @ x, rel=1e-11)
    for _ in range(20):
        u = rng.standard_normal(K0.shape[0])
        assert u @ K0 @ u >= -1e-10 * (u @ u)


def test_quadratic_scaling(ellipse_forms, rng):
    u = rng.standard_normal(ellipse_forms.basis.n)
    for A in (ellipse_forms.K0, ellipse_forms.Mb):
        assert (3.0 * u) @ A @ (3.0 * u) == pytest.approx(9.0 * (u @ A @ u), rel=1e-13)


def test_coercive_at_admissible_thickness(circle_forms):
    cholesky(circle_forms.shifted)


def test_volume_measure_identity(circle):
    basis = build_basis(8, 4)
    eps = 0.1
    Mv = assemble_volume_mass(ThinProblemSpec(circle, eps), basis)
    u = constant(basis)
    # annulus area / eps
    assert u @ Mv @ u == pytest.approx(2 * np.pi - np.pi * eps, abs=1e-9)


def test_quadrature_robustness(ellipse):
    spec = ThinProblemSpec(ellipse, 0.15, 1.0, 1.0)
    basis = build_basis(8, 4)
    a = assemble_thin_form(spec, basis)
    b = assemble_thin_form(spec, basis, s_oversample=12, t_points=12)
    scale = np.max(np.abs(b.K0))
    assert np.max(np.abs(a.K0 - b.K0)) < 1e-9 * scale
    assert np.max(np.abs(a.Mb - b.Mb)) < 1e-12 * np.max(np.abs(b.Mb))


def test_expansion_matches_chain_rule_assembly(ellipse, wobbly):
    # term-by-term Fermi expansion vs direct pull-back of the physical Hessian
    basis = build_basis(8, 4)
    for curve, eps in ((ellipse, 0.2), (wobbly, 0.1)):
        spec = ThinProblemSpec(curve, eps, 1.5, 1.0)
        a = assemble_thin_form(spec, basis)
        b = assemble_mapped_form(spec, basis)
        assert np.max(np.abs(a.K0 - b.K0)) < 1e-10 * np.max(np.abs(a.K0))
        assert np.max(np.abs(a.Mb - b.Mb)) < 1e-12 * np.max(np.abs(a.Mb))


def test_unit_profile_reproduces_uniform_strip(ellipse):
    basis = build_basis(8, 4)
    a = assemble_thin_form(ThinProblemSpec(ellipse, 0.1), basis)
    b = assemble_thin_form(ThinProblemSpec(ellipse, 0.1, g=ThicknessProfile([1.0])), basis)
    assert np.max(np.abs(a.K0 - b.K0)) < 1e-10 * np.max(np.abs(a.K0))


def test_profile_boundary_mass_is_inner_curve_length(circle):
    # inner boundary r = 1 - eps g(s) has length int sqrt((1 - eps g)^2 + (eps g')^2) ds
    eps = 0.2
    g = ThicknessProfile([1.0, 0.3])
    basis = build_basis(8, 4)
    forms = assemble_thin_form(ThinProblemSpec(circle, eps, g=g), basis)
    u = constant(basis)
    s = np.arange(4096) * (2 * np.pi / 4096)
    inner = np.mean(np.hypot(1 - eps * g(s, 2 * np.pi), eps * g(s, 2 * np.pi, 1))) * 2 * np.pi
    assert u @ forms.Mb @ u == pytest.approx(2 * np.pi + inner, rel=1e-12)


def test_inadmissible_thickness(circle):
    with pytest.raises(InadmissibleThickness, match="max_epsilon"):
        ThinProblemSpec(circle, 0.6)
    with pytest.raises(InadmissibleThickness):
        ThinProblemSpec(circle, 0.3, g=ThicknessProfile([1.0, 0.8]))


def test_forced_large_thickness_is_rejected(circle):
    spec = ThinProblemSpec(circle, 1.2, enforce_admissible=False)
    with pytest.raises((JacobianDegenerate, NotPositiveDefinite)):
        cholesky(assemble_thin_form(spec, build_basis(8, 4)).shifted)


def test_traces_of_constant(circle):
    basis = build_basis(6, 3)
    tr = extract_traces(basis, constant(basis, 2.5), circle, 0.1)
    for arr, val in ((tr.u0, 2.5), (tr.u1, 2.5), (tr.dt0, 0.0), (tr.dt1, 0.0)):
        np.testing.assert_allclose(arr, val, atol=1e-14)


def test_traces_of_slope_dof(circle):
    basis = build_basis(6, 3)
    u = np.zeros(basis.n)
    u[basis.index(0, 0, 1)] = 1.0
    tr = extract_traces(basis, u, circle, 0.1)
    np.testing.assert_allclose(tr.u0, 0.0, atol=1e-15)
    np.testing.assert_allclose(tr.u1, 0.0, atol=1e-15)
    np.testing.assert_allclose(tr.dt0, 10.0, rtol=1e-14)
    np.testing.assert_allclose(tr.dt1, 0.0, atol=1e-14)


def test_dump_round_trip(tmp_path, circle_forms):
    path = tmp_path / "forms.bin"
    dump_forms(circle_forms, path)
    data = load_forms(path)
    raw = path.read_bytes()
    n = circle_forms.basis.n
    assert raw[:4] == b"TSKF"
    assert len(raw) == 48 + 2 * 8 * n * n
    assert (data["n"], data["M_s"], data["N_t"]) == (n, 12, 4)
    assert (data["epsilon"], data["mu"], data["b"]) == (0.1, 1.0, 1.0)
    np.testing.assert_array_equal(data["K0"], circle_forms.K0)
    np.testing.assert_array_equal(data["Mb"], circle_forms.Mb)
