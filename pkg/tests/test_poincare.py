import numpy as np
import pytest
from scipy.optimize import fsolve

from conftest import reference_map
from lvseasons import IntegratorConfig, derive, validate_params
from lvseasons.params import EXAMPLES
from lvseasons.poincare import (
    all_fixed_points,
    axial_box,
    axial_closed_form,
    axial_fixed_point,
    axial_newton,
    axis_map_closed_form,
    face_structured_spectrum,
    interior_fixed_points,
    kolmogorov_factors,
    make_record,
    orbit_points,
    planar_fixed_points,
    poincare_jacobian,
    poincare_map,
    theta_hat,
    transversal_multiplier,
)


def fd_jacobian(params, x, h=1e-6):
    J = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        J[:, j] = (poincare_map(params, x + e) - poincare_map(params, x - e)) / (2 * h)
    return J


@pytest.mark.parametrize("k", [1, 2, 3])
def test_map_matches_independent_integrator(examples, x0s, k):
    np.testing.assert_allclose(poincare_map(examples[k], x0s[k]), reference_map(examples[k], x0s[k]), rtol=1e-9)


def test_origin_is_fixed(ex1):
    np.testing.assert_array_equal(poincare_map(ex1, np.zeros(3)), np.zeros(3))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_jacobian_at_origin(examples, k):
    r = derive(examples[k]).r
    DP = poincare_jacobian(examples[k], np.zeros(3))
    assert np.count_nonzero(DP - np.diag(np.diag(DP))) == 0
    # compared in log form: example 3 has DP_11 = e^104.75
    np.testing.assert_allclose(np.log(np.diag(DP)), r, rtol=1e-10)


@pytest.mark.parametrize("k", [1, 2])
def test_jacobian_matches_finite_differences(examples, k):
    x = np.array([0.5, 0.9, 0.7])
    np.testing.assert_allclose(poincare_jacobian(examples[k], x), fd_jacobian(examples[k], x), rtol=1e-5, atol=1e-10)


def test_jacobian_face_rows(ex2):
    DP = poincare_jacobian(ex2, [0.4, 0.06, 0.0])
    assert DP[2, 0] == 0.0 and DP[2, 1] == 0.0 and DP[2, 2] > 0


@pytest.mark.parametrize("i", [0, 1, 2])
def test_axis_closed_form(examples, i):
    for p in examples.values():
        for s in np.geomspace(1e-3, 3.0 * axial_box(p)[0], 20):
            x = np.zeros(3)
            x[i] = s
            assert poincare_map(p, x)[i] == pytest.approx(axis_map_closed_form(p, i, s), rel=1e-10)


def test_axial_closed_form_vs_newton(examples):
    for p in examples.values():
        for i in range(3):
            q = axial_closed_form(p, i)
            assert axial_newton(p, i) == pytest.approx(q, rel=1e-10)


def test_example1_axial_values(ex1):
    # b(c - e)/(a c (1 - e)) with e = exp(-b phi omega), c = exp(-mu (1-phi) omega)
    expect = [1.32820668, 1.24776781, 0.74770629]
    got = [axial_closed_form(ex1, i) for i in range(3)]
    np.testing.assert_allclose(got, expect, rtol=1e-8)


def test_axial_point_is_fixed(ex2):
    rec = axial_fixed_point(ex2, 0)
    np.testing.assert_allclose(poincare_map(ex2, rec.theta), rec.theta, rtol=1e-9)


def test_absent_axis_when_decay_dominates(ex1):
    p = validate_params(dict(EXAMPLES[1], mu=[10.0, 0.2, 0.1]))
    assert axial_closed_form(p, 0) is None
    assert axial_fixed_point(p, 0) is None
    # the axis orbit dies out
    pts = orbit_points(p, [1.0, 0.0, 0.0], 50)
    assert pts[-1, 0] < 1e-100


def test_theta_hat_at_axes(ex1):
    for i, expect in enumerate([7.125, 6.25, 4.25]):
        rec = axial_fixed_point(ex1, i)
        assert rec.theta_hat[i] == pytest.approx(expect, rel=1e-8)


def test_example1_transversal_multipliers(ex1):
    rec = axial_fixed_point(ex1, 0)
    assert rec.transversal_multipliers[1] == pytest.approx(np.exp(0.5375), rel=1e-8)
    assert rec.transversal_multipliers[2] == pytest.approx(np.exp(-4.425), rel=1e-8)
    assert transversal_multiplier(ex1, rec, 1) == rec.transversal_multipliers[1]
    with pytest.raises(ValueError):
        transversal_multiplier(ex1, rec, 0)


def test_example1_has_no_planar_points(ex1):
    for k in range(3):
        assert planar_fixed_points(ex1, k) == []


def test_example2_planar_point(ex2):
    d = derive(ex2)
    assert planar_fixed_points(ex2, 0) == [] and planar_fixed_points(ex2, 1) == []
    (rec,) = planar_fixed_points(ex2, 2)
    assert rec.label == "v3"
    np.testing.assert_allclose(rec.theta, [0.38827562, 0.06000828, 0.0], rtol=1e-7)
    np.testing.assert_allclose(rec.theta_hat[:2], [d.beta[0, 1], d.beta[1, 0]], rtol=1e-7)
    # independent root of the planar map from scipy
    # seeded inside the plane; the axis point q1 also solves the planar system
    root = fsolve(lambda u: reference_map(ex2, [u[0], u[1], 0.0])[:2] - u, [0.35, 0.08], xtol=1e-13)
    assert np.all(root > 1e-3)
    np.testing.assert_allclose(rec.theta[:2], root, rtol=1e-8)


def test_example3_planar_points(ex3):
    labels = sorted(rec.label for k in range(3) for rec in planar_fixed_points(ex3, k))
    assert labels == ["v1", "v3"]
    (v1,) = planar_fixed_points(ex3, 0)
    (v3,) = planar_fixed_points(ex3, 2)
    assert v1.transversal_multipliers[0] > 1 and v3.transversal_multipliers[2] > 1
    np.testing.assert_allclose(v1.theta, [0.0, 1.65451812, 0.55315335], rtol=1e-7)
    np.testing.assert_allclose(v3.theta, [15.43703131, 0.0951583, 0.0], rtol=1e-7)


def test_symmetric_planar_point():
    raw = {"omega": 5.0, "phi": 0.8, "mu": [0.1] * 3, "b": [1.0] * 3,
           "a": [[1.0, 0.3, 0.3], [0.3, 1.0, 0.3], [0.3, 0.3, 1.0]]}
    p = validate_params(raw)
    (rec,) = planar_fixed_points(p, 2)
    assert rec.theta[0] == pytest.approx(rec.theta[1], rel=1e-10)


def test_interior_point_example1(ex1):
    (rec,) = interior_fixed_points(ex1)
    assert rec.label == "p" and rec.residual < 1e-9
    np.testing.assert_allclose(rec.theta, [0.07250175, 0.50719104, 0.41343431], rtol=1e-7)
    tight = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    assert np.linalg.norm(poincare_map(ex1, rec.theta, tight) - rec.theta) < 1e-9


@pytest.mark.parametrize("k", [2, 3])
def test_interior_points_reverified(examples, k):
    tight = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    recs = interior_fixed_points(examples[k])
    assert recs
    for rec in recs:
        assert np.linalg.norm(poincare_map(examples[k], rec.theta, tight) - rec.theta) < 1e-9


def test_dominance_has_no_interior_point(dominance):
    assert interior_fixed_points(dominance) == []


def test_seed_env_is_respected(ex2, monkeypatch):
    a = interior_fixed_points(ex2, seed=3)
    monkeypatch.setenv("LVSEASONS_SEED", "3")
    b = interior_fixed_points(ex2)
    assert len(a) == len(b)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.theta, y.theta)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_record_invariants(examples, k):
    p = examples[k]
    r = derive(p).r
    for rec in all_fixed_points(p):
        assert rec.spectrum_mismatch() < 1e-6
        assert rec.linear_defect < 1e-7 * np.max(np.abs(r))
        assert rec.residual < 1e-9


def test_kolmogorov_factors_positive(ex2):
    q_max = axial_box(ex2)[0] / 1.05
    levels = np.linspace(0.0, 2.0 * q_max, 5)
    for a in levels:
        for b in levels:
            for c in levels:
                x = np.array([a, b, c])
                F = kolmogorov_factors(ex2, x)
                assert np.all(F > 0) and np.all(np.isfinite(F))
                P = poincare_map(ex2, x)
                pos = x > 0
                # F comes from exp(r - A theta_hat) with |A theta_hat| up to ~1e3 here
                np.testing.assert_allclose(P[pos], x[pos] * F[pos], rtol=1e-7)


def test_kolmogorov_factor_on_face_is_diagonal_partial(ex1):
    x = np.array([0.8, 0.5, 0.0])
    F = kolmogorov_factors(ex1, x)
    assert F[2] == pytest.approx(poincare_jacobian(ex1, x)[2, 2], rel=1e-8)


def test_theta_hat_is_integral(ex1):
    x = np.array([0.3, 0.4, 0.8])
    th = theta_hat(ex1, x)
    # trapezoid over a fine sampling of the same trajectory
    from lvseasons.flow import integrate_good_season

    t = np.linspace(0, ex1.good_duration, 20001)
    X = integrate_good_season(ex1, x * np.exp(-ex1.mu * ex1.bad_duration), t)[:, :3]
    np.testing.assert_allclose(th, np.trapezoid(X, t, axis=0), rtol=1e-7)


def test_face_structured_spectrum_rejects_mixed_rows():
    DP = np.array([[1.0, 0.2, 0.1], [0.0, 2.0, 0.0], [0.3, 0.0, 0.5]])
    np.testing.assert_allclose(sorted(face_structured_spectrum(DP, (0, 2)).real),
                               sorted(np.linalg.eigvals(DP).real))
    with pytest.raises(ValueError):
        face_structured_spectrum(DP, (0, 1))


def test_make_record_report(ex1):
    d = make_record(ex1, [0.0, 0.0, 0.0]).to_dict()
    assert d["label"] == "0" and d["support"] == []
