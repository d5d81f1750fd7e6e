import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lvseasons import InvalidParameters, derive, validate_params
from lvseasons.params import (
    EXAMPLES,
    MalformedField,
    NonFiniteValue,
    NonPositiveParameter,
    PhiOutOfRange,
    load_params,
    save_params,
)

pos = st.floats(0.05, 3.0)
params_st = st.builds(
    lambda omega, phi, mu, b, a: validate_params({"omega": omega, "phi": phi, "mu": mu, "b": b, "a": a}),
    st.floats(0.5, 20.0),
    st.floats(0.05, 1.0),
    st.lists(pos, min_size=3, max_size=3),
    st.lists(pos, min_size=3, max_size=3),
    st.lists(st.lists(pos, min_size=3, max_size=3), min_size=3, max_size=3),
)


def test_example1_accepted(ex1):
    assert ex1.omega == 10.0 and ex1.phi == 0.65
    np.testing.assert_array_equal(ex1.mu, [0.15, 0.2, 0.1])
    assert ex1.bad_duration == pytest.approx(3.5)


def test_arrays_are_read_only(ex1):
    with pytest.raises(ValueError):
        ex1.A[0, 0] = 1.0


def test_all_violations_reported():
    raw = dict(EXAMPLES[1], phi=1.5, mu=[0.1, -0.2, 0.1], a=[[0.2, 0.3, 0.2], [0.1, 0.0, 0.3], [0.8, 0.1, float("nan")]])
    with pytest.raises(InvalidParameters) as info:
        validate_params(raw)
    v = info.value.violations
    assert PhiOutOfRange(1.5) in v
    assert NonPositiveParameter("mu2") in v
    assert NonPositiveParameter("a22") in v
    assert NonFiniteValue("a33") in v
    assert info.value.to_dict()["error"] == "InvalidParameters"


@pytest.mark.parametrize("phi", [0.0, -0.1, 1.0000001])
def test_phi_range(phi):
    with pytest.raises(InvalidParameters) as info:
        validate_params(dict(EXAMPLES[1], phi=phi))
    assert any(isinstance(v, PhiOutOfRange) for v in info.value.violations)


def test_phi_one_allowed():
    p = validate_params(dict(EXAMPLES[1], phi=1.0))
    assert p.bad_duration == 0.0


def test_malformed_shapes():
    with pytest.raises(InvalidParameters) as info:
        validate_params(dict(EXAMPLES[1], b=[0.3, 0.3]))
    assert any(isinstance(v, MalformedField) and v.name == "b" for v in info.value.violations)
    with pytest.raises(InvalidParameters):
        validate_params({"omega": 1.0})


def test_round_trip(tmp_path, ex2):
    path = tmp_path / "p.json"
    save_params(ex2, path)
    assert load_params(path) == ex2
    assert json.loads(path.read_text())["a"] == EXAMPLES[2]["a"]


def test_example1_growth_exponents(ex1):
    # (b phi - mu (1 - phi)) omega by hand
    np.testing.assert_allclose(derive(ex1).r, [1.425, 1.25, 1.275], rtol=1e-14)


def test_example1_w_and_vartheta(ex1):
    d = derive(ex1)
    expected = {(0, 1): 0.5375, (0, 2): -4.425, (1, 0): -0.7625, (1, 2): 0.65, (2, 0): 0.575, (2, 1): -0.025}
    for (i, j), v in expected.items():
        assert d.w[i, j] == pytest.approx(v, abs=1e-13)
    # 0.5375 * 0.65 * 0.575 + (-0.7625) * (-4.425) * (-0.025)
    assert d.vartheta == pytest.approx(0.1165390625, abs=1e-12)


def test_balance_point_gives_zero_r(ex1):
    mu = ex1.b * ex1.phi / (1 - ex1.phi)
    d = derive(validate_params(dict(ex1.to_dict(), mu=mu.tolist())))
    np.testing.assert_allclose(d.r, 0.0, atol=1e-14)


def test_beta_undefined_for_degenerate_minor():
    raw = dict(EXAMPLES[1], a=[[0.2, 0.4, 0.2], [0.1, 0.2, 0.3], [0.8, 0.1, 0.3]])
    d = derive(validate_params(raw))
    assert not d.beta_defined[0, 1] and not d.beta_defined[1, 0]
    assert d.beta_defined[0, 2]
    assert d.to_dict()["beta"]["12"] is None


def test_beta_solves_planar_system(ex2):
    d = derive(ex2)
    A, r = ex2.A, d.r
    i, j = 0, 1
    th = np.array([d.beta[i, j], d.beta[j, i]])
    np.testing.assert_allclose(A[np.ix_([i, j], [i, j])] @ th, r[[i, j]], rtol=1e-13)


@settings(max_examples=60, deadline=None)
@given(params_st)
def test_gamma_is_scaled_w(p):
    d = derive(p)
    for i in range(3):
        for j in range(3):
            if i != j:
                assert math.isclose(d.gamma[i, j], p.A[i, i] * d.w[i, j], rel_tol=1e-12, abs_tol=1e-14)


@settings(max_examples=60, deadline=None)
@given(params_st)
def test_vartheta_cyclic_invariance(p):
    rotated = p.permuted([1, 2, 0])
    assert math.isclose(derive(p).vartheta, derive(rotated).vartheta, rel_tol=1e-9, abs_tol=1e-12)


@settings(max_examples=30, deadline=None)
@given(params_st)
def test_axial_theta_hat_ratio(p):
    d = derive(p)
    np.testing.assert_allclose(d.axial_theta_hat, d.r / np.diag(p.A))
