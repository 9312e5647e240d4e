"""Basis recurrences vs closed forms, orthogonality, boundedness."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kanconv.basis import BasisSpec, basis_feature_count, evaluate_basis
from kanconv.tensor import Tensor, tape

from oracles import poly_closed


@pytest.fixture(autouse=True)
def _fresh_tape():
    tape().clear()
    yield
    tape().clear()


@pytest.mark.parametrize("kind", ["gram", "chebyshev", "legendre"])
def test_recurrence_matches_closed_form(kind):
    u = np.linspace(-1.0, 1.0, 1000)
    spec = BasisSpec(kind=kind, degree=5, normalization="none")
    feats = evaluate_basis(Tensor(u), spec).data
    closed_kind = "chebyshev" if kind == "chebyshev" else "legendre"
    for n in range(6):
        want = poly_closed(closed_kind, n, u)
        assert np.max(np.abs(feats[:, n] - want)) < 1e-12, f"{kind} degree {n}"


@pytest.mark.parametrize("kind", ["gram", "legendre"])
def test_gram_legendre_at_one(kind):
    spec = BasisSpec(kind=kind, degree=5, normalization="none")
    feats = evaluate_basis(Tensor(np.array([1.0])), spec).data[0]
    np.testing.assert_allclose(feats, np.ones(6), atol=1e-14)


def test_chebyshev_closed_form_value():
    spec = BasisSpec(kind="chebyshev", degree=2, normalization="none")
    feats = evaluate_basis(Tensor(np.array([0.5])), spec).data[0]
    assert abs(feats[2] - (2 * 0.25 - 1)) < 1e-15  # T2(0.5) = -0.5


def test_legendre_closed_form_value():
    spec = BasisSpec(kind="legendre", degree=2, normalization="none")
    feats = evaluate_basis(Tensor(np.array([0.5])), spec).data[0]
    assert abs(feats[2] - (3 * 0.25 - 1) / 2) < 1e-15  # P2(0.5) = -0.125


@pytest.mark.parametrize("kind", ["gram", "chebyshev", "legendre"])
def test_degree_zero_is_constant_one(kind):
    rng = np.random.default_rng(0)
    spec = BasisSpec(kind=kind, degree=0)
    feats = evaluate_basis(Tensor(rng.normal(size=(3, 4))), spec).data
    assert feats.shape == (3, 4, 1)
    np.testing.assert_array_equal(feats[..., 0], np.ones((3, 4)))


def test_feature_counts():
    assert basis_feature_count(BasisSpec(kind="gram", degree=3)) == 4
    assert basis_feature_count(BasisSpec(kind="chebyshev", degree=5)) == 6
    assert basis_feature_count(BasisSpec(kind="rbf", degree=8, normalization="none")) == 8


def test_legendre_orthogonality_quadrature():
    # 2048-point trapezoid quadrature of P_n * P_m over [-1, 1]
    u = np.linspace(-1.0, 1.0, 2048)
    spec = BasisSpec(kind="legendre", degree=5, normalization="none")
    feats = evaluate_basis(Tensor(u), spec).data
    for n in range(6):
        for m in range(n + 1, 6):
            val = np.trapezoid(feats[:, n] * feats[:, m], u)
            assert abs(val) < 1e-3, f"<P{n}, P{m}> = {val}"


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-50, 50, allow_nan=False))
@pytest.mark.parametrize("kind", ["gram", "chebyshev", "legendre"])
def test_boundedness_under_tanh(kind, x):
    spec = BasisSpec(kind=kind, degree=5, normalization="tanh")
    feats = evaluate_basis(Tensor(np.array([x])), spec).data
    assert np.max(np.abs(feats)) <= 1.0 + 1e-12


def test_out_of_range_unnormalized_raises():
    spec = BasisSpec(kind="gram", degree=3, normalization="none")
    with pytest.raises(ValueError):
        evaluate_basis(Tensor(np.array([1.5])), spec)


def test_nonfinite_input_raises():
    spec = BasisSpec(kind="gram", degree=3)
    with pytest.raises(ValueError):
        evaluate_basis(Tensor(np.array([np.inf])), spec)


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        BasisSpec(kind="gram", degree=-1)
    with pytest.raises(ValueError):
        BasisSpec(kind="rbf", degree=0)
    with pytest.raises(ValueError):
        BasisSpec(kind="rbf", degree=4, rbf_gamma=0.0)
    with pytest.raises(ValueError):
        BasisSpec(kind="wavelet", degree=3)


def test_rbf_values():
    spec = BasisSpec(kind="rbf", degree=3, normalization="none", rbf_range=(-1.0, 1.0), rbf_gamma=2.0)
    x = np.array([0.0])
    feats = evaluate_basis(Tensor(x), spec).data[0]
    centers = np.array([-1.0, 0.0, 1.0])
    np.testing.assert_allclose(feats, np.exp(-2.0 * centers**2), atol=1e-14)


def test_spec_dict_roundtrip():
    spec = BasisSpec(kind="rbf", degree=6, normalization="none", rbf_range=(-3.0, 3.0), rbf_gamma=0.5)
    again = BasisSpec.from_dict(spec.to_dict())
    assert again == spec
    spec2 = BasisSpec(kind="gram", degree=4)
    assert BasisSpec.from_dict(spec2.to_dict()) == spec2
