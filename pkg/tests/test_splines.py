import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.interpolate import CubicSpline

from hydroindex.errors import DataError
from hydroindex.splines import build_cyclic_basis, eval_basis, roughness_penalty


def periodic_oracle(basis, coefs):
    # scipy's periodic cubic interpolant through the knot values
    x = np.append(basis.knots, 1.0)
    y = np.append(coefs, coefs[0])
    return CubicSpline(x, y, bc_type="periodic")


def test_knots():
    b = build_cyclic_basis(10)
    assert np.allclose(b.knots, np.arange(10) / 10)
    assert b.dim == 10


def test_dim_too_small():
    with pytest.raises(DataError):
        build_cyclic_basis(3)


def test_periodic_rows():
    b = build_cyclic_basis(10)
    rows = eval_basis(b, [0.0, 1.0 - 1e-12])
    assert np.max(np.abs(rows[0] - rows[1])) < 1e-9
    for d in (1, 2):
        r = eval_basis(b, [0.0, 1.0 - 1e-14], deriv=d)
        assert np.max(np.abs(r[0] - r[1])) < 1e-6


def test_positions_one_apart_mod_wrap():
    b = build_cyclic_basis(8)
    u = np.array([0.137, 0.5, 0.93])
    assert np.allclose(eval_basis(b, u), eval_basis(b, (u + 1.0) % 1.0), atol=1e-12)


def test_out_of_range_rejected():
    b = build_cyclic_basis(6)
    with pytest.raises(DataError):
        eval_basis(b, [1.0])
    with pytest.raises(DataError):
        eval_basis(b, [-0.1])


def test_empty_positions():
    assert eval_basis(build_cyclic_basis(10), []).shape == (0, 10)


def test_partition_of_unity_and_constant():
    b = build_cyclic_basis(10)
    grid = np.arange(1000) / 1000
    X = eval_basis(b, grid)
    assert np.max(np.abs(X.sum(axis=1) - 1)) < 1e-12
    f = X @ np.full(10, 2.5)
    assert f.max() - f.min() < 1e-9


def test_interpolation_at_knots():
    b = build_cyclic_basis(12)
    assert np.allclose(eval_basis(b, b.knots), np.eye(12), atol=1e-13)


@pytest.mark.parametrize("dim", [4, 7, 10, 20])
def test_matches_periodic_cubicspline(dim):
    b = build_cyclic_basis(dim)
    rng = np.random.default_rng(dim)
    coefs = rng.normal(size=dim)
    grid = np.linspace(0, 1, 777, endpoint=False)
    cs = periodic_oracle(b, coefs)
    for d in (0, 1, 2):
        assert np.max(np.abs(eval_basis(b, grid, deriv=d) @ coefs - cs(grid, d))) < 1e-9


def test_penalty_null_space_and_psd():
    b = build_cyclic_basis(10)
    S = roughness_penalty(b)
    assert np.allclose(S, S.T)
    assert abs(np.ones(10) @ S @ np.ones(10)) < 1e-9
    ev = np.linalg.eigvalsh(S)
    assert ev.min() > -1e-9
    assert np.sum(ev > 1e-8 * ev.max()) == 9


@pytest.mark.parametrize("seed", range(5))
def test_penalty_matches_quadrature(seed):
    b = build_cyclic_basis(10)
    coefs = np.random.default_rng(seed).normal(size=10)
    cs = periodic_oracle(b, coefs)
    pieces = np.append(b.knots, 1.0)
    total = sum(
        integrate.quad(lambda t: cs(t, 2) ** 2, pieces[i], pieces[i + 1], epsabs=1e-14, epsrel=1e-12)[0]
        for i in range(10)
    )
    assert coefs @ roughness_penalty(b) @ coefs == pytest.approx(total, rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=6, max_size=6), st.lists(st.floats(-10, 10), min_size=6, max_size=6),
       st.floats(-3, 3))
def test_linear_in_coefficients(a, c, w):
    b = build_cyclic_basis(6)
    grid = np.linspace(0, 0.99, 50)
    a, c = np.array(a), np.array(c)
    assert np.allclose(b(grid, a + w * c), b(grid, a) + w * b(grid, c), atol=1e-9)
