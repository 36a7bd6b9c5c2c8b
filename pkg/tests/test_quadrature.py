import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from copula_loss.errors import DomainError, ResourceError
from copula_loss.quadrature import DEFAULT_ORDER, default_rule, gauss_legendre_rule


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("smooth", [False, True])
def test_constant_integrates_exactly(d, smooth):
    q = gauss_legendre_rule(6, d, smooth=smooth)
    assert q.integrate(np.ones(q.size)) == pytest.approx(1.0, abs=1e-15)


def test_degree_31_exact_with_16_nodes():
    q = gauss_legendre_rule(16)
    assert q.integrate(q.nodes[:, 0] ** 31) == pytest.approx(1 / 32, abs=1e-14)


def test_product_moment_in_two_dimensions():
    q = gauss_legendre_rule(8, 2)
    assert q.integrate(q.nodes[:, 0] * q.nodes[:, 1]) == pytest.approx(0.25, abs=1e-14)


@given(st.integers(1, 24), st.data())
def test_polynomial_exactness(n, data):
    q = gauss_legendre_rule(n)
    deg = data.draw(st.integers(0, 2 * n - 1))
    assert q.integrate(q.nodes[:, 0] ** deg) == pytest.approx(1.0 / (deg + 1), abs=5e-15)


@given(st.integers(1, 8), st.integers(0, 15), st.integers(0, 15))
def test_product_polynomials(n, i, j):
    i, j = min(i, 2 * n - 1), min(j, 2 * n - 1)
    q = gauss_legendre_rule(n, 2)
    val = q.integrate(q.nodes[:, 0] ** i * q.nodes[:, 1] ** j)
    assert val == pytest.approx(1.0 / ((i + 1) * (j + 1)), abs=5e-15)


@pytest.mark.parametrize("smooth", [False, True])
def test_nodes_interior_and_weights_positive(smooth):
    q = gauss_legendre_rule(64, 1, smooth=smooth)
    assert np.all((q.nodes > 0) & (q.nodes < 1))
    assert np.all(q.weights > 0)
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-14)


def test_smoothed_rule_handles_log_singularity():
    # integral of -log(v) over (0, 1) is 1
    plain = gauss_legendre_rule(32)
    smooth = gauss_legendre_rule(32, smooth=True)
    err_plain = abs(plain.integrate(-np.log(plain.nodes[:, 0])) - 1.0)
    err_smooth = abs(smooth.integrate(-np.log(smooth.nodes[:, 0])) - 1.0)
    assert err_smooth < 1e-6 < err_plain


def test_default_orders():
    for d, n in DEFAULT_ORDER.items():
        q = default_rule(d)
        assert (q.n, q.d, q.size) == (n, d, n**d)
    assert default_rule(1, 10).n == 10


def test_immutable_arrays():
    q = gauss_legendre_rule(4)
    with pytest.raises(ValueError):
        q.weights[0] = 1.0


def test_invalid_arguments():
    with pytest.raises(DomainError):
        gauss_legendre_rule(0)
    with pytest.raises(DomainError):
        gauss_legendre_rule(4, 0)
    with pytest.raises(ResourceError):
        gauss_legendre_rule(1000, 3)
