import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate, stats

from copula_loss.copulas import (
    Copula,
    Family,
    MixtureCopula,
    bivariate_normal_cdf,
    clayton,
    copula_cdf,
    copula_density,
    copula_hfunc,
    copula_hinv,
    frank,
    gaussian,
    gumbel,
    independence,
    joe,
    link_from_spec,
    mixture,
    stochastic_correlation_copula,
    student_t,
)
from copula_loss.errors import DomainError
from copula_loss.quadrature import gauss_legendre_rule

unit = st.floats(0.01, 0.99)


@st.composite
def copulas(draw, moderate=False):
    """Any family with parameters spanning most of its admissible range."""
    fam = draw(st.sampled_from(list(Family)))
    lim = 0.8 if moderate else 0.95
    if fam is Family.INDEPENDENCE:
        return independence()
    if fam is Family.GAUSSIAN:
        return gaussian(draw(st.floats(-lim, lim)))
    if fam is Family.STUDENT_T:
        return student_t(draw(st.floats(-lim, lim)), draw(st.floats(1.0, 30.0)))
    if fam is Family.CLAYTON:
        return clayton(draw(st.floats(0.05, 4.0 if moderate else 15.0)))
    if fam is Family.GUMBEL:
        return gumbel(draw(st.floats(1.0, 3.0 if moderate else 10.0)))
    if fam is Family.FRANK:
        theta = draw(st.floats(-10.0 if moderate else -25.0, 10.0 if moderate else 25.0))
        assume(abs(theta) > 1e-3)
        return frank(theta)
    return joe(draw(st.floats(1.0, 3.0 if moderate else 10.0)))


ALL_FIXED = [
    independence(), gaussian(0.5), gaussian(-0.7), student_t(0.5, 5), student_t(-0.3, 2),
    clayton(2.0), clayton(0.5), gumbel(1.5), gumbel(3.0), frank(3.0), frank(-8.0), joe(1.5), joe(3.0),
]


# ---------------------------------------------------------------------------
# reference values
# ---------------------------------------------------------------------------

def test_gaussian_zero_correlation_is_product():
    assert copula_cdf(gaussian(0.0), 0.3, 0.7) == pytest.approx(0.21, abs=1e-15)


@pytest.mark.parametrize("c", ALL_FIXED, ids=repr)
def test_margins(c):
    u = np.array([0.0, 0.2, 0.55, 1.0])
    assert np.allclose(copula_cdf(c, u, 1.0), u, atol=0, rtol=0)
    assert np.all(copula_cdf(c, 0.0, u) == 0.0)


def test_clayton_cdf_closed_form_and_density_integral():
    c = clayton(5.0)
    closed = (2 * 0.5**-5 - 1) ** (-1 / 5)
    assert copula_cdf(c, 0.5, 0.5) == pytest.approx(closed, abs=1e-15)
    integral, err = integrate.dblquad(
        lambda y, x: float(copula_density(c, x, y)), 1e-12, 0.5, 1e-12, 0.5, epsabs=1e-11, epsrel=1e-11
    )
    assert integral == pytest.approx(closed, abs=1e-8)


def test_frank_h_matches_finite_difference():
    c = frank(3.0)
    step = 1e-6
    fd = (copula_cdf(c, 0.4, 0.6 + step) - copula_cdf(c, 0.4, 0.6 - step)) / (2 * step)
    assert copula_hfunc(c, 0.4, 0.6) == pytest.approx(fd, abs=1e-6)


@pytest.mark.parametrize("c", ALL_FIXED, ids=repr)
def test_h_matches_finite_difference_every_family(c):
    step = 1e-5
    for u, v in [(0.3, 0.4), (0.7, 0.2), (0.5, 0.8)]:
        fd = (copula_cdf(c, u, v + step) - copula_cdf(c, u, v - step)) / (2 * step)
        assert copula_hfunc(c, u, v) == pytest.approx(fd, abs=1e-7)


def _bisect(f, target, lo=0.0, hi=1.0, tol=1e-14):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_gumbel_hinv_matches_bisection():
    c = gumbel(2.0)
    expected = _bisect(lambda u: float(copula_hfunc(c, u, 0.5)), 0.3)
    assert copula_hinv(c, 0.3, 0.5) == pytest.approx(expected, abs=1e-10)


def test_gaussian_density_matches_mixed_difference():
    c = gaussian(0.5)
    h = 1e-3
    fd = (
        copula_cdf(c, 0.5 + h, 0.5 + h) - copula_cdf(c, 0.5 + h, 0.5 - h)
        - copula_cdf(c, 0.5 - h, 0.5 + h) + copula_cdf(c, 0.5 - h, 0.5 - h)
    ) / (4 * h * h)
    assert copula_density(c, 0.5, 0.5) == pytest.approx(fd, abs=1e-5)


def test_gaussian_density_closed_form():
    rho = 0.5
    x = stats.norm.ppf(0.3)
    y = stats.norm.ppf(0.8)
    expected = math.exp(-(rho**2 * (x * x + y * y) - 2 * rho * x * y) / (2 * (1 - rho**2))) / math.sqrt(1 - rho**2)
    assert copula_density(gaussian(rho), 0.3, 0.8) == pytest.approx(expected, rel=1e-13)


def test_bivariate_normal_against_scipy():
    rng = np.random.default_rng(7)
    for _ in range(50):
        h, k = rng.normal(size=2) * 2
        rho = rng.uniform(-0.99, 0.99)
        ref = stats.multivariate_normal(cov=[[1, rho], [rho, 1]]).cdf([h, k])
        assert bivariate_normal_cdf(h, k, rho) == pytest.approx(ref, abs=1e-7)


def test_bivariate_normal_orthant_identity():
    for rho in (-0.9, -0.3, 0.0, 0.4, 0.95):
        assert bivariate_normal_cdf(0.0, 0.0, rho) == pytest.approx(0.25 + math.asin(rho) / (2 * math.pi), abs=1e-15)


def _strong_rule(n=128, k=4):
    # s -> s^k / (s^k + (1 - s)^k) flattens the integrand at both ends
    x, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (x + 1.0)
    den = s**k + (1 - s) ** k
    t = s**k / den
    wt = 0.5 * w * k * s ** (k - 1) * (1 - s) ** (k - 1) / den**2
    uu, vv = np.meshgrid(t, t)
    return uu.ravel(), vv.ravel(), np.outer(wt, wt).ravel()


@pytest.mark.parametrize("c", ALL_FIXED, ids=repr)
def test_density_integrates_to_one(c):
    uu, vv, w = _strong_rule()
    assert w @ copula_density(c, uu, vv) == pytest.approx(1.0, abs=1e-8)


def test_independence_values():
    c = independence()
    assert copula_density(c, 0.3, 0.9) == 1.0
    assert copula_hfunc(c, 0.3, 0.9) == pytest.approx(0.3)
    assert copula_hinv(c, 0.3, 0.9) == pytest.approx(0.3)


def test_gaussian_zero_is_independence():
    assert copula_hfunc(gaussian(0.0), 0.37, 0.8) == pytest.approx(0.37, abs=1e-15)
    assert copula_hinv(gaussian(0.0), 0.37, 0.8) == pytest.approx(0.37, abs=1e-15)


def test_gaussian_h_uses_square_root_denominator():
    rho, p, v = 0.25, 0.2212, 0.5
    expected = stats.norm.cdf((stats.norm.ppf(p) - rho * stats.norm.ppf(v)) / math.sqrt(1 - rho**2))
    assert copula_hfunc(gaussian(rho), p, v) == pytest.approx(expected, abs=1e-15)


# ---------------------------------------------------------------------------
# stochastic correlation mixture
# ---------------------------------------------------------------------------

def test_stochastic_correlation_degenerate_weight():
    c = stochastic_correlation_copula(0.4, 0.9, 1.0)
    assert len(c.components) == 1
    assert c.components[0][1] == gaussian(0.4)


def test_stochastic_correlation_equal_components():
    c = stochastic_correlation_copula(0.3, 0.3, 0.5)
    u = np.linspace(0.05, 0.95, 7)
    assert np.allclose(c.cdf(u, u[::-1]), gaussian(0.3).cdf(u, u[::-1]), atol=1e-15)


def test_stochastic_correlation_componentwise():
    c = stochastic_correlation_copula(0.9, 0.1, 0.3)
    expected = 0.3 * copula_cdf(gaussian(0.9), 0.4, 0.6) + 0.7 * copula_cdf(gaussian(0.1), 0.4, 0.6)
    assert copula_cdf(c, 0.4, 0.6) == pytest.approx(expected, abs=1e-15)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "family,params",
    [
        (Family.CLAYTON, (0.0,)), (Family.CLAYTON, (-1.0,)), (Family.GUMBEL, (0.99,)), (Family.JOE, (0.5,)),
        (Family.FRANK, (0.0,)), (Family.GAUSSIAN, (1.0,)), (Family.STUDENT_T, (0.5, 0.0)),
        (Family.GAUSSIAN, ()),
    ],
)
def test_bad_parameters(family, params):
    with pytest.raises(DomainError):
        Copula(family, params)


def test_boundary_conditioning_rejected():
    with pytest.raises(DomainError):
        copula_hfunc(gaussian(0.3), 0.5, 0.0)
    with pytest.raises(DomainError):
        copula_hfunc(gaussian(0.3), 0.5, 1.0)
    with pytest.raises(DomainError):
        copula_cdf(gaussian(0.3), 1.2, 0.5)


def test_mixture_weights_validated():
    with pytest.raises(DomainError):
        mixture([0.5, 0.6], [gaussian(0.1), gaussian(0.2)])
    with pytest.raises(DomainError):
        mixture([1.0, 0.0], [gaussian(0.1), gaussian(0.2)])


def test_link_from_spec_forms():
    assert link_from_spec({"family": "clayton", "params": [2.0]}) == clayton(2.0)
    mix = link_from_spec([
        {"family": "gaussian", "params": [0.1], "weight": 0.25},
        {"family": "gumbel", "params": [2.0], "weight": 0.75},
    ])
    assert isinstance(mix, MixtureCopula)
    assert mix.weights == pytest.approx((0.25, 0.75))
    assert link_from_spec(mix.to_dict()) == mix
    with pytest.raises(DomainError):
        link_from_spec({"family": "nope", "params": []})


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

@given(copulas(), unit, unit, unit, unit)
def test_two_increasing(c, a, b, x, y):
    u1, u2 = sorted((a, b))
    v1, v2 = sorted((x, y))
    vol = c.cdf(u2, v2) - c.cdf(u1, v2) - c.cdf(u2, v1) + c.cdf(u1, v1)
    assert vol >= -1e-12


@given(copulas(), unit, unit)
def test_frechet_bounds(c, u, v):
    val = c.cdf(u, v)
    assert max(u + v - 1.0, 0.0) - 1e-12 <= val <= min(u, v) + 1e-12


@given(copulas(moderate=True), st.floats(0.05, 0.95))
def test_h_integrates_to_u(c, u):
    q = gauss_legendre_rule(64, 1, smooth=True)
    assert q.weights @ c.hfunc(u, q.nodes[:, 0]) == pytest.approx(u, abs=1e-8)


@given(copulas(), st.floats(0.02, 0.98), st.floats(0.02, 0.98))
def test_hinv_inverts_h(c, u, v):
    p = c.hfunc(u, v)
    assume(1e-12 < p < 1 - 1e-12)
    back = c.hinv(p, v)
    # compare in probability space where the slope may be tiny, in u otherwise
    assert abs(back - u) <= 1e-10 or abs(c.hfunc(back, v) - p) <= 1e-12


@given(copulas(), st.floats(0.02, 0.98))
def test_h_endpoints(c, v):
    assert c.hfunc(0.0, v) == 0.0
    assert c.hfunc(1.0, v) == 1.0


@given(copulas(), unit, st.floats(0.02, 0.98), st.floats(0.02, 0.98))
def test_h_monotone_in_u(c, a, b, v):
    u1, u2 = sorted((a, b))
    assert c.hfunc(u1, v) <= c.hfunc(u2, v) + 1e-14


@given(st.floats(-0.95, 0.95), unit, unit)
def test_student_t_large_dof_is_gaussian(rho, u, v):
    assert student_t(rho, 1e6).cdf(u, v) == pytest.approx(gaussian(rho).cdf(u, v), abs=1e-4)


def test_student_t_large_dof_random_points():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0.01, 0.99, size=(100, 2))
    rhos = rng.uniform(-0.9, 0.9, size=100)
    for (u, v), rho in zip(pts, rhos):
        assert abs(student_t(rho, 1e6).cdf(u, v) - gaussian(rho).cdf(u, v)) <= 1e-4


@given(
    st.lists(copulas(), min_size=2, max_size=3),
    st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3),
    st.floats(0.02, 0.98),
    st.floats(0.02, 0.98),
)
def test_mixture_is_convex_combination(comps, raw, u, v):
    w = np.array(raw[: len(comps)])
    w = w / w.sum()
    assume(abs(w.sum() - 1.0) < 1e-15)
    mix = mixture(list(w), comps)
    mw = np.array(mix.weights)
    assert mix.cdf(u, v) == pytest.approx(sum(a * c.cdf(u, v) for a, c in zip(mw, comps)), abs=1e-15)
    assert mix.hfunc(u, v) == pytest.approx(sum(a * c.hfunc(u, v) for a, c in zip(mw, comps)), abs=1e-15)
    assert mix.density(u, v) == pytest.approx(
        sum(a * c.density(u, v) for a, c in zip(mw, comps)), rel=1e-14, abs=1e-300
    )


@given(copulas(), st.floats(0.02, 0.98), st.floats(0.02, 0.98))
def test_density_nonnegative(c, u, v):
    assert c.density(u, v) >= 0.0


def test_vectorised_matches_scalar():
    c = joe(2.5)
    u = np.array([0.1, 0.4, 0.8])
    v = np.array([0.3, 0.6, 0.9])
    vec = c.hfunc(u, v)
    assert vec == pytest.approx([c.hfunc(a, b) for a, b in zip(u, v)], abs=0)
