import cmath

import numpy as np
import pytest
from builders import random_portfolio
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from copula_loss.copulas import clayton, gaussian, independence
from copula_loss.engine import (
    LossDistribution,
    Portfolio,
    TrancheSpec,
    cdo2_pmf,
    default_count_pmf,
    invert_cf,
    joint_nl_pmf,
    joint_nl_pmf_homogeneous,
    loss_cf,
    loss_pmf,
    loss_pmf_grid,
    tranche_pmf,
)
from copula_loss.errors import ConfigError, DomainError
from copula_loss.factor import ConstantIntensity, FactorModel, PiecewiseCurve, chain_hfunc
from copula_loss.lossmodel import BetaBinomialLoss, ConstantLoss, LossGrid
from copula_loss.oracle import brute_force_pmf, recursive_pmf
from copula_loss.quadrature import gauss_legendre_rule

HALF = PiecewiseCurve(((1.0, 0.5),))


def bench_fixture(n=125, rho=0.25, lam=0.05, loss=None, delta=1.0):
    return Portfolio.homogeneous(n, gaussian(rho), ConstantIntensity(lam), loss, delta)


# ---------------------------------------------------------------------------
# characteristic function
# ---------------------------------------------------------------------------

def test_cf_at_zero_is_one():
    assert loss_cf(bench_fixture(20), 5.0, 0.0) == pytest.approx(1.0, abs=1e-14)


def test_cf_single_bernoulli():
    port = Portfolio.homogeneous(1, independence(), HALF)
    u = np.array([0.3, 1.7, np.pi])
    assert loss_cf(port, 1.0, u) == pytest.approx(0.5 + 0.5 * np.exp(1j * u), abs=1e-15)


def test_cf_matches_enumerated_pmf():
    port = bench_fixture(5)
    pmf = brute_force_pmf(port, 5.0).pmf
    u = np.linspace(-3, 3, 13)
    direct = np.array([sum(p * cmath.exp(1j * x * k) for k, p in enumerate(pmf)) for x in u])
    assert loss_cf(port, 5.0, u) == pytest.approx(direct, abs=1e-10)


def test_inversion_methods_agree():
    phi = loss_cf(bench_fixture(40), 5.0, 2 * np.pi * np.arange(41) / 41)
    assert invert_cf(phi, "fft") == pytest.approx(invert_cf(phi, "dft"), abs=1e-15)
    with pytest.raises(ConfigError):
        invert_cf(phi, "nope")


# ---------------------------------------------------------------------------
# loss law
# ---------------------------------------------------------------------------

def test_single_entity_pmf():
    port = Portfolio.homogeneous(1, gaussian(0.4), HALF)
    assert loss_pmf(port, 1.0).pmf == pytest.approx([0.5, 0.5], abs=1e-15)


def test_independent_entities_are_binomial():
    port = Portfolio.homogeneous(10, independence(), PiecewiseCurve(((1.0, 0.1),)))
    assert loss_pmf(port, 1.0).pmf == pytest.approx(stats.binom.pmf(np.arange(11), 10, 0.1), abs=1e-10)


def test_transform_matches_recursion_on_benchmark():
    port = bench_fixture()
    assert np.max(np.abs(loss_pmf(port, 5.0).pmf - recursive_pmf(port, 5.0).pmf)) <= 1e-9


def test_dft_path_matches_fft_path():
    port = bench_fixture(60)
    assert loss_pmf(port, 5.0, method="dft").pmf == pytest.approx(loss_pmf(port, 5.0).pmf, abs=1e-14)


def test_empty_portfolio():
    port = Portfolio(FactorModel((), (), 1), (), 1.0)
    assert list(loss_pmf(port, 5.0).pmf) == [1.0]


def test_time_zero_is_point_mass():
    pmf = loss_pmf(bench_fixture(10), 0.0).pmf
    assert pmf[0] == pytest.approx(1.0, abs=1e-15)


def test_grid_matches_pointwise():
    port = Portfolio.homogeneous(30, clayton(2.0), ConstantIntensity(0.05), BetaBinomialLoss(0.4, 1.1, LossGrid(4)))
    times = [0.5, 2.0, 5.0]
    grid = loss_pmf_grid(port, times)
    for row, t in zip(grid, times):
        assert row == pytest.approx(loss_pmf(port, t).pmf, abs=1e-14)


def test_loss_distribution_summaries():
    dist = LossDistribution(0.5, np.array([0.2, 0.5, 0.3]))
    assert dist.mean() == pytest.approx(0.5 * 1.1)
    assert dist.tail(0.5) == pytest.approx(0.8)
    assert dist.cdf() == pytest.approx([0.2, 0.7, 1.0])


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_transform_matches_recursion_random(seed):
    rng = np.random.default_rng(seed)
    port = random_portfolio(rng, int(rng.integers(1, 51)), 1, max_n=4)
    assert np.max(np.abs(loss_pmf(port, 5.0).pmf - recursive_pmf(port, 5.0).pmf)) <= 1e-9


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_transform_matches_enumeration_random(seed, d):
    rng = np.random.default_rng(seed)
    port = random_portfolio(rng, int(rng.integers(1, 7)), d, max_n=2)
    assert np.max(np.abs(loss_pmf(port, 3.0).pmf - brute_force_pmf(port, 3.0).pmf)) <= 1e-10


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2), st.floats(0.1, 10.0))
def test_pmf_nonnegative_and_normalised(seed, d, t):
    rng = np.random.default_rng(seed)
    pmf = loss_pmf(random_portfolio(rng, int(rng.integers(1, 30)), d), t).pmf
    assert np.all(pmf >= 0.0)
    assert pmf.sum() == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_expected_loss_is_linear(seed):
    rng = np.random.default_rng(seed)
    port = random_portfolio(rng, int(rng.integers(1, 40)), 1)
    port = Portfolio(port.model, tuple(ConstantLoss(law.max_units) for law in port.losses), port.delta)
    t = 4.0
    sizes = np.array([law.max_units for law in port.losses])
    q = gauss_legendre_rule(64, smooth=True)
    integrated = np.array([
        q.weights @ chain_hfunc(chain, m.prob(t), q.nodes) for chain, m in zip(port.model.links, port.model.marginals)
    ])
    assert loss_pmf(port, t, q).mean() == pytest.approx(port.delta * integrated @ sizes, abs=1e-9)
    fine = gauss_legendre_rule(512, smooth=True)
    closed = np.array([float(m.prob(t)) for m in port.model.marginals])
    assert loss_pmf(port, t, fine).mean() == pytest.approx(port.delta * closed @ sizes, abs=1e-9)


def test_tail_nondecreasing_in_correlation_exact_tails():
    # the recursion keeps tiny tail probabilities to full relative precision
    tails = [recursive_pmf(bench_fixture(rho=r), 5.0).tail(0.5 * 125) for r in (0.0, 0.25, 0.5, 0.75)]
    assert all(b >= a for a, b in zip(tails, tails[1:]))
    engine = [loss_pmf(bench_fixture(rho=r), 5.0).tail(0.5 * 125) for r in (0.0, 0.25, 0.5, 0.75)]
    assert engine == pytest.approx(tails, abs=1e-12)


def test_tail_nondecreasing_in_correlation_heavy_tails():
    tails = [loss_pmf(bench_fixture(40, rho=r, lam=0.1), 5.0).tail(20) for r in (0.0, 0.25, 0.5, 0.75)]
    assert tails[0] > 1e-3
    assert all(b >= a for a, b in zip(tails, tails[1:]))


def test_quadrature_dimension_checked():
    with pytest.raises(ConfigError):
        loss_pmf(bench_fixture(5), 1.0, gauss_legendre_rule(4, 2))


def test_negative_time_rejected():
    with pytest.raises(DomainError):
        loss_pmf(bench_fixture(5), -1.0)


# ---------------------------------------------------------------------------
# joint (defaults, loss) law
# ---------------------------------------------------------------------------

def test_unit_losses_put_mass_on_diagonal():
    joint = joint_nl_pmf(bench_fixture(20), 5.0)
    off = joint.pmf - np.diag(np.diag(joint.pmf))
    assert np.max(np.abs(off)) <= 1e-14


def test_joint_marginals():
    port = Portfolio.homogeneous(15, clayton(1.5), ConstantIntensity(0.05), BetaBinomialLoss(0.4, 1.1, LossGrid(3, 2)))
    joint = joint_nl_pmf(port, 5.0)
    assert joint.pmf.sum() == pytest.approx(1.0, abs=1e-10)
    assert joint.count_pmf == pytest.approx(default_count_pmf(port, 5.0), abs=1e-10)
    assert joint.loss_pmf == pytest.approx(loss_pmf(port, 5.0).pmf, abs=1e-10)


def test_homogeneous_shortcut():
    port = Portfolio.homogeneous(25, gaussian(0.3), ConstantIntensity(0.05), BetaBinomialLoss(0.7, 1.2, LossGrid(4)))
    fast = joint_nl_pmf_homogeneous(port, 5.0).pmf
    assert joint_nl_pmf(port, 5.0).pmf == pytest.approx(fast, abs=1e-12)


def test_homogeneous_shortcut_rejects_mixed_entities():
    rng = np.random.default_rng(1)
    with pytest.raises(ConfigError):
        joint_nl_pmf_homogeneous(random_portfolio(rng, 4, 1), 1.0)


# ---------------------------------------------------------------------------
# tranches
# ---------------------------------------------------------------------------

def test_full_tranche_is_loss_law():
    port = bench_fixture(30, delta=0.5)
    dist = loss_pmf(port, 5.0)
    tr = tranche_pmf(dist, TrancheSpec(0.0, 30 * 0.5))
    assert tr.probs == pytest.approx(dist.pmf, abs=0)
    assert tr.values == pytest.approx(dist.amounts, abs=1e-15)


def test_degenerate_loss_gives_zero_tranche_loss():
    tr = tranche_pmf(LossDistribution(1.0, np.array([1.0, 0.0, 0.0])), TrancheSpec(0.5, 1.5))
    assert tr.mean() == 0.0
    assert tr.probs[0] == 1.0


def test_tranche_mean_matches_payoff_sum():
    port = Portfolio.homogeneous(1000, gaussian(0.25), ConstantIntensity(0.01))
    dist = loss_pmf(port, 5.0)
    a, b = 100.0, 200.0
    payoff = np.minimum(np.maximum(dist.amounts - a, 0.0), b - a)
    assert tranche_pmf(dist, TrancheSpec(a, b)).mean() == pytest.approx(payoff @ dist.pmf, abs=1e-10)


@given(st.floats(0.0, 20.0), st.floats(0.1, 20.0))
def test_tranche_law_normalised_for_off_grid_points(a, width):
    dist = loss_pmf(bench_fixture(20, delta=0.7), 5.0)
    tr = tranche_pmf(dist, TrancheSpec(a, a + width))
    assert tr.probs.sum() == pytest.approx(1.0, abs=1e-12)
    payoff = np.minimum(np.maximum(dist.amounts - a, 0.0), width)
    assert tr.mean() == pytest.approx(payoff @ dist.pmf, abs=1e-12)
    assert np.all(np.diff(tr.values) > 0)


@given(st.lists(st.integers(1, 29), min_size=1, max_size=5, unique=True))
def test_tranche_partition_sum_rule(cuts):
    port = bench_fixture(30)
    dist = loss_pmf(port, 5.0)
    points = [0.0, *sorted(float(c) for c in cuts), 30.0]
    total = sum(tranche_pmf(dist, TrancheSpec(a, b)).mean() for a, b in zip(points, points[1:]))
    assert total == pytest.approx(dist.mean(), abs=1e-9)


def test_tranche_validation():
    with pytest.raises(DomainError):
        TrancheSpec(0.2, 0.2)
    with pytest.raises(DomainError):
        TrancheSpec(-0.1, 0.2)


# ---------------------------------------------------------------------------
# CDO-squared
# ---------------------------------------------------------------------------

def test_cdo2_single_full_tranche_is_loss_law():
    port = bench_fixture(40)
    out = cdo2_pmf([port], [TrancheSpec(0.0, 40.0)], 5.0)
    assert out.pmf == pytest.approx(loss_pmf(port, 5.0).pmf, abs=1e-12)


def test_cdo2_independent_factors_convolve():
    ports = [bench_fixture(50), bench_fixture(40, rho=0.5), bench_fixture(30, lam=0.1)]
    trs = [TrancheSpec(3.0, 10.0), TrancheSpec(0.0, 5.0), TrancheSpec(2.0, 12.0)]
    out = cdo2_pmf(ports, trs, 5.0, shared_factor=False)
    ref = np.ones(1)
    for port, tr in zip(ports, trs):
        ref = np.convolve(ref, tranche_pmf(loss_pmf(port, 5.0), tr).probs)
    assert out.pmf == pytest.approx(ref, abs=1e-9)


def test_cdo2_shared_factor_single_portfolio_matches_tranche_law():
    port = bench_fixture(50)
    tr = TrancheSpec(5.0, 15.0)
    out = cdo2_pmf([port], [tr], 5.0)
    assert out.pmf == pytest.approx(tranche_pmf(loss_pmf(port, 5.0), tr).probs, abs=1e-12)


def test_cdo2_shared_factor_two_portfolios_by_direct_mixing():
    # conditional tranche laws multiplied node by node, computed by the recursion
    q = gauss_legendre_rule(64, smooth=True)
    ports = [bench_fixture(20), bench_fixture(15, rho=0.4)]
    trs = [TrancheSpec(2.0, 6.0), TrancheSpec(1.0, 4.0)]
    out = cdo2_pmf(ports, trs, 5.0, q)
    ref = np.zeros(4 + 3 + 1)
    for v, w in zip(q.nodes[:, 0], q.weights):
        node = np.ones(1)
        for port, tr in zip(ports, trs):
            one = FactorModel.homogeneous(port.size, port.model.links[0], port.model.marginals[0])
            p = float(one.links[0][0].hfunc(one.marginals[0].prob(5.0), v))
            cond = stats.binom.pmf(np.arange(port.size + 1), port.size, p)
            a, b = int(tr.attach), int(tr.detach)
            rows = np.zeros(b - a + 1)
            rows[0] = cond[: a + 1].sum()
            rows[1:-1] = cond[a + 1: b]
            rows[-1] = cond[b:].sum()
            node = np.convolve(node, rows)
        ref += w * node
    assert out.pmf == pytest.approx(ref, abs=1e-12)


def test_cdo2_requires_common_loss_unit():
    with pytest.raises(ConfigError):
        cdo2_pmf([bench_fixture(5), bench_fixture(5, delta=2.0)], [TrancheSpec(0, 2), TrancheSpec(0, 2)], 1.0)
