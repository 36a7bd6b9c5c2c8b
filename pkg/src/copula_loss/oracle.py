"""Independent reference computations for the loss engine.

None of these share code with the characteristic-function path beyond the
conditional default probabilities and loss laws themselves, so agreement is
a meaningful check.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .copulas import gaussian
from .engine import LossDistribution, Portfolio, _finalize_pmf, loss_pmf
from .errors import ConfigError, ResourceError
from .factor import ConstantIntensity, _resolve_rule, chain_hfunc, chain_hinv
from .quadrature import QuadratureRule, default_rule

MAX_BRUTE_ENTITIES = 12
MAX_BRUTE_OUTCOMES = 10**6
MAX_BRUTE_STATES = 4 * 10**6


def _conditional_inputs(portfolio: Portfolio, t: float, nodes: np.ndarray):
    """Per entity: conditional default probability ``(K,)`` and loss PMF ``(K, m + 1)``."""
    out = []
    for chain, marginal, law in zip(portfolio.model.links, portfolio.model.marginals, portfolio.losses):
        p = chain_hfunc(chain, marginal.prob(t), nodes)
        lp = law.pmf_at(nodes)
        if lp.shape[0] != nodes.shape[0]:
            lp = np.broadcast_to(lp, (nodes.shape[0], lp.shape[1]))
        out.append((p, lp))
    return out


def recursive_pmf(portfolio: Portfolio, t: float, q: QuadratureRule | None = None) -> LossDistribution:
    """Loss PMF by adding entities one at a time to the conditional law at each node."""
    q = _resolve_rule(portfolio.model, q)
    total = portfolio.max_units
    cond = np.zeros((q.size, total + 1))
    cond[:, 0] = 1.0
    top = 0
    for p, lp in _conditional_inputs(portfolio, float(t), q.nodes):
        m = lp.shape[1] - 1
        new = (1.0 - p)[:, None] * cond[:, : top + m + 1]
        for loss in range(m + 1):
            w = (p * lp[:, loss])[:, None]
            new[:, loss: loss + top + 1] += w * cond[:, : top + 1]
        top += m
        cond[:, : top + 1] = new
    return LossDistribution(portfolio.delta, _finalize_pmf(q.weights @ cond))


def brute_force_pmf(portfolio: Portfolio, t: float, q: QuadratureRule | None = None) -> LossDistribution:
    """Loss PMF by enumerating every joint default and loss outcome at each node."""
    q = _resolve_rule(portfolio.model, q)
    n = portfolio.size
    if n > MAX_BRUTE_ENTITIES:
        raise ResourceError(f"brute force supports at most {MAX_BRUTE_ENTITIES} entities, got {n}")
    sizes = [law.max_units + 1 for law in portfolio.losses]
    if math.prod(sizes) > MAX_BRUTE_OUTCOMES:
        raise ResourceError("too many joint loss outcomes for brute-force enumeration")
    # each entity: survive, or default with one of its loss outcomes
    states = math.prod(s + 1 for s in sizes)
    if states > MAX_BRUTE_STATES:
        raise ResourceError(f"{states} joint states exceed the brute-force limit")

    inputs = _conditional_inputs(portfolio, float(t), q.nodes)
    out = np.zeros(portfolio.max_units + 1)
    chunk = max(1, MAX_BRUTE_STATES // states)
    for k0 in range(0, q.size, chunk):
        sl = slice(k0, k0 + chunk)
        probs = np.ones((q.weights[sl].size, 1))
        losses = np.zeros(1, dtype=np.int64)
        for p, lp in inputs:
            outcome_p = np.concatenate([(1.0 - p[sl])[:, None], p[sl][:, None] * lp[sl]], axis=1)
            outcome_l = np.concatenate([[0], np.arange(lp.shape[1])])
            probs = (probs[:, :, None] * outcome_p[:, None, :]).reshape(probs.shape[0], -1)
            losses = (losses[:, None] + outcome_l[None, :]).ravel()
        mixed = q.weights[sl] @ probs
        out += np.bincount(losses, weights=mixed, minlength=out.size)
    return LossDistribution(portfolio.delta, _finalize_pmf(out))


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    """Path count, 64-bit seed and horizon.

    Paths are drawn in batches of at most ``batch_size``; batch ``i`` uses
    its own generator spawned from ``seed``, so a fixed configuration is
    reproducible bit for bit.
    """

    paths: int
    seed: int = 0
    horizon: float = 5.0
    batch_size: int = 1 << 20

    def __post_init__(self):
        if int(self.paths) != self.paths or self.paths < 1:
            raise ConfigError(f"path count must be a positive integer, got {self.paths}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.horizon < 0:
            raise ConfigError("horizon must be nonnegative")


@dataclass(frozen=True, eq=False)
class SimBatch:
    defaults: np.ndarray       # (B, N) bool, default by the horizon
    default_times: np.ndarray  # (B, N) float, inf for no default ever
    losses: np.ndarray         # (B, N) int loss units, zero without default
    n_defaults: np.ndarray     # (B,)
    loss_units: np.ndarray     # (B,)


def _open_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    x = rng.random(shape)
    # random() can return exactly 0, which h-functions reject as a factor value
    return np.where(x == 0.0, 2.0**-54, x)


def simulate(portfolio: Portfolio, cfg: SimConfig) -> Iterator[SimBatch]:
    """Sample default indicators, default times and losses path by path.

    Within a batch the draws are consumed in a fixed order: the factors,
    then one uniform per entity in index order for the latent variables,
    then one per entity for the loss.
    """
    n, d = portfolio.size, portfolio.d
    per_batch = max(1, min(cfg.batch_size, 4_000_000 // max(n, 1)))
    root = np.random.SeedSequence(int(cfg.seed))
    n_batches = -(-cfg.paths // per_batch)
    children = root.spawn(n_batches)
    groups: dict = {}
    for j, key in enumerate(zip(portfolio.model.links, portfolio.model.marginals, portfolio.losses)):
        groups.setdefault(key, []).append(j)

    for b in range(n_batches):
        size = min(per_batch, cfg.paths - b * per_batch)
        rng = np.random.Generator(np.random.PCG64(children[b]))
        v = _open_uniform(rng, (size, d))
        w = rng.random((size, n))
        z = rng.random((size, n))
        latent = np.empty((size, n))
        losses = np.zeros((size, n), dtype=np.int64)
        defaults = np.zeros((size, n), dtype=bool)
        times = np.empty((size, n))
        for (chain, marginal, law), idx in groups.items():
            cols = np.asarray(idx)
            pts = np.repeat(v, cols.size, axis=0)
            u = chain_hinv(chain, w[:, cols].ravel(), pts).reshape(size, cols.size)
            latent[:, cols] = u
            defaults[:, cols] = u <= marginal.prob(cfg.horizon)
            times[:, cols] = marginal.default_time(u)
            cdf = np.cumsum(law.pmf_at(v if law.factor_dependent else v[:1]), axis=1)
            cdf = np.broadcast_to(cdf, (size, cdf.shape[1]))
            drawn = np.empty((size, cols.size), dtype=np.int64)
            for c in range(cols.size):
                drawn[:, c] = (cdf[:, :-1] < z[:, cols[c]][:, None]).sum(axis=1)
            losses[:, cols] = np.where(defaults[:, cols], drawn, 0)
        yield SimBatch(
            defaults=defaults,
            default_times=times,
            losses=losses,
            n_defaults=defaults.sum(axis=1),
            loss_units=losses.sum(axis=1),
        )


def simulate_loss_counts(portfolio: Portfolio, cfg: SimConfig) -> np.ndarray:
    """Histogram of simulated portfolio loss units at the horizon."""
    counts = np.zeros(portfolio.max_units + 1, dtype=np.int64)
    for batch in simulate(portfolio, cfg):
        counts += np.bincount(batch.loss_units, minlength=counts.size)
    return counts


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

def benchmark_portfolio(size: int, d: int = 1, rho: float = 0.25, intensity: float = 0.05) -> Portfolio:
    """Homogeneous Gaussian portfolio with unit losses and ``size`` entities."""
    return Portfolio.homogeneous(size, (gaussian(rho),) * d, ConstantIntensity(intensity), d=d)


def bench_dft_vs_recursion(
    sizes: Sequence[int], d: int = 1, horizon: float = 5.0, repeats: int = 1,
    q: QuadratureRule | None = None,
) -> list[tuple[str, int, int, float]]:
    """Best-of-``repeats`` wall times of both methods; rows ``(method, M, d, seconds)``."""
    sizes = list(sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError("benchmark sizes must be strictly ascending")
    q = q or default_rule(d)
    rows = []
    for m in sizes:
        port = benchmark_portfolio(m, d)
        for name, fn in (("dft", loss_pmf), ("recursion", recursive_pmf)):
            best = math.inf
            for _ in range(max(1, repeats)):
                start = time.perf_counter()
                fn(port, horizon, q)
                best = min(best, time.perf_counter() - start)
            rows.append((name, m, d, best))
    return rows
