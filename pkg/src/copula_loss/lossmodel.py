"""Loss-given-default laws on the integer loss grid.

A law describes the distribution of an entity's loss in units of ``delta``,
conditional on the factor value.  Laws are immutable and hashable so that
identical entities can be grouped by the engine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.special import betaln, gammaln

from .errors import ConfigError, DomainError

PMF_TOL = 1e-12


def _points(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return v.reshape(1, 1)
    if v.ndim == 1:
        return v.reshape(1, -1)
    return v


def bb_logpmf(alpha, beta, n: int, k):
    """Log Beta-binomial probabilities, broadcasting over all arguments."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    k = np.asarray(k)
    return (
        gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
        + betaln(alpha + k, beta + n - k) - betaln(alpha, beta)
    )


def bb_pmf(alpha, beta, n: int, k):
    """``P[K = k]`` for ``K ~ BetaBinomial(n, alpha, beta)``."""
    if int(n) != n or n < 0:
        raise DomainError(f"n must be a nonnegative integer, got {n}")
    k_arr = np.asarray(k)
    if np.any(k_arr < 0) or np.any(k_arr > n) or np.any(k_arr != np.round(k_arr)):
        raise DomainError(f"k must be an integer in [0, {n}]")
    if np.any(np.asarray(alpha) <= 0.0) or np.any(np.asarray(beta) <= 0.0):
        raise DomainError("Beta-binomial shape parameters must be positive")
    out = np.exp(bb_logpmf(alpha, beta, int(n), k_arr))
    return float(out) if np.ndim(out) == 0 else out


def bb_mean(alpha, beta, n: int):
    return n * np.asarray(alpha) / (np.asarray(alpha) + np.asarray(beta))


def bb_variance(alpha, beta, n: int):
    a, b = np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float)
    s = a + b
    return n * a * b * (s + n) / (s * s * (s + 1.0))


@dataclass(frozen=True)
class LossGrid:
    """Support ``{b, a + b, ..., n a + b}`` in loss units, so ``m = n a + b``."""

    n: int
    a: int = 1
    b: int = 0

    def __post_init__(self):
        for name in ("n", "a", "b"):
            val = getattr(self, name)
            if int(val) != val:
                raise DomainError(f"loss grid {name} must be an integer, got {val}")
            object.__setattr__(self, name, int(val))
        if self.n < 0 or self.b < 0:
            raise DomainError("loss grid requires n >= 0 and b >= 0")
        if self.n >= 1 and self.a < 1:
            raise DomainError("loss grid step a must be >= 1 when n >= 1")

    @property
    def max_units(self) -> int:
        return self.n * self.a + self.b

    def support(self) -> np.ndarray:
        return self.b + self.a * np.arange(self.n + 1)


@dataclass(frozen=True)
class LinearLink:
    """``intercept + slope * x`` with ``x = 1 - v_1`` if ``decreasing`` else ``v_1``."""

    intercept: float
    slope: float
    decreasing: bool = False

    def __call__(self, v):
        x = _points(v)[:, 0]
        return self.intercept + self.slope * ((1.0 - x) if self.decreasing else x)


def _eval_param(p, pts: np.ndarray) -> np.ndarray:
    if callable(p):
        out = np.asarray(p(pts), dtype=float)
        return np.broadcast_to(out, (pts.shape[0],))
    return np.full(pts.shape[0], float(p))


class _LossLawBase:
    max_units: int
    factor_dependent: bool
    needs_single_factor: bool = False

    def pmf_at(self, pts: np.ndarray) -> np.ndarray:
        """Conditional PMFs at factor points ``(K, d)``; shape ``(K, max_units + 1)``."""
        raise NotImplementedError

    def unconditional_pmf(self) -> np.ndarray:
        if self.factor_dependent:
            raise ConfigError("this law depends on the factor; integrate it explicitly")
        return self.pmf_at(np.full((1, 1), 0.5))[0]

    def mean_at(self, pts: np.ndarray) -> np.ndarray:
        pmf = self.pmf_at(pts)
        return pmf @ np.arange(pmf.shape[1])


@dataclass(frozen=True)
class ConstantLoss(_LossLawBase):
    """A deterministic loss of ``k`` units."""

    k: int = 1

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise DomainError(f"constant loss must be a nonnegative integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))

    factor_dependent = False

    @property
    def max_units(self) -> int:
        return self.k

    def pmf_at(self, pts):
        out = np.zeros((pts.shape[0], self.k + 1))
        out[:, self.k] = 1.0
        return out


@dataclass(frozen=True)
class BetaBinomialLoss(_LossLawBase):
    """Beta-binomial number of grid steps, shapes possibly factor dependent.

    ``alpha`` and ``beta`` are floats or hashable callables mapping factor
    points ``(K, d)`` to arrays of shape ``(K,)``.
    """

    alpha: Union[float, Callable]
    beta: Union[float, Callable]
    grid: LossGrid

    def __post_init__(self):
        for name in ("alpha", "beta"):
            val = getattr(self, name)
            if not callable(val):
                val = float(val)
                if not (math.isfinite(val) and val > 0.0):
                    raise DomainError(f"Beta-binomial {name} must be positive, got {val}")
                object.__setattr__(self, name, val)
        if not isinstance(self.grid, LossGrid):
            raise ConfigError("grid must be a LossGrid")

    @property
    def max_units(self) -> int:
        return self.grid.max_units

    @property
    def factor_dependent(self) -> bool:
        return callable(self.alpha) or callable(self.beta)

    @property
    def needs_single_factor(self) -> bool:
        return isinstance(self.alpha, LinearLink) or isinstance(self.beta, LinearLink)

    def shapes(self, pts) -> tuple[np.ndarray, np.ndarray]:
        pts = _points(pts)
        a = _eval_param(self.alpha, pts)
        b = _eval_param(self.beta, pts)
        if np.any(~(a > 0.0)) or np.any(~(b > 0.0)):
            raise ConfigError("Beta-binomial shapes must be positive at every factor value")
        return a, b

    def pmf_at(self, pts):
        a, b = self.shapes(pts)
        g = self.grid
        k = np.arange(g.n + 1)
        probs = np.exp(bb_logpmf(a[:, None], b[:, None], g.n, k[None, :]))
        out = np.zeros((a.size, g.max_units + 1))
        out[:, g.support()] = probs
        return out


@dataclass(frozen=True)
class BernoulliLoss(_LossLawBase):
    """Loss of ``size`` units with probability ``prob`` (float or callable of factor points)."""

    prob: Union[float, Callable]
    size: int = 1

    def __post_init__(self):
        if not callable(self.prob):
            p = float(self.prob)
            if not 0.0 <= p <= 1.0:
                raise DomainError(f"Bernoulli probability must lie in [0, 1], got {p}")
            object.__setattr__(self, "prob", p)
        if int(self.size) != self.size or self.size < 1:
            raise DomainError(f"Bernoulli loss size must be a positive integer, got {self.size}")

    @property
    def max_units(self) -> int:
        return int(self.size)

    @property
    def factor_dependent(self) -> bool:
        return callable(self.prob)

    @property
    def needs_single_factor(self) -> bool:
        return isinstance(self.prob, LinearLink)

    def pmf_at(self, pts):
        p = _eval_param(self.prob, pts)
        if np.any((p < 0.0) | (p > 1.0)):
            raise ConfigError("Bernoulli loss probability must lie in [0, 1] at every factor value")
        out = np.zeros((p.size, self.size + 1))
        out[:, 0] = 1.0 - p
        out[:, self.size] = p
        return out


@dataclass(frozen=True)
class TabulatedLoss(_LossLawBase):
    """Explicit PMF over ``0..m`` units, or a callable returning ``(K, m+1)`` PMFs."""

    table: Union[tuple, Callable]
    units: int | None = None

    def __post_init__(self):
        if callable(self.table):
            if self.units is None:
                raise ConfigError("a callable loss table needs its maximum loss 'units'")
            return
        tab = tuple(float(x) for x in self.table)
        arr = np.array(tab)
        if arr.size == 0 or np.any(arr < 0.0) or abs(arr.sum() - 1.0) > PMF_TOL:
            raise DomainError("loss table must be nonnegative and sum to 1")
        object.__setattr__(self, "table", tab)
        object.__setattr__(self, "units", arr.size - 1)

    @property
    def max_units(self) -> int:
        return int(self.units)

    @property
    def factor_dependent(self) -> bool:
        return callable(self.table)

    def pmf_at(self, pts):
        if not callable(self.table):
            return np.tile(np.array(self.table), (pts.shape[0], 1))
        out = np.asarray(self.table(pts), dtype=float)
        if out.shape != (pts.shape[0], self.max_units + 1):
            raise ConfigError(f"loss table callable returned shape {out.shape}")
        if np.any(out < -PMF_TOL) or np.any(np.abs(out.sum(axis=1) - 1.0) > PMF_TOL):
            raise ConfigError("loss table callable returned an invalid PMF")
        return out


LossLaw = Union[ConstantLoss, BetaBinomialLoss, BernoulliLoss, TabulatedLoss]


def linear_bb(m1: float, m2: float, m3: float, m4: float, grid: LossGrid) -> BetaBinomialLoss:
    """Beta-binomial law with ``alpha(v) = m1 + m2 (1 - v)`` and ``beta(v) = m3 + m4 v``.

    High factor values mean few defaults in the models used here, so the
    expected loss given default falls as ``v`` rises.
    """
    for name, val in (("m1", m1), ("m3", m3)):
        if not val > 0.0:
            raise DomainError(f"{name} must be positive, got {val}")
    for name, val in (("m2", m2), ("m4", m4)):
        if not val >= 0.0:
            raise DomainError(f"{name} must be nonnegative, got {val}")
    if m2 == 0.0 and m4 == 0.0:
        return BetaBinomialLoss(float(m1), float(m3), grid)
    return BetaBinomialLoss(
        LinearLink(float(m1), float(m2), decreasing=True),
        LinearLink(float(m3), float(m4), decreasing=False),
        grid,
    )


def loss_conditional_pmf(law: LossLaw, v) -> np.ndarray:
    """Conditional PMF over ``0..m`` units at a factor point (1-D) or points (2-D)."""
    v_arr = np.asarray(v, dtype=float)
    if np.any((v_arr < 0.0) | (v_arr > 1.0)):
        raise DomainError("factor values must lie in [0, 1]")
    out = law.pmf_at(_points(v_arr))
    return out if v_arr.ndim == 2 else out[0]


def loss_conditional_cf(law: LossLaw, v, u):
    """Characteristic function of the loss in units, ``sum_k P[k] e^{iuk}``."""
    pmf = loss_conditional_pmf(law, v)
    u = np.asarray(u, dtype=float)
    k = np.arange(pmf.shape[-1])
    phase = np.exp(1j * np.multiply.outer(u, k))
    out = np.tensordot(phase, pmf, axes=([-1], [-1])) if pmf.ndim == 1 else pmf @ phase.T
    return complex(out) if np.ndim(out) == 0 else out
