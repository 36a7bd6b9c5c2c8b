"""Tranche premium and protection legs on a discrete time grid.

Expected tranche losses are computed on the grid ``0, dt, 2 dt, ..., T``.
The premium leg pays the running spread on the expected outstanding
tranche notional, averaged over each payment period by the trapezoid rule
on the grid; the protection leg pays expected tranche-loss increments
discounted at the middle of each grid step.  Interest rates are
deterministic and accrued premium on default is ignored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .engine import Portfolio, TrancheSpec, loss_pmf, loss_pmf_grid, tranche_pmf
from .errors import ConfigError, DomainError
from .quadrature import QuadratureRule

GRID_TOL = 1e-9


@dataclass(frozen=True)
class ZeroRate:
    def discount(self, t):
        return np.ones_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class FlatRate:
    rate: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate >= 0.0):
            raise DomainError(f"flat rate must be nonnegative, got {self.rate}")

    def discount(self, t):
        return np.exp(-self.rate * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class DiscountTable:
    """Discount factors at knots, log-linear in between and flat-forward beyond."""

    knots: tuple  # ((t, B(t)), ...)

    def __post_init__(self):
        knots = tuple((float(t), float(b)) for t, b in self.knots)
        ts = np.array([k[0] for k in knots])
        bs = np.array([k[1] for k in knots])
        if ts.size == 0 or ts[0] <= 0.0 or np.any(np.diff(ts) <= 0.0):
            raise DomainError("discount knot times must be positive and increasing")
        if np.any(bs <= 0.0) or np.any(bs > 1.0) or np.any(np.diff(bs) > 0.0):
            raise DomainError("discount factors must be nonincreasing in (0, 1]")
        object.__setattr__(self, "knots", knots)

    def discount(self, t):
        t = np.asarray(t, dtype=float)
        ts = np.concatenate([[0.0], [k[0] for k in self.knots]])
        logb = np.concatenate([[0.0], np.log([k[1] for k in self.knots])])
        slopes = np.diff(logb) / np.diff(ts)
        seg = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, slopes.size - 1)
        return np.exp(logb[seg] + slopes[seg] * (t - ts[seg]))


DiscountCurve = Union[ZeroRate, FlatRate, DiscountTable]


@dataclass(frozen=True)
class TrancheContract:
    """Tranche with a running spread (decimal per year) and payment schedule.

    Payment dates default to ``payment_freq`` equally spaced dates per year up
    to ``maturity``.  Every payment date must fall on the pricing grid of
    step ``dt``.
    """

    tranche: TrancheSpec
    spread: float
    maturity: float
    payment_freq: int = 4
    dt: float = 1.0 / 48.0
    payment_dates: tuple | None = None

    def __post_init__(self):
        if not (self.spread >= 0.0 and math.isfinite(self.spread)):
            raise ConfigError(f"spread must be nonnegative, got {self.spread}")
        if not self.maturity > 0.0:
            raise ConfigError(f"maturity must be positive, got {self.maturity}")
        if not self.dt > 0.0:
            raise ConfigError(f"grid step must be positive, got {self.dt}")
        if self.payment_dates is None:
            count = self.maturity * self.payment_freq
            if abs(count - round(count)) > GRID_TOL * max(1.0, count) or round(count) < 1:
                raise ConfigError("maturity is not a whole number of payment periods")
            dates = tuple(self.maturity * (i + 1) / round(count) for i in range(round(count)))
        else:
            dates = tuple(float(x) for x in self.payment_dates)
            if not dates or dates[0] <= 0.0 or any(b <= a for a, b in zip(dates, dates[1:])):
                raise ConfigError("payment dates must be positive and increasing")
            if abs(dates[-1] - self.maturity) > GRID_TOL:
                raise ConfigError("the last payment date must equal the maturity")
        object.__setattr__(self, "payment_dates", dates)
        self.payment_steps()  # validates grid alignment

    @property
    def n_steps(self) -> int:
        return self._on_grid(self.maturity)

    def _on_grid(self, t: float) -> int:
        k = t / self.dt
        if abs(k - round(k)) > GRID_TOL * max(1.0, k):
            raise ConfigError(f"date {t} is not on the pricing grid of step {self.dt}")
        return int(round(k))

    def payment_steps(self) -> list[int]:
        return [self._on_grid(t) for t in self.payment_dates]

    def grid(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    def with_spread(self, spread: float) -> TrancheContract:
        return TrancheContract(self.tranche, spread, self.maturity, self.payment_freq, self.dt, self.payment_dates)


def expected_tranche_loss(portfolio: Portfolio, tr: TrancheSpec, t: float, q: QuadratureRule | None = None) -> float:
    """``E[min(max(L_t - a, 0), b - a)]`` from the tranche loss law."""
    return tranche_pmf(loss_pmf(portfolio, t, q), tr).mean()


def expected_tranche_loss_path(
    portfolio: Portfolio, tranches: Sequence[TrancheSpec], times, q: QuadratureRule | None = None
) -> np.ndarray:
    """Expected tranche losses, shape ``(len(tranches), len(times))``."""
    pmfs = loss_pmf_grid(portfolio, times, q)
    amounts = portfolio.delta * np.arange(pmfs.shape[1])
    return np.array([pmfs @ tr.payoff(amounts) for tr in tranches])


def _premium_from_path(contract: TrancheContract, curve, etl: np.ndarray) -> float:
    grid = contract.grid()
    width = contract.tranche.width
    value = 0.0
    prev_step = 0
    for step in contract.payment_steps():
        seg = etl[prev_step: step + 1]
        # trapezoid over the grid points of the period, endpoints half-weighted
        lost = contract.dt * (seg.sum() - 0.5 * (seg[0] + seg[-1]))
        period = grid[step] - grid[prev_step]
        value += float(curve.discount(grid[step])) * (period * width - lost)
        prev_step = step
    return contract.spread * value


def _protection_from_path(contract: TrancheContract, curve, etl: np.ndarray) -> float:
    grid = contract.grid()
    mids = 0.5 * (grid[1:] + grid[:-1])
    return float(curve.discount(mids) @ np.diff(etl))


def _path_for(contract: TrancheContract, portfolio: Portfolio, q) -> np.ndarray:
    return expected_tranche_loss_path(portfolio, [contract.tranche], contract.grid(), q)[0]


def premium_leg(contract: TrancheContract, portfolio: Portfolio, curve, q: QuadratureRule | None = None) -> float:
    return _premium_from_path(contract, curve, _path_for(contract, portfolio, q))


def protection_leg(contract: TrancheContract, portfolio: Portfolio, curve, q: QuadratureRule | None = None) -> float:
    return _protection_from_path(contract, curve, _path_for(contract, portfolio, q))


def upfront(contract: TrancheContract, portfolio: Portfolio, curve, q: QuadratureRule | None = None) -> float:
    """Upfront as a fraction of tranche width; positive means the protection buyer pays."""
    etl = _path_for(contract, portfolio, q)
    prem = _premium_from_path(contract, curve, etl)
    prot = _protection_from_path(contract, curve, etl)
    return (prot - prem) / contract.tranche.width


@dataclass(frozen=True, eq=False)
class TranchePrice:
    premium: float
    protection: float
    upfront: float


def price_tranches(
    contracts: Sequence[TrancheContract], portfolio: Portfolio, curve, q: QuadratureRule | None = None
) -> list[TranchePrice]:
    """Value several contracts sharing one pricing grid with a single loss-law pass."""
    contracts = list(contracts)
    if not contracts:
        return []
    grid = contracts[0].grid()
    for c in contracts[1:]:
        if c.n_steps != contracts[0].n_steps or abs(c.dt - contracts[0].dt) > 1e-15:
            raise ConfigError("contracts priced together must share maturity and grid step")
    paths = expected_tranche_loss_path(portfolio, [c.tranche for c in contracts], grid, q)
    out = []
    for c, etl in zip(contracts, paths):
        prem = _premium_from_path(c, curve, etl)
        prot = _protection_from_path(c, curve, etl)
        out.append(TranchePrice(prem, prot, (prot - prem) / c.tranche.width))
    return out
