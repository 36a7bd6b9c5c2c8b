"""Calibration of copula parameters to tranche upfronts and of recovery laws to data.

Tranche calibration minimises the squared upfront error in two stages:
a global differential-evolution search over the parameter box followed by a
Nelder-Mead polish in unconstrained coordinates ``z`` with
``x = lo + (hi - lo) * sigmoid(z)``, which keeps every iterate inside the box.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import optimize
from scipy.special import expit, logit

from .copulas import Link, MixtureCopula, gaussian
from .engine import Portfolio, TrancheSpec
from .errors import CalibrationError, ConfigError, CopulaLossError, DataError, DomainError
from .factor import MarginalCurve
from .lossmodel import ConstantLoss, LossLaw, bb_logpmf, bb_mean, bb_variance
from .pricing import TrancheContract, ZeroRate, price_tranches
from .quadrature import QuadratureRule

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# quotes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrancheQuote:
    """Market upfronts as fractions of tranche width; spread as a decimal per year."""

    attach: float
    detach: float
    spread: float
    upfront_mid: float
    upfront_bid: float | None = None
    upfront_ask: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.attach < self.detach:
            raise DataError(f"quote needs 0 <= attach < detach, got ({self.attach}, {self.detach})")
        if self.spread < 0.0:
            raise DataError(f"quoted spread must be nonnegative, got {self.spread}")
        values = [x for x in (self.upfront_bid, self.upfront_mid, self.upfront_ask) if x is not None]
        if any(b < a for a, b in zip(values, values[1:])):
            raise DataError("quotes must satisfy bid <= mid <= ask")

    @property
    def tranche(self) -> TrancheSpec:
        return TrancheSpec(self.attach, self.detach)


@dataclass(frozen=True)
class QuoteSet:
    quotes: tuple
    index_spread: float | None = None
    date: str | None = None

    def __post_init__(self):
        quotes = tuple(self.quotes)
        if not quotes:
            raise DataError("a quote set needs at least one tranche quote")
        object.__setattr__(self, "quotes", quotes)


# ---------------------------------------------------------------------------
# model templates
# ---------------------------------------------------------------------------

def gaussian_mixture_template(w: float, rho1: float, rho2: float) -> Link:
    """Link copula ``w C(rho1) + (1 - w) C(rho2)`` with Gaussian components.

    Degenerate mixtures collapse to a single Gaussian copula.
    """
    if not 0.0 <= w <= 1.0:
        raise DomainError(f"mixture weight must lie in [0, 1], got {w}")
    c1, c2 = gaussian(rho1), gaussian(rho2)
    if w == 1.0 or rho1 == rho2:
        return c1
    if w == 0.0:
        return c2
    return MixtureCopula(((w, c1), (1.0 - w, c2)))


@dataclass(frozen=True)
class GaussianMixturePortfolio:
    """Builds the homogeneous portfolio for parameters ``w, rho1, rho2``."""

    size: int
    marginal: MarginalCurve
    loss: LossLaw = ConstantLoss(1)
    delta: float = 1.0

    def __call__(self, params: Mapping[str, float]) -> Portfolio:
        link = gaussian_mixture_template(params["w"], params["rho1"], params["rho2"])
        return Portfolio.homogeneous(self.size, link, self.marginal, self.loss, self.delta)

    @staticmethod
    def canonical(params: dict) -> dict:
        # flipping both signs maps the factor v to 1 - v and leaves every loss law unchanged
        if params["rho1"] + params["rho2"] < 0.0:
            params = dict(params, rho1=-params["rho1"], rho2=-params["rho2"])
        # (w, r1, r2) and (1 - w, r2, r1) describe the same model
        if params["rho1"] > params["rho2"]:
            params = dict(params, w=1.0 - params["w"], rho1=params["rho2"], rho2=params["rho1"])
        return params


@dataclass(frozen=True)
class DESettings:
    popsize: int = 15
    maxiter: int = 200
    mutation: float = 0.8
    recombination: float = 0.9
    strategy: str = "rand1bin"
    tol: float = 0.01
    # the relative tolerance alone never triggers when the optimum is zero
    atol: float = 1e-12
    nm_maxiter: int = 4000


@dataclass(frozen=True)
class CalibrationProblem:
    """Free parameters with box bounds, fixed parameters and contract conventions.

    ``template`` maps a full parameter dictionary to a portfolio.
    """

    template: Callable[[Mapping[str, float]], Portfolio]
    names: tuple
    bounds: tuple
    fixed: tuple = ()
    maturity: float = 5.0
    payment_freq: int = 4
    dt: float = 1.0 / 48.0
    curve: object = ZeroRate()
    weight_by_width: bool = False
    settings: DESettings = DESettings()

    def __post_init__(self):
        names = tuple(self.names)
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if not names:
            raise ConfigError("a calibration problem needs at least one free parameter")
        if len(names) != len(bounds):
            raise ConfigError("one (lo, hi) bound per free parameter is required")
        for name, (lo, hi) in zip(names, bounds):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConfigError(f"empty or unbounded box for parameter {name!r}")
        fixed = tuple((str(k), float(v)) for k, v in dict(self.fixed).items())
        if set(names) & {k for k, _ in fixed}:
            raise ConfigError("a parameter cannot be both free and fixed")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "fixed", fixed)

    def params(self, theta: Sequence[float]) -> dict:
        out = dict(self.fixed)
        out.update(zip(self.names, (float(x) for x in theta)))
        return out

    def contracts(self, quotes: QuoteSet) -> list[TrancheContract]:
        return [
            TrancheContract(q.tranche, q.spread, self.maturity, self.payment_freq, self.dt)
            for q in quotes.quotes
        ]


def gaussian_mixture_problem(
    marginal: MarginalCurve,
    size: int = 125,
    loss: LossLaw = ConstantLoss(1),
    delta: float = 1.0,
    fixed: Mapping[str, float] | None = None,
    rho_bounds: tuple = (-0.999, 0.999),
    **kwargs,
) -> CalibrationProblem:
    fixed = dict(fixed or {})
    all_bounds = {"w": (0.0, 1.0), "rho1": rho_bounds, "rho2": rho_bounds}
    names = tuple(k for k in ("w", "rho1", "rho2") if k not in fixed)
    return CalibrationProblem(
        template=GaussianMixturePortfolio(size, marginal, loss, delta),
        names=names,
        bounds=tuple(all_bounds[k] for k in names),
        fixed=tuple(fixed.items()),
        **kwargs,
    )


# ---------------------------------------------------------------------------
# objective and optimiser
# ---------------------------------------------------------------------------

def model_upfronts(problem: CalibrationProblem, theta, quotes: QuoteSet, q: QuadratureRule | None = None) -> np.ndarray:
    portfolio = problem.template(problem.params(theta))
    prices = price_tranches(problem.contracts(quotes), portfolio, problem.curve, q)
    return np.array([p.upfront for p in prices])


def objective(problem: CalibrationProblem, theta, quotes: QuoteSet, q: QuadratureRule | None = None) -> float:
    """Sum of squared upfront errors; ``inf`` if the model cannot be priced at ``theta``."""
    try:
        model = model_upfronts(problem, theta, quotes, q)
    except (CopulaLossError, FloatingPointError) as exc:
        log.warning("pricing failed at theta=%s: %s", list(theta), exc)
        return math.inf
    market = np.array([x.upfront_mid for x in quotes.quotes])
    err = market - model
    if problem.weight_by_width:
        err = err * np.array([x.detach - x.attach for x in quotes.quotes])
    value = float(err @ err)
    return value if math.isfinite(value) else math.inf


def to_box(z, bounds) -> np.ndarray:
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return lo + (hi - lo) * expit(np.asarray(z, dtype=float))


def from_box(x, bounds, margin: float = 1e-9) -> np.ndarray:
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    frac = np.clip((np.asarray(x, dtype=float) - lo) / (hi - lo), margin, 1.0 - margin)
    return logit(frac)


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    theta: dict
    objective: float
    stage: str
    de_objective: float
    nm_objective: float
    iterations: int
    evaluations: int
    seed: int
    per_tranche_error_bp: tuple
    nm_trace: tuple = field(default=(), repr=False)

    def to_json(self) -> dict:
        return {
            "theta": self.theta,
            "objective": self.objective,
            "per_tranche_error_bp": list(self.per_tranche_error_bp),
            "iterations": self.iterations,
            "seed": self.seed,
        }


def calibrate(
    problem: CalibrationProblem,
    quotes: QuoteSet,
    q: QuadratureRule | None = None,
    seed: int = 0,
    trace: bool = False,
) -> CalibrationResult:
    """Differential evolution over the box, then a bounded Nelder-Mead polish."""
    s = problem.settings
    n_eval = 0

    def f(theta):
        nonlocal n_eval
        n_eval += 1
        return objective(problem, theta, quotes, q)

    de = optimize.differential_evolution(
        f,
        bounds=list(problem.bounds),
        strategy=s.strategy,
        popsize=s.popsize,
        maxiter=s.maxiter,
        mutation=s.mutation,
        recombination=s.recombination,
        tol=s.tol,
        atol=s.atol,
        seed=seed,
        polish=False,
        init="latinhypercube",
    )
    de_x, de_f = np.asarray(de.x, dtype=float), float(de.fun)
    if not math.isfinite(de_f):
        raise CalibrationError(f"no admissible parameters found by the global search ({de.message})")

    nm_trace: list = []

    def g(z):
        x = to_box(z, problem.bounds)
        if trace:
            nm_trace.append(x.copy())
        return f(x)

    nm = optimize.minimize(
        g,
        from_box(de_x, problem.bounds),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-18, "maxiter": s.nm_maxiter, "maxfev": 2 * s.nm_maxiter},
    )
    nm_x, nm_f = to_box(nm.x, problem.bounds), float(nm.fun)

    if nm_f < de_f:
        best_x, best_f, stage = nm_x, nm_f, "nelder-mead"
    else:
        best_x, best_f, stage = de_x, de_f, "differential-evolution"
    theta = {k: float(v) for k, v in zip(problem.names, best_x)}
    canonical = getattr(problem.template, "canonical", None)
    if canonical is not None and set(theta) >= {"w", "rho1", "rho2"}:
        theta = canonical(theta)
    full = problem.params([theta[k] for k in problem.names])
    model = model_upfronts(problem, [full[k] for k in problem.names], quotes, q)
    errors = tuple(float(1e4 * (m - x.upfront_mid)) for m, x in zip(model, quotes.quotes))
    return CalibrationResult(
        theta=theta,
        objective=best_f,
        stage=stage,
        de_objective=de_f,
        nm_objective=nm_f,
        iterations=int(de.nit) + int(nm.nit),
        evaluations=n_eval,
        seed=int(seed),
        per_tranche_error_bp=errors,
        nm_trace=tuple(nm_trace),
    )


# ---------------------------------------------------------------------------
# recovery data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecoveryFit:
    """Beta-binomial fit on binned recoveries.

    ``mean`` and ``sd`` are on the recovery scale with bin ``k`` standing for
    its midpoint ``(k + 0.5) / bins``; ``shape_mean`` is ``alpha / (alpha + beta)``.
    """

    alpha: float
    beta: float
    mean: float
    sd: float
    shape_mean: float
    loglik: float
    counts: tuple


def bin_recoveries(recoveries, bins: int) -> np.ndarray:
    """Bin index per recovery, bins closed on the right with 0 in the first bin."""
    r = np.asarray(recoveries, dtype=float)
    return np.clip(np.ceil(r * bins).astype(int) - 1, 0, bins - 1)


def fit_recovery_mle(recoveries, bins: int = 10, n: int | None = None) -> RecoveryFit:
    """Maximum-likelihood Beta-binomial fit to binned recovery rates."""
    r = np.asarray(recoveries, dtype=float).ravel()
    if r.size == 0:
        raise DataError("no recovery observations")
    if np.any(~np.isfinite(r)) or np.any((r < 0.0) | (r > 1.0)):
        raise DataError("recoveries must be fractions in [0, 1]")
    if int(bins) != bins or bins < 2:
        raise DomainError(f"bins must be an integer >= 2, got {bins}")
    bins = int(bins)
    n = bins - 1 if n is None else int(n)
    if n != bins - 1:
        raise DomainError("the Beta-binomial size must equal bins - 1")
    k = bin_recoveries(r, bins)
    counts = np.bincount(k, minlength=bins)
    if np.count_nonzero(counts) < 2:
        raise DataError("all recoveries fall in a single bin; the likelihood has no interior maximum")

    def nll(z):
        a, b = np.exp(np.clip(z, -30.0, 30.0))
        return -float(counts @ bb_logpmf(a, b, n, np.arange(bins)))

    # method-of-moments start on the bin scale
    m = float(k.mean()) / n
    v = float(k.var()) / (n * n)
    conc = m * (1.0 - m) / v - 1.0 if v > 0 else 1.0
    conc = conc if conc > 0 else 1.0
    start = np.log([max(m * conc, 1e-3), max((1.0 - m) * conc, 1e-3)])
    res = optimize.minimize(nll, start, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    a, b = np.exp(res.x)
    if max(abs(res.x)) > 25:
        raise DataError("recovery fit diverged; data are too concentrated for a Beta-binomial")
    mean_k = float(bb_mean(a, b, n))
    sd_k = math.sqrt(float(bb_variance(a, b, n)))
    return RecoveryFit(
        alpha=float(a),
        beta=float(b),
        mean=(mean_k + 0.5) / bins,
        sd=sd_k / bins,
        shape_mean=float(a / (a + b)),
        loglik=-float(res.fun),
        counts=tuple(int(c) for c in counts),
    )
