"""Factor copula models for default times.

Entity ``j`` defaults by time ``t`` when its latent uniform ``U_j`` falls
below the marginal default probability ``p_j(t)``.  The ``U_j`` are
independent given a vector of independent uniform factors ``V``, with the
conditional law of ``U_j`` given ``V`` built from a chain of bivariate
h-functions, one per factor:

    P[U_j <= u | V = v] = h_1(h_2(... h_d(u | v_d) ... | v_2) | v_1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .copulas import Copula, MixtureCopula
from .errors import ConfigError, DegenerateConditioningError, DomainError
from .quadrature import QuadratureRule, default_rule, gauss_legendre_rule

DEGENERATE_THRESHOLD = 1e-300

__all__ = [
    "ConstantIntensity",
    "SpreadImplied",
    "PiecewiseCurve",
    "MarginalCurve",
    "FactorModel",
    "QuadratureRule",
    "gauss_legendre_rule",
    "default_rule",
    "marginal_default_prob",
    "conditional_default_prob",
    "joint_default_prob",
    "conditional_given_defaults",
]


def _check_times(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)) or np.any(t < 0.0):
        raise DomainError("times must be nonnegative")
    return t


@dataclass(frozen=True)
class ConstantIntensity:
    """``p(t) = 1 - exp(-intensity * t)``."""

    intensity: float

    def __post_init__(self):
        if not (math.isfinite(self.intensity) and self.intensity >= 0.0):
            raise DomainError(f"intensity must be finite and nonnegative, got {self.intensity}")

    def prob(self, t):
        return -np.expm1(-self.intensity * _check_times(t))

    def default_time(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(u > 0.0, -np.log1p(-u) / self.intensity if self.intensity > 0 else np.inf, 0.0)


@dataclass(frozen=True)
class SpreadImplied:
    """Intensity backed out of a CDS spread: ``p(t) = 1 - exp(-lambda t / (1 - R))``."""

    intensity: float
    recovery: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.intensity) and self.intensity >= 0.0):
            raise DomainError(f"spread intensity must be finite and nonnegative, got {self.intensity}")
        if not 0.0 <= self.recovery < 1.0:
            raise DomainError(f"recovery must lie in [0, 1), got {self.recovery}")

    @property
    def hazard(self) -> float:
        return self.intensity / (1.0 - self.recovery)

    def prob(self, t):
        return -np.expm1(-self.hazard * _check_times(t))

    def default_time(self, u):
        return ConstantIntensity(self.hazard).default_time(u)


@dataclass(frozen=True)
class PiecewiseCurve:
    """Default probabilities at knot times, log-linear survival in between.

    The hazard of the last segment is extended beyond the final knot.
    """

    knots: tuple  # ((t_1, p_1), (t_2, p_2), ...), t_1 > 0

    def __post_init__(self):
        knots = tuple((float(t), float(p)) for t, p in self.knots)
        if not knots:
            raise DomainError("a piecewise curve needs at least one knot")
        ts = np.array([k[0] for k in knots])
        ps = np.array([k[1] for k in knots])
        if ts[0] <= 0.0 or np.any(np.diff(ts) <= 0.0):
            raise DomainError("knot times must be positive and strictly increasing")
        if np.any(ps < 0.0) or np.any(ps >= 1.0) or np.any(np.diff(ps) < 0.0):
            raise DomainError("knot probabilities must be nondecreasing in [0, 1)")
        object.__setattr__(self, "knots", knots)

    def _segments(self):
        ts = np.concatenate([[0.0], [k[0] for k in self.knots]])
        log_s = np.concatenate([[0.0], np.log1p(-np.array([k[1] for k in self.knots]))])
        hazards = -np.diff(log_s) / np.diff(ts)
        return ts, log_s, hazards

    def prob(self, t):
        t = _check_times(t)
        ts, log_s, hazards = self._segments()
        seg = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, hazards.size - 1)
        return -np.expm1(log_s[seg] - hazards[seg] * (t - ts[seg]))

    def default_time(self, u):
        u = np.asarray(u, dtype=float)
        ts, log_s, hazards = self._segments()
        target = np.log1p(-np.minimum(u, 1.0))
        # log survival is nonincreasing, so search on its negation
        seg = np.clip(np.searchsorted(-log_s, -target, side="left") - 1, 0, hazards.size - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = ts[seg] + (log_s[seg] - target) / hazards[seg]
        t = np.where(hazards[seg] > 0.0, t, np.inf)
        return np.where(u <= 0.0, 0.0, t)


MarginalCurve = Union[ConstantIntensity, SpreadImplied, PiecewiseCurve]


def marginal_default_prob(m: MarginalCurve, t):
    out = m.prob(t)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# link chains
# ---------------------------------------------------------------------------

def chain_hfunc(chain: tuple, p, nodes: np.ndarray) -> np.ndarray:
    """Conditional default probability through a link chain.

    ``p`` broadcasts against the node axis (last axis); ``nodes`` is ``(K, d)``.
    """
    x = np.asarray(p, dtype=float)
    for i in range(len(chain) - 1, -1, -1):
        x = chain[i]._h(x, nodes[:, i])
    return x


def chain_hinv(chain: tuple, w, points: np.ndarray) -> np.ndarray:
    """Invert :func:`chain_hfunc` in its first argument."""
    x = np.asarray(w, dtype=float)
    for i in range(len(chain)):
        x = chain[i]._hinv(x, points[:, i])
    return x


def chain_density(chain: tuple, u, nodes: np.ndarray) -> np.ndarray:
    """Density of ``U_j`` given ``V`` at ``u``: the derivative of the chain in ``u``."""
    x = np.asarray(u, dtype=float)
    dens = 1.0
    for i in range(len(chain) - 1, -1, -1):
        dens = dens * chain[i]._density(x, nodes[:, i])
        if i:
            x = chain[i]._h(x, nodes[:, i])
    return np.asarray(dens)


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------

def _as_chain(links, d: int) -> tuple:
    if isinstance(links, (Copula, MixtureCopula)):
        links = (links,)
    chain = tuple(links)
    if len(chain) != d:
        raise ConfigError(f"link chain has {len(chain)} copulas but the model has d={d}")
    for c in chain:
        if not isinstance(c, (Copula, MixtureCopula)):
            raise ConfigError(f"link {c!r} is not a copula")
    return chain


@dataclass(frozen=True)
class FactorModel:
    """Marginal curves and link chains for ``N`` entities driven by ``d`` factors.

    The factors are independent uniforms.  ``links[j]`` is the chain
    ``(C_{U_j,V_1}, ..., C_{U_j,V_d})``; for ``d = 1`` a bare copula is accepted.
    """

    links: tuple
    marginals: tuple
    d: int = 1

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError(f"factor dimension must be a positive integer, got {self.d}")
        object.__setattr__(self, "d", int(self.d))
        marginals = tuple(self.marginals)
        links = tuple(_as_chain(c, self.d) for c in self.links)
        if len(links) != len(marginals):
            raise ConfigError(f"{len(links)} link chains for {len(marginals)} marginal curves")
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "marginals", marginals)

    @classmethod
    def homogeneous(cls, n: int, links, marginal: MarginalCurve, d: int = 1) -> FactorModel:
        chain = _as_chain(links, d)
        return cls(links=(chain,) * n, marginals=(marginal,) * n, d=d)

    @property
    def size(self) -> int:
        return len(self.marginals)

    def probs(self, t) -> np.ndarray:
        """Marginal default probabilities of every entity at time(s) ``t``; shape ``(N,) + t.shape``."""
        t = _check_times(t)
        return np.array([m.prob(t) for m in self.marginals]).reshape((self.size,) + t.shape)


def _resolve_rule(model: FactorModel, q: QuadratureRule | None) -> QuadratureRule:
    if q is None:
        return default_rule(model.d)
    if q.d != model.d:
        raise ConfigError(f"quadrature dimension {q.d} does not match factor dimension {model.d}")
    return q


def _factor_points(v, d: int) -> tuple[np.ndarray, bool]:
    v = np.asarray(v, dtype=float)
    single = v.ndim == 0 or (v.ndim == 1 and d > 1)
    pts = v.reshape(-1, d) if v.ndim <= 1 else v
    if pts.shape[-1] != d:
        raise ConfigError(f"factor points must have {d} coordinates")
    if np.any(~((pts > 0.0) & (pts < 1.0))):
        raise DomainError("factor values must lie strictly inside (0, 1)")
    return pts, single


def conditional_default_prob(model: FactorModel, j: int, t: float, v):
    """``P[tau_j <= t | V = v]`` for one point or an array of points ``(K, d)``."""
    pts, single = _factor_points(v, model.d)
    p = model.marginals[j].prob(t)
    out = chain_hfunc(model.links[j], p, pts)
    if single or (model.d == 1 and np.ndim(v) == 0):
        return float(out.ravel()[0])
    return out


def _entity_times(model: FactorModel, times) -> np.ndarray:
    times = _check_times(times)
    if times.ndim == 0:
        return np.full(model.size, float(times))
    if times.shape != (model.size,):
        raise ConfigError(f"expected {model.size} times, got shape {times.shape}")
    return times


def joint_default_prob(model: FactorModel, times, q: QuadratureRule | None = None) -> float:
    """``P[tau_j <= t_j for all j]`` by quadrature over the factors."""
    q = _resolve_rule(model, q)
    times = _entity_times(model, times)
    integrand = np.ones(q.size)
    for j in range(model.size):
        p = model.marginals[j].prob(times[j])
        integrand = integrand * chain_hfunc(model.links[j], p, q.nodes)
    return float(np.clip(q.weights @ integrand, 0.0, 1.0))


def conditional_given_defaults(
    model: FactorModel,
    times,
    defaulted: Mapping[int, float],
    q: QuadratureRule | None = None,
) -> float:
    """Probability that the other entities default by ``times`` given exact defaults.

    ``defaulted`` maps entity index to its observed default time.  Entries of
    ``times`` belonging to defaulted entities are ignored.
    """
    q = _resolve_rule(model, q)
    times = _entity_times(model, times)
    defaulted = dict(defaulted)
    for k, tk in defaulted.items():
        if not 0 <= k < model.size:
            raise ConfigError(f"entity index {k} out of range")
        pk = float(model.marginals[k].prob(tk))
        if not 0.0 < pk < 1.0:
            raise DomainError(f"default probability of entity {k} at t={tk} must lie in (0, 1)")

    weight = np.ones(q.size)
    for k, tk in defaulted.items():
        pk = model.marginals[k].prob(tk)
        weight = weight * chain_density(model.links[k], np.full(q.size, pk), q.nodes)
    denominator = float(q.weights @ weight)
    if not denominator > DEGENERATE_THRESHOLD:
        raise DegenerateConditioningError(
            f"conditioning density integrates to {denominator:.3e}"
        )
    integrand = weight
    for j in range(model.size):
        if j in defaulted:
            continue
        p = model.marginals[j].prob(times[j])
        integrand = integrand * chain_hfunc(model.links[j], p, q.nodes)
    return float(np.clip(q.weights @ integrand / denominator, 0.0, 1.0))
