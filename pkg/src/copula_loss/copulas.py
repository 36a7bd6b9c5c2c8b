"""Parametric bivariate copulas and their mixtures.

Every copula is seen as the joint law of ``(U, V)`` where ``V`` plays the
role of the latent factor.  The h-function is the conditional distribution
of the first coordinate given the second,

    h(u | v) = dC(u, v) / dv = P[U <= u | V = v],

which is the building block of the factor construction.  All evaluators
broadcast over numpy arrays and return floats for scalar input.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate
from scipy.special import gammaln, ndtr, ndtri, owens_t, stdtr, stdtrit

from .errors import DomainError, NumericError

ArrayLike = Union[float, np.ndarray, Sequence[float]]

HINV_TOL = 1e-12
HINV_MAX_ITER = 200
_EPS = np.finfo(float).eps


class Family(str, enum.Enum):
    INDEPENDENCE = "independence"
    GAUSSIAN = "gaussian"
    STUDENT_T = "student_t"
    CLAYTON = "clayton"
    GUMBEL = "gumbel"
    FRANK = "frank"
    JOE = "joe"


_N_PARAMS = {
    Family.INDEPENDENCE: 0,
    Family.GAUSSIAN: 1,
    Family.STUDENT_T: 2,
    Family.CLAYTON: 1,
    Family.GUMBEL: 1,
    Family.FRANK: 1,
    Family.JOE: 1,
}


def _as_float(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_unit(x: ArrayLike, name: str, *, open_interval: bool = False) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError(f"{name} contains NaN")
    if open_interval:
        if np.any((arr <= 0.0) | (arr >= 1.0)):
            raise DomainError(f"{name} must lie in the open interval (0, 1)")
    elif np.any((arr < 0.0) | (arr > 1.0)):
        raise DomainError(f"{name} must lie in [0, 1]")
    return arr


# ---------------------------------------------------------------------------
# bivariate normal / t distribution functions
# ---------------------------------------------------------------------------

def bivariate_normal_cdf(h: ArrayLike, k: ArrayLike, rho: float) -> np.ndarray:
    """P[X <= h, Y <= k] for standard normals with correlation ``rho``.

    Uses the Owen's T representation, accurate to roughly 1e-15 absolute.
    Infinite limits are supported.
    """
    h, k = np.broadcast_arrays(np.asarray(h, dtype=float), np.asarray(k, dtype=float))
    out = np.empty(h.shape)
    s = math.sqrt((1.0 - rho) * (1.0 + rho))

    finite = np.isfinite(h) & np.isfinite(k)
    # infinite limits reduce to univariate margins
    out[~finite] = np.where(
        (h[~finite] == -np.inf) | (k[~finite] == -np.inf),
        0.0,
        ndtr(np.minimum(h[~finite], k[~finite])),
    )

    hf, kf = h[finite], k[finite]
    res = np.empty(hf.shape)
    both_zero = (hf == 0.0) & (kf == 0.0)
    res[both_zero] = 0.25 + math.asin(rho) / (2.0 * math.pi)

    rest = ~both_zero
    hh, kk = hf[rest], kf[rest]
    with np.errstate(divide="ignore", invalid="ignore"):
        a_h = (kk - rho * hh) / (hh * s)
        a_k = (hh - rho * kk) / (kk * s)
        t_h = np.where(hh == 0.0, 0.25 * np.sign(kk - rho * hh), owens_t(hh, a_h))
        t_k = np.where(kk == 0.0, 0.25 * np.sign(hh - rho * kk), owens_t(kk, a_k))
    beta = np.where((hh * kk < 0.0) | ((hh * kk == 0.0) & (hh + kk < 0.0)), 0.5, 0.0)
    res[rest] = 0.5 * ndtr(hh) + 0.5 * ndtr(kk) - t_h - t_k - beta
    out[finite] = res
    return np.clip(out, 0.0, 1.0)


def _t_conditional(x, y, rho, nu):
    scale = np.sqrt((1.0 - rho * rho) * (nu + y * y) / (nu + 1.0))
    return stdtr(nu + 1.0, (x - rho * y) / scale)


def bivariate_t_cdf(x: ArrayLike, y: ArrayLike, rho: float, nu: float) -> np.ndarray:
    """P[X <= x, Y <= y] for the standard bivariate t with ``nu`` degrees of freedom.

    Integrates the conditional law of X given Y = s against the t density of
    Y with adaptive quadrature.  Slow but accurate to about 1e-12.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.empty(x.shape)
    log_norm = gammaln((nu + 1.0) / 2.0) - gammaln(nu / 2.0) - 0.5 * math.log(nu * math.pi)

    def integrand(s, xi):
        dens = math.exp(log_norm - (nu + 1.0) / 2.0 * math.log1p(s * s / nu))
        return float(_t_conditional(xi, s, rho, nu)) * dens

    for idx in np.ndindex(x.shape):
        xi, yi = x[idx], y[idx]
        if xi == -np.inf or yi == -np.inf:
            out[idx] = 0.0
        elif xi == np.inf:
            out[idx] = stdtr(nu, yi)
        elif yi == np.inf:
            out[idx] = stdtr(nu, xi)
        else:
            val, _ = integrate.quad(
                integrand, -np.inf, yi, args=(xi,), epsabs=1e-14, epsrel=1e-13, limit=400
            )
            out[idx] = val
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# family kernels (interior arguments only)
# ---------------------------------------------------------------------------

def _clayton_logs(u, v, theta):
    a = -theta * np.log(u)
    b = -theta * np.log(v)
    big = np.logaddexp(a, b)
    log_s = big + np.log1p(-np.exp(-big))  # log(u^-t + v^-t - 1)
    return a, b, log_s


def _gumbel_logs(u, v, theta):
    x = -np.log(u)
    y = -np.log(v)
    log_a = np.logaddexp(theta * np.log(x), theta * np.log(y))
    return x, y, log_a


def _joe_parts(u, v, theta):
    # a = (1-u)^theta, b = (1-v)^theta, S = a + b - ab = 1 - (1-a)(1-b)
    a = np.exp(theta * np.log1p(-u))
    b = np.exp(theta * np.log1p(-v))
    one_minus_a = -np.expm1(theta * np.log1p(-u))
    one_minus_b = -np.expm1(theta * np.log1p(-v))
    direct = a + b * one_minus_a
    # pick the cancellation-free form on each side of S = 1/2
    log_s = np.where(direct < 0.5, np.log(direct), np.log1p(-one_minus_a * one_minus_b))
    return one_minus_a, one_minus_b, log_s


def _cdf_kernel(fam: Family, prm: tuple, u, v):
    if fam is Family.INDEPENDENCE:
        return u * v
    if fam is Family.GAUSSIAN:
        return bivariate_normal_cdf(ndtri(u), ndtri(v), prm[0])
    if fam is Family.STUDENT_T:
        rho, nu = prm
        return bivariate_t_cdf(stdtrit(nu, u), stdtrit(nu, v), rho, nu)
    if fam is Family.CLAYTON:
        (theta,) = prm
        _, _, log_s = _clayton_logs(u, v, theta)
        return np.exp(-log_s / theta)
    if fam is Family.GUMBEL:
        (theta,) = prm
        _, _, log_a = _gumbel_logs(u, v, theta)
        return np.exp(-np.exp(log_a / theta))
    if fam is Family.FRANK:
        (theta,) = prm
        num = np.expm1(-theta * u) * np.expm1(-theta * v)
        return -np.log1p(num / np.expm1(-theta)) / theta
    if fam is Family.JOE:
        (theta,) = prm
        _, _, log_s = _joe_parts(u, v, theta)
        return -np.expm1(log_s / theta)
    raise AssertionError(fam)


def _h_kernel(fam: Family, prm: tuple, u, v):
    if fam is Family.INDEPENDENCE:
        return np.broadcast_to(u, np.broadcast(u, v).shape).copy()
    if fam is Family.GAUSSIAN:
        (rho,) = prm
        return ndtr((ndtri(u) - rho * ndtri(v)) / math.sqrt((1.0 - rho) * (1.0 + rho)))
    if fam is Family.STUDENT_T:
        rho, nu = prm
        return _t_conditional(stdtrit(nu, u), stdtrit(nu, v), rho, nu)
    if fam is Family.CLAYTON:
        (theta,) = prm
        _, b, log_s = _clayton_logs(u, v, theta)
        return np.exp((1.0 + 1.0 / theta) * (b - log_s))
    if fam is Family.GUMBEL:
        (theta,) = prm
        _, y, log_a = _gumbel_logs(u, v, theta)
        log_h = -np.exp(log_a / theta) + (1.0 / theta - 1.0) * log_a + (theta - 1.0) * np.log(y) + y
        return np.exp(log_h)
    if fam is Family.FRANK:
        (theta,) = prm
        eu = np.expm1(-theta * u)
        ev = np.expm1(-theta * v)
        return np.exp(-theta * v) * eu / (np.expm1(-theta) + eu * ev)
    if fam is Family.JOE:
        (theta,) = prm
        one_minus_a, _, log_s = _joe_parts(u, v, theta)
        return np.exp((theta - 1.0) * np.log1p(-v) + (1.0 / theta - 1.0) * log_s) * one_minus_a
    raise AssertionError(fam)


def _hinv_kernel(fam: Family, prm: tuple, p, v):
    """Closed-form inverse h-functions; ``None`` when none is available."""
    if fam is Family.INDEPENDENCE:
        return np.broadcast_to(p, np.broadcast(p, v).shape).copy()
    if fam is Family.GAUSSIAN:
        (rho,) = prm
        return ndtr(ndtri(p) * math.sqrt((1.0 - rho) * (1.0 + rho)) + rho * ndtri(v))
    if fam is Family.STUDENT_T:
        rho, nu = prm
        y = stdtrit(nu, v)
        scale = np.sqrt((1.0 - rho * rho) * (nu + y * y) / (nu + 1.0))
        return stdtr(nu, stdtrit(nu + 1.0, p) * scale + rho * y)
    if fam is Family.CLAYTON:
        (theta,) = prm
        q = -theta / (1.0 + theta) * np.log(p)
        b = -theta * np.log(v)
        with np.errstate(divide="ignore"):
            log_inner = np.logaddexp(np.log(np.expm1(q)) + b, 0.0)
        return np.exp(-log_inner / theta)
    if fam is Family.FRANK:
        (theta,) = prm
        x = p * np.expm1(-theta) / (p + (1.0 - p) * np.exp(-theta * v))
        return -np.log1p(x) / theta
    return None


def _density_kernel(fam: Family, prm: tuple, u, v):
    if fam is Family.INDEPENDENCE:
        return np.ones(np.broadcast(u, v).shape)
    if fam is Family.GAUSSIAN:
        (rho,) = prm
        x, y = ndtri(u), ndtri(v)
        one_m = (1.0 - rho) * (1.0 + rho)
        expo = -(rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * one_m)
        return np.exp(expo) / math.sqrt(one_m)
    if fam is Family.STUDENT_T:
        rho, nu = prm
        x, y = stdtrit(nu, u), stdtrit(nu, v)
        one_m = (1.0 - rho) * (1.0 + rho)
        log_c = (
            gammaln((nu + 2.0) / 2.0) + gammaln(nu / 2.0) - 2.0 * gammaln((nu + 1.0) / 2.0)
            - 0.5 * math.log(one_m)
            - (nu + 2.0) / 2.0 * np.log1p((x * x - 2.0 * rho * x * y + y * y) / (nu * one_m))
            + (nu + 1.0) / 2.0 * (np.log1p(x * x / nu) + np.log1p(y * y / nu))
        )
        return np.exp(log_c)
    if fam is Family.CLAYTON:
        (theta,) = prm
        a, b, log_s = _clayton_logs(u, v, theta)
        return np.exp(math.log1p(theta) + (1.0 + 1.0 / theta) * (a + b) - (2.0 + 1.0 / theta) * log_s)
    if fam is Family.GUMBEL:
        (theta,) = prm
        x, y, log_a = _gumbel_logs(u, v, theta)
        a_root = np.exp(log_a / theta)
        log_c = (
            -a_root + x + y + (theta - 1.0) * (np.log(x) + np.log(y))
            + (1.0 / theta - 2.0) * log_a + np.log(a_root + theta - 1.0)
        )
        return np.exp(log_c)
    if fam is Family.FRANK:
        (theta,) = prm
        em = np.expm1(-theta)
        den = em + np.expm1(-theta * u) * np.expm1(-theta * v)
        return -theta * em * np.exp(-theta * (u + v)) / (den * den)
    if fam is Family.JOE:
        (theta,) = prm
        _, _, log_s = _joe_parts(u, v, theta)
        s = np.exp(log_s)
        log_c = (
            (1.0 / theta - 2.0) * log_s
            + (theta - 1.0) * (np.log1p(-u) + np.log1p(-v))
            + np.log(theta - 1.0 + s)
        )
        return np.exp(log_c)
    raise AssertionError(fam)


# ---------------------------------------------------------------------------
# generic helpers
# ---------------------------------------------------------------------------

def _solve_hinv(hfunc: Callable, density: Callable, p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Solve hfunc(u, v) = p for u on [0, 1].

    Newton steps on the density are taken only while they stay strictly
    inside the current bracket, otherwise the bracket is bisected, so the
    iteration converges for any monotone h-function.
    """
    p, v = np.broadcast_arrays(p, v)
    shape = p.shape
    p = p.ravel().copy()
    v = v.ravel().copy()
    out = np.where(p >= 1.0, 1.0, 0.0)
    todo = np.flatnonzero((p > 0.0) & (p < 1.0))
    lo = np.zeros(todo.size)
    hi = np.ones(todo.size)
    pt, vt = p[todo], v[todo]
    x = pt.copy()
    last_step = np.ones(todo.size)
    for _ in range(HINV_MAX_ITER):
        if todo.size == 0:
            break
        resid = hfunc(x, vt) - pt
        below = resid < 0.0
        lo = np.where(below, x, lo)
        hi = np.where(below, hi, x)
        done = (np.abs(resid) <= 0.1 * HINV_TOL) | (hi - lo <= 2.0 * _EPS * np.maximum(x, 1e-300))
        out[todo[done]] = x[done]
        with np.errstate(all="ignore"):
            newton = x - resid / density(x, vt)
        mid = 0.5 * (lo + hi)
        # Newton only while it stays in the bracket and its steps keep halving
        ok = (newton > lo) & (newton < hi) & (np.abs(newton - x) < 0.5 * last_step)
        nxt = np.where(ok, newton, mid)
        last_step = np.where(ok, np.abs(newton - x), hi - lo)
        x = nxt
        keep = ~done
        todo, lo, hi, pt, vt, x, last_step = (
            todo[keep], lo[keep], hi[keep], pt[keep], vt[keep], x[keep], last_step[keep]
        )
    if todo.size:
        raise NumericError(
            f"inverse h-function did not converge for {todo.size} points "
            f"(bracket width {np.max(hi - lo):.3e})"
        )
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# public types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Copula:
    """A one- or two-parameter bivariate copula family.

    ``params`` holds ``(rho,)`` for Gaussian, ``(rho, nu)`` for Student t,
    ``(theta,)`` for the Archimedean families and ``()`` for independence.
    """

    family: Family
    params: tuple = ()

    def __post_init__(self):
        try:
            fam = Family(self.family)
        except ValueError:
            raise DomainError(f"unknown copula family {self.family!r}") from None
        prm = tuple(float(x) for x in np.atleast_1d(self.params)) if np.size(self.params) else ()
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "params", prm)
        if len(prm) != _N_PARAMS[fam]:
            raise DomainError(f"{fam.value} copula takes {_N_PARAMS[fam]} parameters, got {len(prm)}")
        if any(not math.isfinite(x) for x in prm):
            raise DomainError(f"{fam.value} copula parameters must be finite")
        if fam in (Family.GAUSSIAN, Family.STUDENT_T) and not -1.0 < prm[0] < 1.0:
            raise DomainError(f"{fam.value} correlation must lie in (-1, 1), got {prm[0]}")
        if fam is Family.STUDENT_T and prm[1] <= 0.0:
            raise DomainError(f"student_t degrees of freedom must be positive, got {prm[1]}")
        if fam is Family.CLAYTON and prm[0] <= 0.0:
            raise DomainError(f"clayton theta must be > 0, got {prm[0]}")
        if fam in (Family.GUMBEL, Family.JOE) and prm[0] < 1.0:
            raise DomainError(f"{fam.value} theta must be >= 1, got {prm[0]}")
        if fam is Family.FRANK and prm[0] == 0.0:
            raise DomainError("frank theta must be nonzero")

    def cdf(self, u: ArrayLike, v: ArrayLike):
        u = _check_unit(u, "u")
        v = _check_unit(v, "v")
        u, v = np.broadcast_arrays(u, v)
        inner = (u > 0.0) & (u < 1.0) & (v > 0.0) & (v < 1.0)
        out = np.where(u == 1.0, v, np.where(v == 1.0, u, 0.0))
        if np.any(inner):
            with np.errstate(all="ignore"):
                out[inner] = _cdf_kernel(self.family, self.params, u[inner], v[inner])
        return _as_float(np.clip(out, 0.0, 1.0))

    def hfunc(self, u: ArrayLike, v: ArrayLike):
        u = _check_unit(u, "u")
        v = _check_unit(v, "v", open_interval=True)
        return _as_float(self._h(u, v))

    def _h(self, u, v):
        # unchecked: u in [0, 1], v in (0, 1)
        u, v = np.broadcast_arrays(u, v)
        out = np.where(u >= 1.0, 1.0, 0.0)
        inner = (u > 0.0) & (u < 1.0)
        if np.any(inner):
            with np.errstate(all="ignore"):
                out[inner] = _h_kernel(self.family, self.params, u[inner], v[inner])
        return np.clip(out, 0.0, 1.0)

    def hinv(self, p: ArrayLike, v: ArrayLike):
        p = _check_unit(p, "p")
        v = _check_unit(v, "v", open_interval=True)
        return _as_float(self._hinv(p, v))

    def _hinv(self, p, v):
        p, v = np.broadcast_arrays(p, v)
        inner = (p > 0.0) & (p < 1.0)
        out = np.where(p >= 1.0, 1.0, 0.0)
        if not np.any(inner):
            return out
        with np.errstate(all="ignore"):
            closed = _hinv_kernel(self.family, self.params, p[inner], v[inner])
        if closed is None:
            out[inner] = _solve_hinv(self._h, self._density_raw, p[inner], v[inner])
        else:
            out[inner] = np.clip(closed, 0.0, 1.0)
        return out

    def density(self, u: ArrayLike, v: ArrayLike):
        u = _check_unit(u, "u", open_interval=True)
        v = _check_unit(v, "v", open_interval=True)
        return _as_float(self._density(u, v))

    def _density_raw(self, u, v):
        with np.errstate(all="ignore"):
            return np.asarray(_density_kernel(self.family, self.params, u, v), dtype=float)

    def _density(self, u, v):
        out = self._density_raw(u, v)
        if np.any(~np.isfinite(out)):
            raise NumericError(f"{self.family.value} density overflowed at the requested points")
        return out

    def to_dict(self) -> dict:
        return {"family": self.family.value, "params": list(self.params)}


@dataclass(frozen=True)
class MixtureCopula:
    """Convex combination ``sum_k w_k C_k`` of bivariate copulas."""

    components: tuple  # of (weight, Copula)

    def __post_init__(self):
        comps = tuple((float(w), c) for w, c in self.components)
        if not comps:
            raise DomainError("a mixture needs at least one component")
        for w, c in comps:
            if not w > 0.0:
                raise DomainError(f"mixture weights must be positive, got {w}")
            if not isinstance(c, Copula):
                raise DomainError("mixture components must be plain copulas")
        total = sum(w for w, _ in comps)
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"mixture weights must sum to 1, got {total!r}")
        object.__setattr__(self, "components", comps)

    @property
    def weights(self) -> tuple:
        return tuple(w for w, _ in self.components)

    def cdf(self, u, v):
        return _as_float(sum(w * np.asarray(c.cdf(u, v)) for w, c in self.components))

    def hfunc(self, u, v):
        u = _check_unit(u, "u")
        v = _check_unit(v, "v", open_interval=True)
        return _as_float(self._h(u, v))

    def _h(self, u, v):
        return np.clip(sum(w * c._h(u, v) for w, c in self.components), 0.0, 1.0)

    def hinv(self, p, v):
        p = _check_unit(p, "p")
        v = _check_unit(v, "v", open_interval=True)
        return _as_float(self._hinv(p, v))

    def _hinv(self, p, v):
        if len(self.components) == 1:
            return self.components[0][1]._hinv(p, v)
        return _solve_hinv(self._h, self._density_raw, np.asarray(p, dtype=float), np.asarray(v, dtype=float))

    def density(self, u, v):
        u = _check_unit(u, "u", open_interval=True)
        v = _check_unit(v, "v", open_interval=True)
        return _as_float(self._density(u, v))

    def _density(self, u, v):
        return sum(w * c._density(u, v) for w, c in self.components)

    def _density_raw(self, u, v):
        return sum(w * c._density_raw(u, v) for w, c in self.components)

    def to_dict(self) -> list:
        return [dict(c.to_dict(), weight=w) for w, c in self.components]


Link = Union[Copula, MixtureCopula]


# ---------------------------------------------------------------------------
# constructors and functional interface
# ---------------------------------------------------------------------------

def independence() -> Copula:
    return Copula(Family.INDEPENDENCE)


def gaussian(rho: float) -> Copula:
    return Copula(Family.GAUSSIAN, (rho,))


def student_t(rho: float, nu: float) -> Copula:
    return Copula(Family.STUDENT_T, (rho, nu))


def clayton(theta: float) -> Copula:
    return Copula(Family.CLAYTON, (theta,))


def gumbel(theta: float) -> Copula:
    return Copula(Family.GUMBEL, (theta,))


def frank(theta: float) -> Copula:
    return Copula(Family.FRANK, (theta,))


def joe(theta: float) -> Copula:
    return Copula(Family.JOE, (theta,))


def mixture(weights: Sequence[float], copulas: Sequence[Copula]) -> MixtureCopula:
    if len(weights) != len(copulas):
        raise DomainError("weights and copulas must have the same length")
    return MixtureCopula(tuple(zip(weights, copulas)))


def stochastic_correlation_copula(alpha: float, beta: float, b: float) -> MixtureCopula:
    """Two-regime Gaussian mixture ``b C(alpha) + (1 - b) C(beta)``.

    Degenerate weights collapse to a single component so that ``b = 1`` gives
    exactly the Gaussian copula with correlation ``alpha``.
    """
    if not 0.0 <= b <= 1.0:
        raise DomainError(f"regime probability must lie in [0, 1], got {b}")
    ga, gb = gaussian(alpha), gaussian(beta)
    if b == 1.0:
        return MixtureCopula(((1.0, ga),))
    if b == 0.0:
        return MixtureCopula(((1.0, gb),))
    return MixtureCopula(((b, ga), (1.0 - b, gb)))


def copula_cdf(c: Link, u: ArrayLike, v: ArrayLike):
    return c.cdf(u, v)


def copula_hfunc(c: Link, u: ArrayLike, v: ArrayLike):
    return c.hfunc(u, v)


def copula_hinv(c: Link, p: ArrayLike, v: ArrayLike):
    return c.hinv(p, v)


def copula_density(c: Link, u: ArrayLike, v: ArrayLike):
    return c.density(u, v)


def link_from_spec(spec) -> Link:
    """Build a link copula from its config representation.

    ``spec`` is either ``{"family": ..., "params": [...]}`` or a list of such
    dicts each carrying a ``weight`` (a mixture).
    """
    if isinstance(spec, dict) and "mixture" in spec:
        spec = spec["mixture"]
    if isinstance(spec, dict):
        if "weight" in spec and float(spec["weight"]) != 1.0:
            raise DomainError("a single copula spec cannot carry a weight other than 1")
        return _copula_from_dict(spec)
    if isinstance(spec, (list, tuple)):
        comps = []
        for item in spec:
            if "weight" not in item:
                raise DomainError("mixture components need a 'weight'")
            comps.append((float(item["weight"]), _copula_from_dict(item)))
        return MixtureCopula(tuple(comps))
    raise DomainError(f"cannot interpret copula spec {spec!r}")


def _copula_from_dict(d: dict) -> Copula:
    if "family" not in d:
        raise DomainError("copula spec is missing 'family'")
    return Copula(d["family"], tuple(d.get("params", ())))
