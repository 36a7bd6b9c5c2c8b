"""Tensor-product Gauss-Legendre rules on the unit hypercube."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceError

MAX_GRID_POINTS = 10**8
DEFAULT_ORDER = {1: 64, 2: 32, 3: 16}


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes in the open cube ``(0, 1)^d`` with positive weights summing to one.

    ``nodes`` has shape ``(n**d, d)``; ``weights`` has shape ``(n**d,)``.
    """

    n: int
    d: int
    nodes: np.ndarray
    weights: np.ndarray
    smooth: bool = False

    @property
    def size(self) -> int:
        return self.weights.size

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Contract the leading node axis of ``values`` against the weights."""
        return np.tensordot(self.weights, values, axes=(0, 0))


def _legendre_1d(n: int, smooth: bool) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    if smooth:
        # v = s^2 / (s^2 + (1-s)^2) clusters nodes at both ends, which tames
        # the integrable log-type singularities of Gaussian and t links
        den = s * s + (1.0 - s) ** 2
        v = s * s / den
        w = w * 2.0 * s * (1.0 - s) / (den * den)
        s = v
    return s, w / w.sum()


def gauss_legendre_rule(n: int, d: int = 1, smooth: bool = False) -> QuadratureRule:
    """Product Gauss-Legendre rule with ``n`` nodes per dimension.

    With ``smooth=False`` the plain rule is returned, exact for polynomials of
    degree ``2n - 1`` in each coordinate.  ``smooth=True`` composes it with an
    endpoint-clustering change of variables; this loses polynomial exactness
    but converges much faster for integrands involving normal quantiles.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"node count must be a positive integer, got {n}")
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d}")
    n, d = int(n), int(d)
    if float(n) ** d > MAX_GRID_POINTS:
        raise ResourceError(f"{n}^{d} quadrature points exceed the limit of {MAX_GRID_POINTS}")
    s, w = _legendre_1d(n, smooth)
    if d == 1:
        nodes = s[:, None]
        weights = w.copy()
    else:
        grids = np.meshgrid(*([s] * d), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=1)
        wgrids = np.meshgrid(*([w] * d), indexing="ij")
        weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
        weights = weights / weights.sum()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(n=n, d=d, nodes=nodes, weights=weights, smooth=smooth)


def default_rule(d: int, n: int | None = None) -> QuadratureRule:
    """The rule used when callers do not supply one: smoothed, order by dimension."""
    if n is None:
        n = DEFAULT_ORDER.get(d, 8)
    return gauss_legendre_rule(n, d, smooth=True)
