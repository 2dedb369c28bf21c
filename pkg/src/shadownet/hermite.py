"""Normalized (probabilists', unit-norm) Hermite polynomials and Gaussian moments.

``h_n`` here is orthonormal under N(0, 1): ``E h_i(X) h_j(X) = delta_ij``.
Evaluation always goes through the three-term recursion; the monomial
form is only used for symbolic work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

__all__ = [
    "HermitePoly",
    "hermite_eval",
    "hermite_eval_all",
    "hermite_monomial_coeffs",
    "hermite_derivative_check",
    "gaussian_moment",
    "gauss_hermite_nodes",
    "gaussian_expectation",
    "default_node_count",
    "correlated_pairs",
]

MAX_NODES = 200


@dataclass(frozen=True)
class HermitePoly:
    degree: int
    monomial_coeffs: tuple[float, ...]

    def __call__(self, x):
        # only for small degrees; use hermite_eval for anything numerical
        return np.polynomial.polynomial.polyval(x, self.monomial_coeffs)


def hermite_eval_all(n: int, x):
    """Return ``[h_0(x), ..., h_n(x)]`` stacked along a new leading axis."""
    if n < 0:
        raise ValueError(f"degree must be non-negative, got {n}")
    x = np.asarray(x, dtype=float)
    out = np.empty((n + 1,) + x.shape)
    out[0] = 1.0
    if n >= 1:
        out[1] = x
    for k in range(1, n):
        out[k + 1] = x / math.sqrt(k + 1) * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def hermite_eval(n: int, x):
    """Evaluate ``h_n`` at ``x`` (scalar or array) by the three-term recursion."""
    if n < 0:
        raise ValueError(f"degree must be non-negative, got {n}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = x.copy()
    for k in range(1, n):
        prev, cur = cur, x / math.sqrt(k + 1) * cur - math.sqrt(k / (k + 1)) * prev
    return cur if cur.ndim else float(cur)


@lru_cache(maxsize=None)
def _monomial_table(n: int) -> tuple[tuple[float, ...], ...]:
    rows = [(1.0,), (0.0, 1.0)]
    for k in range(1, n):
        a = math.sqrt(k + 1)
        b = math.sqrt(k / (k + 1))
        nxt = [0.0] * (k + 2)
        for j, c in enumerate(rows[k]):
            nxt[j + 1] += c / a
        for j, c in enumerate(rows[k - 1]):
            nxt[j] -= b * c
        rows.append(tuple(nxt))
    return tuple(rows[: n + 1])


def hermite_monomial_coeffs(n: int) -> HermitePoly:
    """Monomial coefficients ``c_{n,k}`` (coefficient of ``x**k`` in ``h_n``)."""
    if n < 0:
        raise ValueError(f"degree must be non-negative, got {n}")
    coeffs = _monomial_table(max(n, 1))[n]
    if not all(math.isfinite(c) for c in coeffs):
        raise OverflowError(f"Hermite coefficients of degree {n} overflow double precision")
    return HermitePoly(degree=n, monomial_coeffs=coeffs)


def hermite_derivative_check(n: int, x):
    """``h_n'(x)`` via the identity ``h_n' = sqrt(n) h_{n-1}``."""
    if n < 1:
        raise ValueError("derivative identity needs n >= 1")
    return math.sqrt(n) * hermite_eval(n - 1, x)


def gaussian_moment(n: int) -> float:
    """``E X**n = (n-1)!!`` for even ``n`` under N(0, 1)."""
    if n < 0 or n % 2:
        raise ValueError(f"gaussian_moment needs a non-negative even order, got {n}")
    return float(math.prod(range(n - 1, 0, -2)))


@lru_cache(maxsize=64)
def _gh(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = hermegauss(m)
    w = w / math.sqrt(2.0 * math.pi)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_hermite_nodes(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``E f(X)``, X ~ N(0, 1); exact for degree <= 2m-1."""
    if not 1 <= m <= MAX_NODES:
        raise ValueError(f"node count must be in [1, {MAX_NODES}], got {m}")
    return _gh(m)


def default_node_count(degree: int) -> int:
    """Node count used when the integrand's polynomial part has degree ``2*degree``."""
    return min(max(2 * degree + 10, 64), MAX_NODES)


def gaussian_expectation(f, m: int = 64) -> float:
    x, w = gauss_hermite_nodes(m)
    return float(np.dot(w, f(x)))


def correlated_pairs(rho: float, size: int, rng: np.random.Generator):
    """Sample ``(X, rho X + sqrt(1 - rho^2) Z)``, a standard Gaussian pair with correlation rho."""
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho}")
    x = rng.standard_normal(size)
    z = rng.standard_normal(size)
    return x, rho * x + math.sqrt(max(0.0, 1.0 - rho * rho)) * z
