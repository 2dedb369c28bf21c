"""Activations, their Hermite expansions, truncations and dual activations.

Every activation is rescaled so that ``E sigma(X)**2 = 1`` for X ~ N(0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erf

from .errors import TruncationTooCoarse
from .hermite import MAX_NODES, gauss_hermite_nodes, hermite_eval_all, hermite_monomial_coeffs

__all__ = [
    "ActivationSpec",
    "HermiteExpansion",
    "BUILTIN_ACTIVATIONS",
    "make_activation",
    "expand",
    "sigma_n_eval",
    "dual_activation",
    "erf_sigmoid_derivative",
    "gaussian_integrate",
]

BUILTIN_ACTIVATIONS = ("erf_sigmoid", "relu_like", "relu", "identity")

_DIVERGENCE_LIMIT = 1e12
# half-width of the composite rule used for kinked integrands; the Gaussian
# weight is below 1e-40 past it
_SPLIT_RADIUS = 14.0
_SPLIT_NODES = 300


@lru_cache(maxsize=4)
def _split_rule(m: int = _SPLIT_NODES, radius: float = _SPLIT_RADIUS):
    t, w = leggauss(m)
    pos = 0.5 * radius * (t + 1.0)
    wpos = 0.5 * radius * w * np.exp(-0.5 * pos**2) / math.sqrt(2.0 * math.pi)
    nodes = np.concatenate([-pos[::-1], pos])
    weights = np.concatenate([wpos[::-1], wpos])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _quadrature_rule(kink: bool, degree: int = 0):
    if kink:
        return _split_rule()
    return gauss_hermite_nodes(min(4 * degree + 64, MAX_NODES))


def gaussian_integrate(f: Callable, kink: bool = False, degree: int = 0) -> float:
    """``E f(X)`` for X ~ N(0, 1); splits at 0 when ``kink`` is set."""
    x, w = _quadrature_rule(kink, degree)
    return float(np.dot(w, f(x)))


@dataclass(frozen=True, eq=False)
class ActivationSpec:
    """A normalized activation ``sigma = raw / normalization_factor``."""

    name: str
    raw: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    lipschitz_L: float
    normalization_factor: float
    kink_at_zero: bool = False

    def eval(self, x):
        return self.raw(np.asarray(x, dtype=float)) / self.normalization_factor

    __call__ = eval


def _erf_sigmoid_raw(x):
    return math.sqrt(math.pi / 2.0) * erf(x / math.sqrt(2.0))


def _relu_like_raw(x):
    # int_0^x (erf(t) + 1) dt in closed form
    return x * erf(x) + (np.exp(-x * x) - 1.0) / math.sqrt(math.pi) + x


def _relu_raw(x):
    return np.maximum(x, 0.0)


def _identity_raw(x):
    return np.asarray(x, dtype=float) * 1.0


_RAW = {
    # name: (raw, raw Lipschitz constant, kink at zero)
    "erf_sigmoid": (_erf_sigmoid_raw, 1.0, False),
    "relu_like": (_relu_like_raw, 2.0, False),
    "relu": (_relu_raw, 1.0, True),
    "identity": (_identity_raw, 1.0, False),
}


def make_activation(
    kind: str,
    eval: Callable | None = None,
    L: float | None = None,
    *,
    name: str | None = None,
    kink_at_zero: bool = False,
) -> ActivationSpec:
    """Build a normalized activation.

    ``kind`` is one of ``erf_sigmoid``, ``relu_like``, ``relu``, ``identity``
    or ``custom``; the latter needs a vectorized ``eval`` and its Lipschitz
    constant ``L``.  The returned Lipschitz constant is that of the
    normalized function.
    """
    if kind == "custom":
        if eval is None or L is None:
            raise ValueError("custom activations need both eval and L")
        if not (math.isfinite(L) and L > 0):
            raise ValueError(f"Lipschitz constant must be positive and finite, got {L}")
        raw, raw_L, kink = eval, float(L), kink_at_zero
        label = name or "custom"
    elif kind in _RAW:
        raw, raw_L, kink = _RAW[kind]
        label = kind
    else:
        raise ValueError(f"unknown activation {kind!r}; expected one of {BUILTIN_ACTIVATIONS + ('custom',)}")

    second = gaussian_integrate(lambda x: np.asarray(raw(x), dtype=float) ** 2, kink=kink)
    if not math.isfinite(second) or second > _DIVERGENCE_LIMIT:
        raise ValueError(f"E raw^2 diverges for activation {label!r} (estimate {second:g})")
    if second <= 0:
        raise ValueError(f"activation {label!r} vanishes almost everywhere")
    # E X^2 = 1 exactly; keep the identity bit-exact
    factor = 1.0 if raw is _identity_raw else math.sqrt(second)
    return ActivationSpec(
        name=label,
        raw=raw,
        lipschitz_L=raw_L / factor,
        normalization_factor=factor,
        kink_at_zero=kink,
    )


def erf_sigmoid_derivative(act: ActivationSpec, k: int, x):
    """k-th derivative of the normalized erf sigmoid, k >= 1.

    Uses ``raw^{(k)}(x) = (-1)^{k-1} sqrt((k-1)!) h_{k-1}(x) exp(-x^2/2)``.
    """
    if act.name != "erf_sigmoid":
        raise ValueError("closed-form derivatives are only available for erf_sigmoid")
    if k < 1:
        raise ValueError("k must be >= 1")
    x = np.asarray(x, dtype=float)
    hk = hermite_eval_all(k - 1, x)[k - 1]
    sign = -1.0 if (k - 1) % 2 else 1.0
    return sign * math.sqrt(math.factorial(k - 1)) * hk * np.exp(-0.5 * x * x) / act.normalization_factor


@dataclass(frozen=True, eq=False)
class HermiteExpansion:
    """Hermite coefficients ``a_0..a_N`` of an activation and its truncation errors."""

    activation: ActivationSpec
    max_degree: int
    coeffs: np.ndarray
    eps: np.ndarray
    coarse: bool = False

    def check_degree(self, n: int) -> None:
        if not 0 <= n <= self.max_degree:
            raise ValueError(f"degree {n} outside expansion range [0, {self.max_degree}]")
        if self.eps[n] > 0.5:
            raise TruncationTooCoarse(
                f"eps_sigma({n}) = {self.eps[n]:.4g} > 1/2 for {self.activation.name}"
            )

    def sigma_n_hermite(self, n: int) -> np.ndarray:
        """Hermite coefficients of the renormalized truncation sigma_n."""
        self.check_degree(n)
        return self.coeffs[: n + 1] / math.sqrt(1.0 - self.eps[n])

    def sigma_n(self, n: int, x):
        c = self.sigma_n_hermite(n)
        x = np.asarray(x, dtype=float)
        return np.tensordot(c, hermite_eval_all(n, x), axes=(0, 0))

    def sigma_n_monomial(self, n: int) -> np.ndarray:
        """Monomial coefficients ``b_0..b_n`` of sigma_n."""
        c = self.sigma_n_hermite(n)
        b = np.zeros(n + 1)
        for j, aj in enumerate(c):
            hj = hermite_monomial_coeffs(j).monomial_coeffs
            b[: j + 1] += aj * np.asarray(hj)
        return b

    def dual(self, rho):
        return dual_activation(self, rho)

    def to_dict(self) -> dict:
        return {
            "activation": self.activation.name,
            "lipschitz_L": self.activation.lipschitz_L,
            "normalization_factor": self.activation.normalization_factor,
            "max_degree": self.max_degree,
            "coeffs": [float(a) for a in self.coeffs],
            "eps": [float(e) for e in self.eps],
            "coarse": self.coarse,
        }


def expand(act: ActivationSpec, N: int) -> HermiteExpansion:
    if not 0 <= N <= 40:
        raise ValueError(f"max degree must be in [0, 40], got {N}")
    if act.name == "identity" and act.raw is _identity_raw:
        # closed form x = h_1(x); quadrature would leave ulp-level residue
        a = np.zeros(N + 1)
        if N >= 1:
            a[1] = 1.0
    else:
        x, w = _quadrature_rule(act.kink_at_zero, N)
        a = hermite_eval_all(N, x) @ (w * act.eval(x))
    eps = np.maximum(0.0, 1.0 - np.cumsum(a * a))
    # cumulative sums can wobble by an ulp; keep eps monotone
    eps = np.minimum.accumulate(eps)
    a.setflags(write=False)
    eps.setflags(write=False)
    return HermiteExpansion(activation=act, max_degree=N, coeffs=a, eps=eps, coarse=bool(eps[N] > 0.5))


def sigma_n_eval(exp: HermiteExpansion, n: int, x):
    out = exp.sigma_n(n, x)
    return float(out) if np.ndim(out) == 0 else out


def dual_activation(exp: HermiteExpansion, rho):
    """Truncated dual activation ``sum_i a_i^2 rho^i``."""
    r = np.asarray(rho, dtype=float)
    if np.any(np.abs(r) > 1.0):
        raise ValueError("dual activation is defined on [-1, 1]")
    val = np.polynomial.polynomial.polyval(r, exp.coeffs**2)
    return float(val) if val.ndim == 0 else val
