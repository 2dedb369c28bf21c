"""Symbolic expansion of a shadow network into a sparse multivariate polynomial."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .activations import HermiteExpansion
from .bounds import BoundReport
from .errors import CombinatorialBlowup
from .network import NetworkWeights, clip_condition

__all__ = [
    "MonomialPolynomial",
    "sigma_n_monomial",
    "expand_shadow",
    "expand_shadow_traced",
    "coefficient_sum_check",
    "monomial_count",
    "MONOMIAL_BUDGET",
]

PRUNE = 1e-14
MONOMIAL_BUDGET = 10**6

Exponent = tuple[int, ...]


@dataclass
class MonomialPolynomial:
    """Sparse polynomial: exponent tuple -> coefficient."""

    num_vars: int
    terms: dict[Exponent, float] = field(default_factory=dict)

    @classmethod
    def constant(cls, num_vars: int, c: float) -> "MonomialPolynomial":
        p = cls(num_vars)
        if abs(c) >= PRUNE:
            p.terms[(0,) * num_vars] = float(c)
        return p

    @classmethod
    def variable(cls, num_vars: int, k: int) -> "MonomialPolynomial":
        e = [0] * num_vars
        e[k] = 1
        return cls(num_vars, {tuple(e): 1.0})

    @classmethod
    def linear(cls, coeffs: Iterable[float]) -> "MonomialPolynomial":
        coeffs = list(coeffs)
        d = len(coeffs)
        p = cls(d)
        for k, c in enumerate(coeffs):
            if abs(c) >= PRUNE:
                e = [0] * d
                e[k] = 1
                p.terms[tuple(e)] = float(c)
        return p

    def copy(self) -> "MonomialPolynomial":
        return MonomialPolynomial(self.num_vars, dict(self.terms))

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __len__(self) -> int:
        return len(self.terms)

    def _prune(self) -> "MonomialPolynomial":
        self.terms = {e: c for e, c in self.terms.items() if abs(c) >= PRUNE}
        return self

    def __add__(self, other: "MonomialPolynomial") -> "MonomialPolynomial":
        out = self.copy()
        for e, c in other.terms.items():
            out.terms[e] = out.terms.get(e, 0.0) + c
        return out._prune()

    def scale(self, s: float) -> "MonomialPolynomial":
        return MonomialPolynomial(self.num_vars, {e: s * c for e, c in self.terms.items()})._prune()

    def __mul__(self, other: "MonomialPolynomial") -> "MonomialPolynomial":
        acc: dict[Exponent, float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                acc[e] = acc.get(e, 0.0) + c1 * c2
        return MonomialPolynomial(self.num_vars, acc)._prune()

    def coefficient_sum(self) -> float:
        return math.fsum(abs(c) for c in self.terms.values())

    def evaluate(self, x) -> np.ndarray | float:
        """Evaluate at one point ``(d,)`` or a batch ``(P, d)`` with compensated summation."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        if not self.terms:
            out = np.zeros(X.shape[0])
        else:
            exps = np.array(list(self.terms), dtype=int)
            coeffs = np.array(list(self.terms.values()))
            monos = np.prod(X[:, None, :] ** exps[None, :, :], axis=-1) * coeffs
            out = np.array([math.fsum(row) for row in monos])
        return float(out[0]) if single else out

    def to_dict(self) -> dict:
        terms = sorted(self.terms.items(), key=lambda t: (sum(t[0]), tuple(-k for k in t[0])))
        return {
            "num_vars": self.num_vars,
            "terms": [{"exps": list(e), "coeff": c} for e, c in terms],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "MonomialPolynomial":
        p = cls(int(data["num_vars"]))
        for t in data["terms"]:
            p.terms[tuple(int(k) for k in t["exps"])] = float(t["coeff"])
        return p._prune()


def sigma_n_monomial(exp: HermiteExpansion, n: int) -> np.ndarray:
    """Monomial coefficients ``b_0..b_n`` of the truncated activation sigma_n."""
    return exp.sigma_n_monomial(n)


def monomial_count(num_vars: int, degree: int) -> int:
    return math.comb(num_vars + degree, num_vars)


def _compose(b: np.ndarray, p: MonomialPolynomial) -> MonomialPolynomial:
    """``sum_k b_k p^k``."""
    out = MonomialPolynomial.constant(p.num_vars, b[0])
    power = MonomialPolynomial.constant(p.num_vars, 1.0)
    for bk in b[1:]:
        power = power * p
        out = out + power.scale(bk)
    return out


def _linear_layer(W: np.ndarray, polys: list[MonomialPolynomial]) -> list[MonomialPolynomial]:
    out = []
    for row in W:
        acc = MonomialPolynomial(polys[0].num_vars)
        for wk, pk in zip(row, polys):
            if wk != 0.0:
                acc = acc + pk.scale(float(wk))
        out.append(acc)
    return out


def _guard(w: NetworkWeights, n: int) -> int:
    degree = n ** (w.arch.depth - 1)
    count = monomial_count(w.arch.dims[0], degree)
    if count > MONOMIAL_BUDGET:
        raise CombinatorialBlowup(
            f"expansion needs up to {count} monomials (d_0={w.arch.dims[0]}, degree={degree}); "
            f"budget is {MONOMIAL_BUDGET}"
        )
    return degree


def expand_shadow_traced(w: NetworkWeights, exp: HermiteExpansion, n: int):
    """Expand the shadow network; also return per-layer max coefficient sums ``M_j``.

    ``M[0] = 1`` for the input coordinates, ``M[j]`` for the activated hidden
    layer j (j = 1..i-1).
    """
    _guard(w, n)
    b = exp.sigma_n_monomial(n)
    d0 = w.arch.dims[0]
    polys = [MonomialPolynomial.variable(d0, k) for k in range(d0)]
    M = [1.0]
    last = len(w.matrices) - 1
    for j, W in enumerate(w.matrices):
        polys = _linear_layer(W, polys)
        if j < last:
            polys = [_compose(b, p) for p in polys]
            M.append(max(p.coefficient_sum() for p in polys))
    return polys, M


def expand_shadow(w: NetworkWeights, exp: HermiteExpansion, n: int) -> list[MonomialPolynomial]:
    return expand_shadow_traced(w, exp, n)[0]


def coefficient_sum_check(w: NetworkWeights, exp: HermiteExpansion, n: int) -> BoundReport:
    """Compare the largest output coefficient sum to ``(2 d_bar)^(4 n^(i-1))`` in log space."""
    i = w.arch.depth
    d_bar = w.arch.d_bar
    log_bound = 4 * n ** (i - 1) * math.log(2 * d_bar)
    meta = {"n": n, "i": i, "widths": list(w.arch.dims), "seed": w.seed, "log_space": True}
    if not clip_condition(w):
        # the clipped network is identically zero
        return BoundReport(
            name="coefficient_sum",
            measured=-math.inf,
            std_error=0.0,
            bound=log_bound,
            samples=1,
            metadata={**meta, "vacuous": True},
        )
    polys, M = expand_shadow_traced(w, exp, n)
    total = max(p.coefficient_sum() for p in polys)
    layer_bounds = [2 * sum(n**k for k in range(1, j + 1)) * math.log(2 * d_bar) for j in range(len(M))]
    meta.update(
        vacuous=False,
        coefficient_sum=total,
        max_degree=max(p.degree for p in polys),
        layer_log_sums=[math.log(m) if m > 0 else -math.inf for m in M],
        layer_log_bounds=layer_bounds,
    )
    return BoundReport(
        name="coefficient_sum",
        measured=math.log(total) if total > 0 else -math.inf,
        std_error=0.0,
        bound=log_bound,
        samples=1,
        metadata=meta,
    )
