"""Closed-form right-hand sides of the approximation bounds, plus the report type."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

__all__ = [
    "BoundReport",
    "bound_theorem_main",
    "bound_theorem_intro",
    "bound_theorem_intro_chained",
    "lambda_n",
    "log_lambda_n",
    "bound_single_layer",
    "single_layer_exact",
    "bound_adding_layer_normalized",
    "bound_main_lemma",
    "main_lemma_terms",
    "bound_contraction",
    "contraction_delta_max",
    "eps_bound_lipschitz",
    "eps_bound_sigmoid",
    "eps_bound_sigmoid_binomial",
    "eps_bound_derivative",
    "log_double_factorial",
]


def _jsonable(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):  # numpy scalars
        return _jsonable(v.item())
    return v


@dataclass
class BoundReport:
    """A measured quantity against its theoretical bound.

    With ``relation="le"`` the check passes when ``measured <= bound + 3 SE``;
    with ``relation="eq"`` it passes when ``|measured - bound| <= 3 SE``.
    """

    name: str
    measured: float
    std_error: float
    bound: float
    samples: int
    passed: bool | None = None
    metadata: dict = field(default_factory=dict)
    relation: str = "le"

    def __post_init__(self):
        if self.std_error < 0 or math.isnan(self.std_error):
            raise ValueError("std_error must be non-negative")
        if self.relation not in ("le", "eq"):
            raise ValueError(f"unknown relation {self.relation!r}")
        self.measured = float(self.measured)
        self.std_error = float(self.std_error)
        self.bound = float(self.bound)
        verdict = self._verdict()
        if self.passed is None:
            self.passed = verdict
        elif bool(self.passed) != verdict:
            raise ValueError("passed flag disagrees with the recorded numbers")

    def _verdict(self) -> bool:
        slack = 3.0 * self.std_error
        # float tolerance for deterministic (zero-SE) comparisons
        tol = 1e-12 * max(1.0, abs(self.bound))
        if self.relation == "eq":
            return abs(self.measured - self.bound) <= slack + tol
        return self.measured <= self.bound + slack + tol

    @property
    def margin(self) -> float:
        return self.bound - self.measured

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "name": self.name,
                "measured": self.measured,
                "std_error": self.std_error,
                "bound": self.bound,
                "samples": self.samples,
                "passed": bool(self.passed),
                "relation": self.relation,
                "metadata": self.metadata,
            }
        )


def _check_eps(eps_n: float) -> None:
    if not 0.0 <= eps_n <= 0.5:
        raise ValueError(f"eps_sigma(n) must lie in [0, 1/2], got {eps_n}")


def _check_L(L: float) -> None:
    if not L >= 0 or not math.isfinite(L):
        raise ValueError(f"Lipschitz constant must be finite and non-negative, got {L}")


def bound_theorem_main(i: int, n: int, L: float, eps_n: float) -> float:
    """``13 (L+1)^2 eps_n^(1/2^(i-1))``."""
    if i < 2:
        raise ValueError("the depth bound needs i >= 2")
    _check_eps(eps_n)
    _check_L(L)
    return 13.0 * (L + 1.0) ** 2 * eps_n ** (1.0 / 2 ** (i - 1))


def bound_theorem_intro(i: int, n: int, L: float, eps_n: float) -> float:
    """``14 (L+1)^2 eps_n^(1/2^(i-1))``; the extra unit covers the clipped polynomial."""
    if i < 2:
        raise ValueError("the depth bound needs i >= 2")
    _check_eps(eps_n)
    _check_L(L)
    return 14.0 * (L + 1.0) ** 2 * eps_n ** (1.0 / 2 ** (i - 1))


def bound_theorem_intro_chained(i: int, n: int, L: float) -> float:
    """``14 (L+1)^3 / n^(1/2^(i-1))``, from eps_n <= L^2/n."""
    if i < 2 or n < 1:
        raise ValueError("needs i >= 2 and n >= 1")
    _check_L(L)
    return 14.0 * (L + 1.0) ** 3 / n ** (1.0 / 2 ** (i - 1))


def log_double_factorial(m: int) -> float:
    """``log(m!!)`` for odd ``m >= -1``."""
    if m < -1 or m % 2 == 0:
        raise ValueError("only odd double factorials are supported")
    if m <= 1:
        return 0.0
    # (2k-1)!! = (2k)! / (2^k k!)
    k = (m + 1) // 2
    return math.lgamma(2 * k + 1) - k * math.log(2.0) - math.lgamma(k + 1)


def log_lambda_n(n: int) -> float:
    if n < 1:
        raise ValueError("lambda(n) needs n >= 1")
    return (2 * n + 1) * math.log(2.0) + 0.25 * (math.log(9.0) + log_double_factorial(4 * n - 1))


def lambda_n(n: int) -> float:
    """``2^(2n+1) (9 (4n-1)!!)^(1/4)``, computed in log space."""
    return math.exp(log_lambda_n(n))


def bound_single_layer(eps_n: float) -> float:
    _check_eps(eps_n)
    return math.sqrt(2.0 * eps_n)


def single_layer_exact(eps_n: float) -> float:
    """``sqrt(2 (1 - sqrt(1 - eps_n)))``, the exact root-mean-square single-layer gap."""
    _check_eps(eps_n)
    return math.sqrt(2.0 * (1.0 - math.sqrt(1.0 - eps_n)))


def bound_adding_layer_normalized(n: int, L: float, eps: float, eps_n: float) -> float:
    _check_eps(eps_n)
    _check_L(L)
    if eps < 0:
        raise ValueError("perturbation size must be non-negative")
    return math.sqrt(2.0 * eps_n) + math.sqrt(2.0 * L * L / (1.0 - eps_n) * eps)


def main_lemma_terms(n: int, L: float, eps: float, delta: float, eps_n: float) -> dict[str, float]:
    _check_eps(eps_n)
    _check_L(L)
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"delta must lie in [0, 1/2], got {delta}")
    if eps < 0:
        raise ValueError("perturbation size must be non-negative")
    return {
        "lipschitz_shift": 2.0 * L * delta,
        "truncation": math.sqrt(2.0 * eps_n),
        "perturbation": math.sqrt(6.0 * L * L / (1.0 - eps_n) * eps),
        "projection": 2.0 * lambda_n(n) * delta,
    }


def bound_main_lemma(n: int, L: float, eps: float, delta: float, eps_n: float) -> float:
    """``2 L delta + sqrt(2 eps_n) + sqrt(6 L^2 eps / (1 - eps_n)) + 2 lambda(n) delta``."""
    t = main_lemma_terms(n, L, eps, delta, eps_n)
    return math.fsum(t.values())


def bound_contraction(i: int, n: int, L: float, eps_n: float) -> float:
    """``12 (L+1)^2 eps_n^(2^-i)``."""
    if i < 0:
        raise ValueError("depth must be non-negative")
    _check_eps(eps_n)
    _check_L(L)
    return 12.0 * (L + 1.0) ** 2 * eps_n ** (2.0 ** -i)


def contraction_delta_max(n: int, L: float, eps_n: float) -> float:
    """Largest admissible truncation radius (strict): ``sqrt(eps_n) / (2L + 2 lambda(n))``."""
    _check_eps(eps_n)
    _check_L(L)
    return math.sqrt(eps_n) / (2.0 * L + 2.0 * lambda_n(n))


def eps_bound_lipschitz(n: int, L: float) -> float:
    if n < 1:
        raise ValueError("needs n >= 1")
    _check_L(L)
    return L * L / n


def eps_bound_sigmoid(n: int) -> float:
    if n < 0:
        raise ValueError("needs n >= 0")
    return 2.0**-n


def eps_bound_sigmoid_binomial(n: int, k: int | None = None) -> float:
    """``1 / (k C(n+1, k))``, by default at ``k = ceil((n+1)/2)``."""
    if n < 0:
        raise ValueError("needs n >= 0")
    if k is None:
        k = -(-(n + 1) // 2)
    if not 1 <= k <= n + 1:
        raise ValueError("needs 1 <= k <= n+1")
    return 1.0 / (k * math.comb(n + 1, k))


def eps_bound_derivative(n: int, k: int, norm_sigma_k_sq: float) -> float:
    """``(n+1-k)! / (n+1)! * ||sigma^(k)||^2``."""
    if not 1 <= k <= n + 1:
        raise ValueError("needs 1 <= k <= n+1")
    if norm_sigma_k_sq < 0:
        raise ValueError("squared norm must be non-negative")
    return norm_sigma_k_sq / math.perm(n + 1, k)
