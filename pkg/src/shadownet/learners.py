"""Learners for random-network teachers: monomial ridge regression and ReLU SGD."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple
from itertools import combinations_with_replacement

import numpy as np
import scipy.linalg

from .activations import ActivationSpec, HermiteExpansion
from .errors import DivergenceError, FeatureBlowup, SingularSystem
from .harness import mean_se
from .network import NetworkWeights, forward, norm, sample_sphere, shadow_forward

__all__ = [
    "Dataset",
    "LearnedModel",
    "generate_dataset",
    "monomial_exponents",
    "monomial_features",
    "fit_poly_regression",
    "fit_sgd_relu",
    "evaluate",
    "Evaluation",
    "FEATURE_BUDGET",
]

FEATURE_BUDGET = 2 * 10**5


@dataclass(frozen=True, eq=False)
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    teacher_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.inputs) != len(self.targets):
            raise ValueError("inputs and targets must have equal lengths")

    def __len__(self) -> int:
        return len(self.inputs)


def generate_dataset(
    teacher: NetworkWeights,
    act: ActivationSpec | HermiteExpansion,
    num_samples: int,
    seed: int,
    distribution: str = "uniform_sphere",
    shadow_degree: int | None = None,
) -> Dataset:
    """Sample sphere inputs and label them with the teacher output ``Phi^i(x)``.

    Passing a :class:`HermiteExpansion` together with ``shadow_degree`` labels
    with the shadow network instead, which is an exact polynomial teacher.
    """
    if distribution != "uniform_sphere":
        raise ValueError(f"unsupported input distribution {distribution!r}")
    rng = np.random.default_rng(seed)
    X = sample_sphere(teacher.arch.dims[0], num_samples, rng)
    if shadow_degree is not None:
        if not isinstance(act, HermiteExpansion):
            raise TypeError("shadow labels need a HermiteExpansion")
        phis, _ = shadow_forward(teacher, act, shadow_degree, X)
        name = f"{act.activation.name}/shadow{shadow_degree}"
    else:
        spec = act.activation if isinstance(act, HermiteExpansion) else act
        phis, _ = forward(teacher, spec, X)
        name = spec.name
    meta = {"arch": list(teacher.arch.dims), "seed": teacher.seed, "activation": name, "sample_seed": seed}
    return Dataset(inputs=X, targets=phis[-1], teacher_meta=meta)


@lru_cache(maxsize=32)
def monomial_exponents(num_vars: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """All exponent vectors of total degree <= ``degree``, graded lexicographic."""
    out = []
    for deg in range(degree + 1):
        for combo in combinations_with_replacement(range(num_vars), deg):
            e = [0] * num_vars
            for k in combo:
                e[k] += 1
            out.append(tuple(e))
    return tuple(out)


def monomial_features(X: np.ndarray, degree: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = X.shape[1]
    count = math.comb(d + degree, d)
    if count > FEATURE_BUDGET:
        raise FeatureBlowup(f"{count} monomial features exceed the budget of {FEATURE_BUDGET}")
    # build by multiplying lower-degree columns so each column costs one product
    cols = {(0,) * d: np.ones(X.shape[0])}
    for e in monomial_exponents(d, degree)[1:]:
        k = next(j for j, v in enumerate(e) if v)
        parent = list(e)
        parent[k] -= 1
        cols[e] = cols[tuple(parent)] * X[:, k]
    return np.column_stack([cols[e] for e in monomial_exponents(d, degree)])


@dataclass(eq=False)
class LearnedModel:
    kind: str
    params: dict
    meta: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "poly_regression":
            return monomial_features(X, self.meta["degree"]) @ self.params["coef"]
        if self.kind == "sgd_relu":
            p = self.params
            H = np.maximum(X @ p["W1"].T + p["b1"], 0.0)
            return H @ p["W2"].T + p["b2"]
        raise ValueError(f"unknown model kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": {k: np.asarray(v).tolist() for k, v in self.params.items()},
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "LearnedModel":
        params = {k: np.asarray(v, dtype=float) for k, v in data["params"].items()}
        return cls(kind=data["kind"], params=params, meta=dict(data["meta"]))


def fit_poly_regression(data: Dataset, degree: int, ridge: float = 1e-8) -> LearnedModel:
    """Ridge regression on all monomials of total degree <= ``degree``.

    Solved as a least-squares problem on the ridge-augmented design, which
    avoids squaring the condition number as the normal equations would.
    """
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    F = monomial_features(data.inputs, degree)
    m, p = F.shape
    if m < p:
        warnings.warn(f"{m} samples for {p} features; the fit is underdetermined", stacklevel=2)
    Y = np.asarray(data.targets, dtype=float)
    if ridge > 0:
        A = np.vstack([F, math.sqrt(ridge) * np.eye(p)])
        rhs = np.vstack([Y, np.zeros((p, Y.shape[1]))])
    else:
        A, rhs = F, Y
    coef, _, rank, _ = scipy.linalg.lstsq(A, rhs, lapack_driver="gelsd")
    if ridge == 0 and rank < p:
        raise SingularSystem(f"design matrix has rank {rank} < {p} features; use a positive ridge")
    return LearnedModel(
        kind="poly_regression",
        params={"coef": coef},
        meta={"degree": degree, "ridge": ridge, "num_features": p, "num_vars": int(data.inputs.shape[1])},
    )


def fit_sgd_relu(
    data: Dataset,
    width: int = 512,
    steps: int = 20_000,
    lr: float = 0.01,
    batch: int = 32,
    seed: int = 0,
) -> LearnedModel:
    """Plain minibatch SGD on squared loss for ``x -> W2 relu(W1 x + b1) + b2``.

    Both layers start from Xavier draws (variance 1/fan_in), biases at zero.
    """
    if width < 1 or steps < 1 or batch < 1:
        raise ValueError("width, steps and batch must be positive")
    X = np.asarray(data.inputs, dtype=float)
    Y = np.asarray(data.targets, dtype=float)
    m, d = X.shape
    k = Y.shape[1]
    rng = np.random.default_rng(seed)
    W1 = rng.standard_normal((width, d)) / math.sqrt(d)
    b1 = np.zeros(width)
    W2 = rng.standard_normal((k, width)) / math.sqrt(width)
    b2 = np.zeros(k)

    def full_loss():
        H = np.maximum(X @ W1.T + b1, 0.0)
        R = H @ W2.T + b2 - Y
        return float(np.mean(np.sum(R * R, axis=1)))

    initial = full_loss()
    for _ in range(steps):
        idx = rng.integers(0, m, size=batch)
        xb, yb = X[idx], Y[idx]
        pre = xb @ W1.T + b1
        h = np.maximum(pre, 0.0)
        r = h @ W2.T + b2 - yb
        # gradients of the minibatch mean of ||r||^2
        g_out = 2.0 * r / batch
        gW2 = g_out.T @ h
        gb2 = g_out.sum(axis=0)
        g_h = (g_out @ W2) * (pre > 0)
        gW1 = g_h.T @ xb
        gb1 = g_h.sum(axis=0)
        W2 -= lr * gW2
        b2 -= lr * gb2
        W1 -= lr * gW1
        b1 -= lr * gb1
        if not np.isfinite(r).all() or float(np.mean(r * r)) > 1e6:
            raise DivergenceError(f"SGD diverged (lr={lr}, width={width})")
    final = full_loss()
    if not math.isfinite(final) or final > 1e6:
        raise DivergenceError(f"SGD diverged (final loss {final:g})")
    return LearnedModel(
        kind="sgd_relu",
        params={"W1": W1, "b1": b1, "W2": W2, "b2": b2},
        meta={
            "width": width,
            "steps": steps,
            "lr": lr,
            "batch": batch,
            "seed": seed,
            "initial_loss": initial,
            "final_loss": final,
        },
    )


class Evaluation(NamedTuple):
    mean_error: float
    se: float
    rmse: float

    def __float__(self) -> float:
        return self.mean_error


def evaluate(model: LearnedModel, test: Dataset) -> Evaluation:
    """Mean normalized error ``||y - h(x)||`` over the test set, with SE and RMSE."""
    pred = model.predict(test.inputs)
    Y = np.asarray(test.targets, dtype=float)
    err = norm(Y - pred)
    mean, se = mean_se(err) if len(err) > 1 else (float(err[0]), 0.0)
    return Evaluation(mean, se, math.sqrt(math.fsum(err**2) / len(err)))
