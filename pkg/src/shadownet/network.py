"""Random Xavier networks and their exact, shadow, clipped and truncated forward passes.

Vectors live on the last axis, so every pass accepts a single input of shape
``(d_0,)`` or a batch of shape ``(P, d_0)``.  Norms and inner products are
normalized: ``||x|| = sqrt(sum x_k^2 / d)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .activations import ActivationSpec, HermiteExpansion

__all__ = [
    "GAUSSIAN_ALGORITHM",
    "Architecture",
    "NetworkWeights",
    "norm",
    "inner",
    "sample_sphere",
    "sample_weights",
    "forward",
    "shadow_forward",
    "clipped_shadow_forward",
    "truncated_forward",
]

# Recorded in every export so replayed runs know which sampler produced the weights.
GAUSSIAN_ALGORITHM = "numpy.random.Generator(PCG64).standard_normal (ziggurat)"


def norm(x, axis: int = -1):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.mean(x * x, axis=axis))


def inner(x, y, axis: int = -1):
    return np.mean(np.asarray(x, dtype=float) * np.asarray(y, dtype=float), axis=axis)


def sample_sphere(d: int, size: int | None, rng: np.random.Generator) -> np.ndarray:
    """Uniform points on the normalized unit sphere (Gaussian draw + renormalization)."""
    shape = (d,) if size is None else (size, d)
    g = rng.standard_normal(shape)
    return g / norm(g)[..., None]


@dataclass(frozen=True)
class Architecture:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 2:
            raise ValueError("an architecture needs at least an input and one layer")
        if any(d < 1 for d in dims):
            raise ValueError(f"all widths must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def depth(self) -> int:
        return len(self.dims) - 1

    @property
    def d_bar(self) -> int:
        return sum(self.dims)


@dataclass(frozen=True, eq=False)
class NetworkWeights:
    arch: Architecture
    matrices: tuple[np.ndarray, ...]
    seed: int

    def to_dict(self) -> dict:
        return {"arch": list(self.arch.dims), "seed": int(self.seed), "sampler": GAUSSIAN_ALGORITHM}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkWeights":
        return sample_weights(Architecture(tuple(data["arch"])), int(data["seed"]))

    @classmethod
    def from_json(cls, text: str) -> "NetworkWeights":
        return cls.from_dict(json.loads(text))

    def max_entry(self) -> float:
        return max(float(W.max()) for W in self.matrices)


def sample_weights(arch: Architecture | Sequence[int], seed: int) -> NetworkWeights:
    """Xavier weights: entries of ``W^j`` are i.i.d. N(0, 1/d_{j-1})."""
    if not isinstance(arch, Architecture):
        arch = Architecture(tuple(arch))
    rng = np.random.default_rng(seed)
    mats = []
    for d_in, d_out in zip(arch.dims[:-1], arch.dims[1:]):
        W = rng.standard_normal((d_out, d_in)) / math.sqrt(d_in)
        W.setflags(write=False)
        mats.append(W)
    return NetworkWeights(arch=arch, matrices=tuple(mats), seed=int(seed))


def _check_input(w: NetworkWeights, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != w.arch.dims[0]:
        raise ValueError(f"input has dimension {x.shape[-1]}, network expects {w.arch.dims[0]}")
    return x


def forward(w: NetworkWeights, act: ActivationSpec, x):
    """Return ``(phi_layers, psi_layers)`` for j = 1..i; the network output is ``phi_layers[-1]``."""
    psi = _check_input(w, x)
    phis, psis = [], []
    for W in w.matrices:
        phi = psi @ W.T
        psi = act.eval(phi)
        phis.append(phi)
        psis.append(psi)
    return phis, psis


def shadow_forward(w: NetworkWeights, exp: HermiteExpansion, n: int, x):
    """Shadow pass: sigma_n on layers 1..i-1 and a plain linear last layer.

    ``psi_layers[-1]`` equals ``phi_layers[-1]``.
    """
    exp.check_degree(n)
    psi = _check_input(w, x)
    phis, psis = [], []
    last = len(w.matrices) - 1
    for j, W in enumerate(w.matrices):
        phi = psi @ W.T
        psi = phi if j == last else exp.sigma_n(n, phi)
        phis.append(phi)
        psis.append(psi)
    return phis, psis


def clip_condition(w: NetworkWeights) -> bool:
    """True when every weight entry is at most d_bar."""
    return w.max_entry() <= w.arch.d_bar


def clipped_shadow_forward(w: NetworkWeights, exp: HermiteExpansion, n: int, x):
    phis, _ = shadow_forward(w, exp, n, x)
    out = phis[-1]
    return out if clip_condition(w) else np.zeros_like(out)


def truncated_forward(w: NetworkWeights, exp: HermiteExpansion, n: int, x, delta: float):
    """Truncated activated passes ``(Psi^i(x, delta), Psi^{i,n}(x, delta), clipped)``.

    Every layer, the last included, is activated (sigma for the exact pass,
    sigma_n for the shadow pass).  A row is zeroed in both passes when some
    layer j < i has ``|1 - ||Psi^j||| > delta`` in either pass.  ``clipped``
    is a bool for a single input and a boolean array for a batch.
    """
    if not 0.0 < delta <= 0.5:
        raise ValueError(f"delta must lie in (0, 1/2], got {delta}")
    exp.check_degree(n)
    x = _check_input(w, x)
    act = exp.activation
    psi, psi_n = x, x
    bad = np.zeros(x.shape[:-1], dtype=bool)
    last = len(w.matrices) - 1
    for j, W in enumerate(w.matrices):
        psi = act.eval(psi @ W.T)
        psi_n = exp.sigma_n(n, psi_n @ W.T)
        if j < last:
            bad |= np.abs(1.0 - norm(psi)) > delta
            bad |= np.abs(1.0 - norm(psi_n)) > delta
    keep = (~bad)[..., None]
    psi = np.where(keep, psi, 0.0)
    psi_n = np.where(keep, psi_n, 0.0)
    clipped = bool(bad) if bad.ndim == 0 else bad
    return psi, psi_n, clipped
