"""Monte Carlo estimators for the approximation lemmas, reported against their bounds.

Seeding: trial ``k`` of a run with base seed ``s`` uses
``SeedSequence((s, 0, k))`` for its weights; the shared input points use
``SeedSequence((s, 1, 0))`` and per-input perturbation directions use
``SeedSequence((s, 2, 0))``.  Reports are therefore replayable from
``(config, base_seed)`` alone, whatever order trials are evaluated in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from . import bounds as B
from .activations import HermiteExpansion
from .bounds import BoundReport
from .network import (
    Architecture,
    forward,
    inner,
    norm,
    sample_sphere,
    sample_weights,
    shadow_forward,
    truncated_forward,
)

__all__ = [
    "McConfig",
    "trial_seed",
    "mean_se",
    "gaussian_pair_expectation",
    "verify_vec_to_scalar",
    "verify_single_layer",
    "verify_single_layer_identity",
    "verify_adding_layer_normalized",
    "project_pair",
    "verify_projecting_dont_hurt",
    "verify_main_lemma",
    "verify_theorem_main",
    "verify_contraction",
    "estimate_clip_probability",
    "clip_probability_sweep",
    "verify_dual_kernel",
]

_WEIGHT_STREAM, _INPUT_STREAM, _DIRECTION_STREAM = 0, 1, 2


@dataclass(frozen=True)
class McConfig:
    num_weight_samples: int = 500
    num_input_samples: int = 20
    base_seed: int = 0
    input_distribution: str = "uniform_sphere"
    points: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.num_weight_samples < 2:
            raise ValueError("need at least two weight samples for a standard error")
        if self.input_distribution not in ("uniform_sphere", "fixed_point", "custom"):
            raise ValueError(f"unknown input distribution {self.input_distribution!r}")
        if self.input_distribution != "uniform_sphere" and not len(self.points):
            raise ValueError(f"{self.input_distribution} inputs need explicit points")
        if self.input_distribution == "uniform_sphere" and self.num_input_samples < 1:
            raise ValueError("need at least one input point")

    def inputs(self, d: int) -> np.ndarray:
        if self.input_distribution == "uniform_sphere":
            rng = np.random.default_rng(np.random.SeedSequence((self.base_seed, _INPUT_STREAM, 0)))
            return sample_sphere(d, self.num_input_samples, rng)
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[-1] != d:
            raise ValueError(f"input points have dimension {pts.shape[-1]}, expected {d}")
        return pts

    def direction_rng(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence((self.base_seed, _DIRECTION_STREAM, 0)))

    def weight_seeds(self) -> list[int]:
        return [trial_seed(self.base_seed, k) for k in range(self.num_weight_samples)]

    def scaled(self, factor: float) -> "McConfig":
        return McConfig(
            num_weight_samples=max(2, int(round(self.num_weight_samples * factor))),
            num_input_samples=max(1, int(round(self.num_input_samples * factor))),
            base_seed=self.base_seed,
            input_distribution=self.input_distribution,
            points=self.points,
        )


def trial_seed(base_seed: int, index: int) -> int:
    """64-bit seed for trial ``index``, mixed by numpy's SeedSequence hash."""
    ss = np.random.SeedSequence((int(base_seed), _WEIGHT_STREAM, int(index)))
    return int(ss.generate_state(1, np.uint64)[0])


def mean_se(values: Sequence[float]) -> tuple[float, float]:
    """Mean and standard error (sample std / sqrt(count)) with compensated sums."""
    v = [float(x) for x in values]
    k = len(v)
    if k < 2:
        raise ValueError("need at least two samples")
    m = math.fsum(v) / k
    var = math.fsum((x - m) ** 2 for x in v) / (k - 1)
    return m, math.sqrt(var / k)


def _xavier(rng: np.random.Generator, d_out: int, d_in: int) -> np.ndarray:
    return rng.standard_normal((d_out, d_in)) / math.sqrt(d_in)


def _per_trial(cfg: McConfig, fn: Callable[[np.random.Generator], float]) -> list[float]:
    return [fn(np.random.default_rng(s)) for s in cfg.weight_seeds()]


def _meta(cfg: McConfig, **extra) -> dict:
    return {
        "base_seed": cfg.base_seed,
        "weight_samples": cfg.num_weight_samples,
        "input_samples": cfg.num_input_samples,
        **extra,
    }


def _orthonormal_direction(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Unit vectors (normalized norm) orthogonal to each row of ``x``."""
    g = rng.standard_normal(x.shape)
    g = g - (inner(g, x) / inner(x, x))[..., None] * x
    return g / norm(g)[..., None]


def _rotate(x: np.ndarray, dist: float, rng: np.random.Generator) -> np.ndarray:
    """Points on the sphere at normalized distance ``dist`` from each row of ``x``."""
    if dist == 0:
        return x.copy()
    if not 0 < dist <= 2:
        raise ValueError("sphere distances lie in [0, 2]")
    theta = 2.0 * math.asin(dist / 2.0)
    u = _orthonormal_direction(x, rng)
    return math.cos(theta) * x + math.sin(theta) * u


def gaussian_pair_expectation(h: Callable, var_x: float, cov: float, var_y: float, m: int = 120) -> float:
    """``E h(X, Y)`` for a centered Gaussian pair, by product Gauss-Hermite quadrature."""
    z, w = hermegauss(m)
    w = w / math.sqrt(2.0 * math.pi)
    Z1, Z2 = np.meshgrid(z, z, indexing="ij")
    Wt = np.outer(w, w)
    sx = math.sqrt(max(var_x, 0.0))
    if sx > 0:
        c = cov / sx
        sy_perp = math.sqrt(max(var_y - c * c, 0.0))
    else:
        c, sy_perp = 0.0, math.sqrt(max(var_y, 0.0))
    X = sx * Z1
    Y = c * Z1 + sy_perp * Z2
    return float(np.sum(Wt * h(X, Y)))


def verify_vec_to_scalar(f: Callable, g: Callable, x, y, d2: int, cfg: McConfig) -> BoundReport:
    """Monte Carlo ``E_W ||f(Wx) - g(Wy)||^2`` against the 2-D Gaussian expectation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be vectors of the same dimension")
    d = x.shape[0]

    def trial(rng):
        W = _xavier(rng, d2, d)
        return float(np.mean((f(W @ x) - g(W @ y)) ** 2))

    m, se = mean_se(_per_trial(cfg, trial))
    exact = gaussian_pair_expectation(
        lambda X, Y: (f(X) - g(Y)) ** 2, float(inner(x, x)), float(inner(x, y)), float(inner(y, y))
    )
    return BoundReport(
        name="vec_to_scalar",
        measured=m,
        std_error=se,
        bound=exact,
        samples=cfg.num_weight_samples,
        relation="eq",
        metadata=_meta(cfg, d=d, d2=d2),
    )


def _single_layer_samples(exp: HermiteExpansion, n: int, d: int, d2: int, cfg: McConfig):
    exp.check_degree(n)
    X = cfg.inputs(d)
    act = exp.activation
    lin, sq = [], []
    for s in cfg.weight_seeds():
        W = _xavier(np.random.default_rng(s), d2, d)
        Z = X @ W.T
        diff = act.eval(Z) - exp.sigma_n(n, Z)
        r2 = np.mean(diff * diff, axis=-1)
        lin.append(math.fsum(np.sqrt(r2)) / len(r2))
        sq.append(math.fsum(r2) / len(r2))
    return lin, sq


def verify_single_layer(exp: HermiteExpansion, n: int, d: int, d2: int, cfg: McConfig) -> BoundReport:
    lin, sq = _single_layer_samples(exp, n, d, d2, cfg)
    m, se = mean_se(lin)
    eps_n = float(exp.eps[n])
    return BoundReport(
        name="single_layer",
        measured=m,
        std_error=se,
        bound=B.bound_single_layer(eps_n),
        samples=cfg.num_weight_samples,
        metadata=_meta(
            cfg,
            n=n,
            widths=[d, d2],
            activation=exp.activation.name,
            eps_n=eps_n,
            sharp_bound=B.single_layer_exact(eps_n),
        ),
    )


def verify_single_layer_identity(exp: HermiteExpansion, n: int, d: int, d2: int, cfg: McConfig) -> BoundReport:
    """Mean squared single-layer gap against ``2 (1 - sqrt(1 - eps_n))`` (equality)."""
    _, sq = _single_layer_samples(exp, n, d, d2, cfg)
    m, se = mean_se(sq)
    eps_n = float(exp.eps[n])
    return BoundReport(
        name="single_layer_identity",
        measured=m,
        std_error=se,
        bound=B.single_layer_exact(eps_n) ** 2,
        samples=cfg.num_weight_samples,
        relation="eq",
        metadata=_meta(cfg, n=n, widths=[d, d2], activation=exp.activation.name, eps_n=eps_n),
    )


def verify_adding_layer_normalized(
    exp: HermiteExpansion, n: int, eps_perturb: float, d: int, d2: int, cfg: McConfig
) -> BoundReport:
    """``E_W ||sigma(Wx) - sigma_n(W(x+v))||`` with x, x+v on the sphere and ``||v|| = eps``."""
    exp.check_degree(n)
    X = cfg.inputs(d)
    Y = _rotate(X, eps_perturb, cfg.direction_rng())
    act = exp.activation

    def trial(rng):
        W = _xavier(rng, d2, d)
        r = norm(act.eval(X @ W.T) - exp.sigma_n(n, Y @ W.T))
        return math.fsum(r) / len(r)

    m, se = mean_se(_per_trial(cfg, trial))
    eps_n = float(exp.eps[n])
    L = act.lipschitz_L
    return BoundReport(
        name="adding_layer_normalized",
        measured=m,
        std_error=se,
        bound=B.bound_adding_layer_normalized(n, L, eps_perturb, eps_n),
        samples=cfg.num_weight_samples,
        metadata=_meta(
            cfg,
            n=n,
            widths=[d, d2],
            activation=act.name,
            eps_n=eps_n,
            eps_perturb=eps_perturb,
            max_perturbation=float(np.max(norm(Y - X))),
        ),
    )


def project_pair(x1, x2):
    """Jointly project two points onto the normalized unit sphere.

    Returns ``(x1~, x2~)`` with ``||x_k - x_k~|| <= 2 d(x_k, S)`` and
    ``||x1~ - x2~|| <= 3 ||x1 - x2||``, where the projection onto the sphere
    is radial normalization.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    n1, n2 = float(norm(x1)), float(norm(x2))
    if n1 == 0 or n2 == 0:
        raise ValueError("cannot project the zero vector onto the sphere")
    p1, p2 = x1 / n1, x2 / n2
    dist1, dist2 = abs(n1 - 1.0), abs(n2 - 1.0)
    swapped = dist1 > dist2
    if swapped:
        x1, x2, p1, p2, dist1, dist2 = x2, x1, p2, p1, dist2, dist1
    if dist2 <= float(norm(x1 - x2)):
        t1, t2 = p1, p2
    else:
        t1 = t2 = p1
    return (t2, t1) if swapped else (t1, t2)


def verify_projecting_dont_hurt(
    exp: HermiteExpansion, n: int, eps_perturb: float, d: int, d2: int, cfg: McConfig
) -> tuple[BoundReport, BoundReport]:
    """Perturbation stability of sigma (vs ``L eps``) and sigma_n (vs ``lambda(n) eps``)."""
    if not 0 <= eps_perturb <= 1:
        raise ValueError("perturbation size must lie in [0, 1]")
    exp.check_degree(n)
    X = cfg.inputs(d)
    rng_v = cfg.direction_rng()
    V = rng_v.standard_normal(X.shape)
    V = eps_perturb * V / norm(V)[..., None]
    Y = X + V
    act = exp.activation
    exact_vals, shadow_vals = [], []
    for s in cfg.weight_seeds():
        W = _xavier(np.random.default_rng(s), d2, d)
        ZX, ZY = X @ W.T, Y @ W.T
        r = norm(act.eval(ZX) - act.eval(ZY))
        rn = norm(exp.sigma_n(n, ZX) - exp.sigma_n(n, ZY))
        exact_vals.append(math.fsum(r) / len(r))
        shadow_vals.append(math.fsum(rn) / len(rn))
    meta = _meta(cfg, n=n, widths=[d, d2], activation=act.name, eps_perturb=eps_perturb)
    m, se = mean_se(exact_vals)
    mn, sen = mean_se(shadow_vals)
    return (
        BoundReport("projecting_sigma", m, se, act.lipschitz_L * eps_perturb, cfg.num_weight_samples, metadata=meta),
        BoundReport(
            "projecting_sigma_n", mn, sen, B.lambda_n(n) * eps_perturb, cfg.num_weight_samples, metadata=dict(meta)
        ),
    )


def verify_main_lemma(
    exp: HermiteExpansion, n: int, eps_perturb: float, delta: float, d: int, d2: int, cfg: McConfig
) -> BoundReport:
    """Off-sphere version: ``||x|| = ||x+v|| = 1 + delta`` and ``||v|| = eps``."""
    exp.check_degree(n)
    X0 = cfg.inputs(d)
    X1 = _rotate(X0, eps_perturb / (1.0 + delta), cfg.direction_rng())
    X, Y = (1.0 + delta) * X0, (1.0 + delta) * X1
    act = exp.activation

    def trial(rng):
        W = _xavier(rng, d2, d)
        r = norm(act.eval(X @ W.T) - exp.sigma_n(n, Y @ W.T))
        return math.fsum(r) / len(r)

    m, se = mean_se(_per_trial(cfg, trial))
    eps_n = float(exp.eps[n])
    L = act.lipschitz_L
    terms = B.main_lemma_terms(n, L, eps_perturb, delta, eps_n)
    return BoundReport(
        name="main_lemma",
        measured=m,
        std_error=se,
        bound=B.bound_main_lemma(n, L, eps_perturb, delta, eps_n),
        samples=cfg.num_weight_samples,
        metadata=_meta(
            cfg,
            n=n,
            widths=[d, d2],
            activation=act.name,
            eps_n=eps_n,
            eps_perturb=eps_perturb,
            delta=delta,
            terms=terms,
            dominant_term=max(terms, key=terms.get),
        ),
    )


def verify_theorem_main(exp: HermiteExpansion, n: int, arch: Architecture | Sequence[int], cfg: McConfig) -> BoundReport:
    """``E_W ||Phi^i(x) - Phi^{i,n}(x)||`` against ``13 (L+1)^2 eps_n^(1/2^(i-1))``."""
    if not isinstance(arch, Architecture):
        arch = Architecture(tuple(arch))
    i = arch.depth
    if i < 2:
        raise ValueError("the depth bound needs i >= 2")
    exp.check_degree(n)
    X = cfg.inputs(arch.dims[0])
    act = exp.activation

    def trial_from_seed(seed):
        w = sample_weights(arch, seed)
        phi, _ = forward(w, act, X)
        phi_n, _ = shadow_forward(w, exp, n, X)
        r = norm(phi[-1] - phi_n[-1])
        return math.fsum(r) / len(r)

    vals = [trial_from_seed(s) for s in cfg.weight_seeds()]
    m, se = mean_se(vals)
    eps_n = float(exp.eps[n])
    L = act.lipschitz_L
    return BoundReport(
        name=f"theorem_depth{i}",
        measured=m,
        std_error=se,
        bound=B.bound_theorem_main(i, n, L, eps_n),
        samples=cfg.num_weight_samples,
        metadata=_meta(
            cfg,
            n=n,
            i=i,
            widths=list(arch.dims),
            activation=act.name,
            eps_n=eps_n,
            intro_bound=B.bound_theorem_intro(i, n, L, eps_n),
            chained_bound=B.bound_theorem_intro_chained(i, n, L),
            depth2_sharp_bound=B.bound_single_layer(eps_n) if i == 2 else None,
        ),
    )


def verify_contraction(
    exp: HermiteExpansion,
    n: int,
    arch: Architecture | Sequence[int],
    cfg: McConfig,
    delta: float | None = None,
) -> BoundReport:
    """Truncated activated passes against ``12 (L+1)^2 eps_n^(2^-i)``.

    ``delta`` defaults to just inside the admissible radius.  The report flags
    ``delta_underflow`` when more than half of the runs are truncated, in
    which case the measured gap is dominated by zeroed outputs.
    """
    if not isinstance(arch, Architecture):
        arch = Architecture(tuple(arch))
    exp.check_degree(n)
    eps_n = float(exp.eps[n])
    L = exp.activation.lipschitz_L
    delta_max = B.contraction_delta_max(n, L, eps_n)
    if delta is None:
        # eps_n = 0 leaves no admissible radius; fall back to the widest one
        delta = 0.999 * delta_max if delta_max > 0 else 0.5
    admissible = delta < delta_max
    X = cfg.inputs(arch.dims[0])
    vals, clip = [], []
    for s in cfg.weight_seeds():
        w = sample_weights(arch, s)
        psi, psi_n, clipped = truncated_forward(w, exp, n, X, delta)
        r = norm(psi - psi_n)
        vals.append(math.fsum(r) / len(r))
        clip.append(float(np.mean(clipped)))
    m, se = mean_se(vals)
    clip_rate = math.fsum(clip) / len(clip)
    return BoundReport(
        name=f"contraction_depth{arch.depth}",
        measured=m,
        std_error=se,
        bound=B.bound_contraction(arch.depth, n, L, eps_n),
        samples=cfg.num_weight_samples,
        metadata=_meta(
            cfg,
            n=n,
            i=arch.depth,
            widths=list(arch.dims),
            activation=exp.activation.name,
            eps_n=eps_n,
            delta=delta,
            delta_max=delta_max,
            admissible=admissible,
            clip_rate=clip_rate,
            delta_underflow=clip_rate > 0.5,
        ),
    )


def estimate_clip_probability(
    exp: HermiteExpansion, n: int, arch: Architecture | Sequence[int], delta: float, cfg: McConfig
) -> BoundReport:
    """Empirical frequency of the truncation event over weight seeds and inputs.

    There is no closed-form target; the report's bound is the trivial 1.
    """
    if not isinstance(arch, Architecture):
        arch = Architecture(tuple(arch))
    exp.check_degree(n)
    X = cfg.inputs(arch.dims[0])
    freq = []
    for s in cfg.weight_seeds():
        _, _, clipped = truncated_forward(sample_weights(arch, s), exp, n, X, delta)
        freq.append(float(np.mean(clipped)))
    m, se = mean_se(freq)
    return BoundReport(
        name="clip_probability",
        measured=m,
        std_error=se,
        bound=1.0,
        samples=cfg.num_weight_samples,
        metadata=_meta(cfg, n=n, i=arch.depth, widths=list(arch.dims), activation=exp.activation.name, delta=delta),
    )


def clip_probability_sweep(
    exp: HermiteExpansion, n: int, dims_list: Sequence[Sequence[int]], delta: float, cfg: McConfig
) -> tuple[list[BoundReport], bool]:
    """Clip frequencies across widths; also whether they are non-increasing within 3 SE."""
    reps = [estimate_clip_probability(exp, n, dims, delta, cfg) for dims in dims_list]
    ok = all(
        b.measured <= a.measured + 3.0 * math.hypot(a.std_error, b.std_error) for a, b in zip(reps, reps[1:])
    )
    return reps, ok


def verify_dual_kernel(exp: HermiteExpansion, x, y, cfg: McConfig, d2: int = 1) -> BoundReport:
    """``E_W <sigma(Wx), sigma(Wy)>`` against the dual activation at ``<x, y>``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    act = exp.activation

    def trial(rng):
        W = _xavier(rng, d2, x.shape[0])
        return float(np.mean(act.eval(W @ x) * act.eval(W @ y)))

    m, se = mean_se(_per_trial(cfg, trial))
    rho = float(inner(x, y))
    return BoundReport(
        name="dual_kernel",
        measured=m,
        std_error=se,
        bound=exp.dual(rho),
        samples=cfg.num_weight_samples,
        relation="eq",
        metadata=_meta(cfg, rho=rho, d2=d2, activation=act.name, truncation=float(exp.eps[-1])),
    )
