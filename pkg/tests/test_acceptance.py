"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also collected in the terminal summary.
"""

import json
import math
import time

import numpy as np

from shadownet import bounds as B
from shadownet.activations import expand, make_activation
from shadownet.cli import main
from shadownet.harness import McConfig, mean_se, project_pair, verify_single_layer_identity, verify_theorem_main
from shadownet.hermite import correlated_pairs, default_node_count, gauss_hermite_nodes, hermite_eval_all
from shadownet.learners import evaluate, fit_poly_regression, generate_dataset
from shadownet.network import norm, sample_sphere, sample_weights, shadow_forward
from shadownet.polyexpand import coefficient_sum_check, expand_shadow


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def test_01_hermite_orthonormality(record_acceptance):
    with Timer() as t:
        x, w = gauss_hermite_nodes(default_node_count(20))
        H = hermite_eval_all(20, x)
        err = float(np.max(np.abs((H * w) @ H.T - np.eye(21))))
    ok = err <= 1e-8 and t.elapsed < 1.0
    record_acceptance("01 Hermite orthonormality", ok, f"max |G - I| = {err:.2e}, {t.elapsed:.3f}s")
    assert ok


def test_02_correlated_orthogonality(record_acceptance):
    rhos = (-1.0, -0.5, 0.0, 0.3, 0.9, 1.0)
    rng = np.random.default_rng(0)
    failures = []
    worst = 0.0
    with Timer() as t:
        for rho in rhos:
            X, Y = correlated_pairs(rho, 100_000, rng)
            HX, HY = hermite_eval_all(8, X), hermite_eval_all(8, Y)
            for i in range(9):
                for j in range(9):
                    prod = HX[i] * HY[j]
                    m = float(prod.mean())
                    se = float(prod.std(ddof=1)) / math.sqrt(prod.size)
                    target = rho**i if i == j else 0.0
                    # exactly-determined cells (e.g. i = j = 0) have se = 0
                    z = abs(m - target) / se if se > 0 else (0.0 if abs(m - target) <= 1e-12 else math.inf)
                    worst = max(worst, z)
                    if z > 3.0:
                        failures.append((rho, i, j, round(z, 2)))
    ok = not failures and t.elapsed < 10.0
    record_acceptance(
        "02 correlated orthogonality (MC, 3 SE)",
        ok,
        f"{len(failures)}/{len(rhos) * 81} cells beyond 3 SE {failures[:4]}, worst z = {worst:.2f}, {t.elapsed:.2f}s",
    )
    assert ok


def test_03_sigmoid_truncation(record_acceptance):
    with Timer() as t:
        exp = expand(make_activation("erf_sigmoid"), 12)
        ratios = [exp.eps[n] / B.eps_bound_sigmoid(n) for n in range(1, 13)]
    ok = max(ratios) <= 1.0 and t.elapsed < 1.0
    raw_sq = exp.activation.normalization_factor**2
    record_acceptance(
        "03 erf eps(n) <= 2^-n",
        ok,
        f"max eps/2^-n = {max(ratios):.3f} (normalized form; the raw-form residual is {raw_sq:.4f} times this), {t.elapsed:.3f}s",
    )
    assert ok


def test_04_lipschitz_truncation(record_acceptance):
    worst = {}
    for kind in ("erf_sigmoid", "relu", "relu_like"):
        exp = expand(make_activation(kind), 12)
        L = exp.activation.lipschitz_L
        worst[kind] = max(exp.eps[n] / B.eps_bound_lipschitz(n, L) for n in range(1, 13))
    ok = all(v <= 1.0 for v in worst.values())
    detail = ", ".join(f"{k}: {v:.3f}" for k, v in worst.items())
    record_acceptance("04 eps(n) <= L^2/n", ok, f"max ratio {detail}")
    assert ok


def test_05_single_layer_exactness(record_acceptance, erf_exp):
    with Timer() as t:
        rep = verify_single_layer_identity(erf_exp, 4, 64, 256, McConfig(num_weight_samples=500))
    ok = rep.passed and t.elapsed < 30.0
    record_acceptance(
        "05 single-layer exactness",
        ok,
        f"measured {rep.measured:.6g} vs {rep.bound:.6g}, SE {rep.std_error:.2g}, {t.elapsed:.2f}s",
    )
    assert ok


def test_06_theorem_depth_two_and_three(record_acceptance, erf_exp):
    rows = []
    with Timer() as t:
        for dims, cfg in (([64, 256, 1], McConfig(500, 20)), ([64, 256, 256, 1], McConfig(200, 10))):
            for n in (2, 4, 6):
                rep = verify_theorem_main(erf_exp, n, dims, cfg)
                rows.append((len(dims) - 1, n, rep))
    ok = all(r.passed for _, _, r in rows) and t.elapsed < 300.0
    detail = "; ".join(f"i={i} n={n}: {r.measured:.3g} <= {r.bound:.3g}" for i, n, r in rows)
    record_acceptance("06 theorem bound at depth 2 and 3", ok, f"{detail}, {t.elapsed:.1f}s")
    assert ok


def test_07_projection_pairs(record_acceptance):
    rng = np.random.default_rng(0)
    d = 6
    U = sample_sphere(d, 20_000, rng)
    radii = rng.uniform(0.5, 1.5, 20_000)
    P = U * radii[:, None]
    X1, X2 = P[0::2], P[1::2]
    with Timer() as t:
        T = np.array([project_pair(x1, x2) for x1, x2 in zip(X1, X2)])
        T1, T2 = T[:, 0], T[:, 1]
        holds = (
            (norm(X1 - T1) <= 2 * np.abs(norm(X1) - 1))
            & (norm(X2 - T2) <= 2 * np.abs(norm(X2) - 1))
            & (norm(T1 - T2) <= 3 * norm(X1 - X2))
        )
        bad = int((~holds).sum())
    ok = bad == 0 and t.elapsed < 1.0
    record_acceptance("07 projection pairs", ok, f"{bad} violations in 10^4 pairs, {t.elapsed:.3f}s")
    assert ok


def test_08_symbolic_expansion(record_acceptance, erf_exp):
    n, dims = 3, [3, 4, 1]
    worst_rel, worst_deg, all_coef = 0.0, 0, True
    with Timer() as t:
        for seed in range(20):
            w = sample_weights(dims, seed)
            X = sample_sphere(3, 100, np.random.default_rng(1000 + seed))
            poly = expand_shadow(w, erf_exp, n)[0]
            ref = shadow_forward(w, erf_exp, n, X)[0][-1][:, 0]
            rel = np.abs(poly.evaluate(X) - ref) / np.abs(ref)
            worst_rel = max(worst_rel, float(rel.max()))
            worst_deg = max(worst_deg, poly.degree)
            all_coef &= coefficient_sum_check(w, erf_exp, n).passed
    ok = worst_rel <= 1e-8 and worst_deg <= n ** (len(dims) - 2) and all_coef and t.elapsed < 30.0
    record_acceptance(
        "08 symbolic expansion",
        ok,
        f"max rel err {worst_rel:.2e}, max degree {worst_deg}, coefficient sums ok={all_coef}, {t.elapsed:.2f}s",
    )
    assert ok


def test_09_realizable_regression(record_acceptance, identity_exp, erf_exp):
    lin = sample_weights([8, 1], 3)
    act = identity_exp.activation
    lin_err = evaluate(
        fit_poly_regression(generate_dataset(lin, act, 100, 0), 1, ridge=0.0), generate_dataset(lin, act, 1000, 1)
    ).mean_error
    n, dims = 3, [3, 4, 1]
    shadow = sample_weights(dims, 5)
    train = generate_dataset(shadow, erf_exp, 500, 0, shadow_degree=n)
    shadow_err = evaluate(fit_poly_regression(train, n ** (len(dims) - 2), ridge=1e-8), train).mean_error
    ok = lin_err <= 1e-8 and shadow_err <= 1e-6
    record_acceptance(
        "09 realizable regression", ok, f"linear test err {lin_err:.2e}, shadow train err {shadow_err:.2e}"
    )
    assert ok


def test_10_ptas_trend(record_acceptance, erf_exp):
    act = erf_exp.activation
    degrees = (1, 3, 5)
    errs = {N: [] for N in degrees}
    with Timer() as t:
        for k in range(10):
            teacher = sample_weights([8, 256, 1], 1000 + k)
            train = generate_dataset(teacher, act, 20_000, 2 * k)
            test = generate_dataset(teacher, act, 5_000, 2 * k + 1)
            for N in degrees:
                errs[N].append(evaluate(fit_poly_regression(train, N), test).mean_error)
    stats = {N: mean_se(errs[N]) for N in degrees}
    bounds = {N: B.bound_theorem_intro(2, N, act.lipschitz_L, float(erf_exp.eps[N])) for N in degrees}
    trend = all(stats[b][0] <= stats[a][0] + math.hypot(stats[a][1], stats[b][1]) for a, b in zip(degrees, degrees[1:]))
    below = all(stats[N][0] <= bounds[N] for N in degrees)
    ok = trend and below and t.elapsed < 300.0
    detail = "; ".join(f"N={N}: {stats[N][0]:.4f} +/- {stats[N][1]:.4f} (bound {bounds[N]:.3g})" for N in degrees)
    record_acceptance("10 PTAS trend", ok, f"{detail}, {t.elapsed:.1f}s")
    assert ok


CLI_RUNS = [
    ("expand", ["expand", "--degree", "12"], {}),
    ("bounds", ["bounds"], {"n": 3, "depth": 3}),
    ("expand-poly", ["expand-poly"], {"dims": "3,4,1", "n": 3}),
    ("learn", ["learn"], {"teachers": 2, "samples": 800, "test_samples": 200, "degrees": "1,3", "learner": "both",
                          "width": 32, "steps": 300}),
] + [
    (f"verify {lemma}", ["verify", lemma], {"seeds": 20, "samples": 3, "d": 16, "d1": 32})
    for lemma in (
        "single-layer",
        "single-layer-identity",
        "adding-layer",
        "projecting",
        "main-lemma",
        "theorem",
        "contraction",
        "clip-probability",
    )
]


def test_11_cli_reproducibility(record_acceptance, tmp_path):
    differing = []
    for label, argv, cfg in CLI_RUNS:
        cfg_path = tmp_path / "cfg.json"
        seeded = {} if argv[0] in ("expand", "bounds") else {"seed": 7}
        cfg_path.write_text(json.dumps({**cfg, **seeded, "no_timestamp": True}))
        outputs = []
        for rep in range(2):
            out = tmp_path / f"run{rep}.out"
            side = tmp_path / f"run{rep}.csv"
            extra = ["--csv", str(side)] if argv[0] == "verify" else []
            code = main([*argv, "--config", str(cfg_path), "--out", str(out), *extra])
            blob = out.read_bytes() + (side.read_bytes() if extra else b"")
            outputs.append((code, blob))
        if outputs[0] != outputs[1] or outputs[0][0] not in (0, 1):
            differing.append(label)
    ok = not differing
    record_acceptance(
        "11 CLI reproducibility", ok, f"{len(CLI_RUNS)} commands re-run, differing: {differing or 'none'}"
    )
    assert ok


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def test_12_bound_fixtures(record_acceptance):
    lam2 = 32 * (9 * 105) ** 0.25
    fixtures = {
        "lambda(1)": (B.lambda_n(1), 8 * 27**0.25),
        "lambda(2)": (B.lambda_n(2), lam2),
        "theorem_main(2, L=1, eps=1/4)": (B.bound_theorem_main(2, 4, 1.0, 0.25), 26.0),
        "theorem_main(3, L=1, eps=1/16)": (B.bound_theorem_main(3, 4, 1.0, 1 / 16), 26.0),
        "theorem_intro(2, L=1, eps=1/4)": (B.bound_theorem_intro(2, 4, 1.0, 0.25), 28.0),
        "theorem_intro(3, L=1, eps=1/16)": (B.bound_theorem_intro(3, 4, 1.0, 1 / 16), 28.0),
        "theorem_intro_chained(2, n=4, L=1)": (B.bound_theorem_intro_chained(2, 4, 1.0), 56.0),
        "main_lemma(2, 1, .01, .01, .1)": (
            B.bound_main_lemma(2, 1.0, 0.01, 0.01, 0.1),
            0.02 + math.sqrt(0.2) + math.sqrt(6 / 0.9 * 0.01) + 2 * lam2 * 0.01,
        ),
        "main_lemma delta=eps=0": (B.bound_main_lemma(3, 1.0, 0.0, 0.0, 0.18), 0.6),
        "adding_layer(L=2, eps=.05, eps_n=.1)": (
            B.bound_adding_layer_normalized(3, 2.0, 0.05, 0.1),
            math.sqrt(0.2) + math.sqrt(8 / 0.9 * 0.05),
        ),
        "single_layer(0.08)": (B.bound_single_layer(0.08), 0.4),
        "contraction(2, L=1, eps=1/4)": (B.bound_contraction(2, 3, 1.0, 0.25), 48 * 0.25**0.25),
        "contraction_delta_max(1, L=1, eps=1/4)": (B.contraction_delta_max(1, 1.0, 0.25), 0.5 / (2 + 16 * 27**0.25)),
        "eps_lipschitz(4, 1)": (B.eps_bound_lipschitz(4, 1.0), 0.25),
        "eps_sigmoid(10)": (B.eps_bound_sigmoid(10), 2.0**-10),
        "eps_sigmoid_binomial(4)": (B.eps_bound_sigmoid_binomial(4), 1 / 30),
        "eps_derivative(5, 3, 7)": (B.eps_bound_derivative(5, 3, 7.0), 7.0 * 6 / 720),
    }
    bad = {k: _rel(a, b) for k, (a, b) in fixtures.items() if _rel(a, b) > 1e-12}
    ok = not bad
    record_acceptance("12 bound calculator fixtures", ok, f"{len(fixtures)} fixtures, mismatches: {bad or 'none'}")
    assert ok
