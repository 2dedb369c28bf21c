import json
import math

import numpy as np
import pytest

from shadownet.activations import make_activation
from shadownet.errors import TruncationTooCoarse
from shadownet.harness import mean_se
from shadownet.network import (
    Architecture,
    NetworkWeights,
    clip_condition,
    clipped_shadow_forward,
    forward,
    inner,
    norm,
    sample_sphere,
    sample_weights,
    shadow_forward,
    truncated_forward,
)


@pytest.fixture(scope="module")
def x64():
    return sample_sphere(64, None, np.random.default_rng(1))


class TestSphereAndNorm:
    def test_normalized_norm(self):
        assert norm(np.ones(7)) == pytest.approx(1.0)
        assert inner(np.ones(4), np.array([1.0, -1.0, 2.0, 0.0])) == pytest.approx(0.5)

    def test_sphere_points(self):
        X = sample_sphere(13, 500, np.random.default_rng(0))
        np.testing.assert_allclose(norm(X), 1.0, atol=1e-12)

    def test_single_point_shape(self):
        assert sample_sphere(5, None, np.random.default_rng(0)).shape == (5,)


class TestArchitecture:
    def test_d_bar_and_depth(self):
        a = Architecture((3, 4, 1))
        assert a.d_bar == 8 and a.depth == 2

    @pytest.mark.parametrize("dims", [(3,), (3, 0, 1), (-1, 2)])
    def test_invalid(self, dims):
        with pytest.raises(ValueError):
            Architecture(dims)


class TestSampleWeights:
    def test_scalar(self):
        w = sample_weights([1, 1], 4)
        assert w.matrices[0].shape == (1, 1)

    def test_determinism(self):
        a = sample_weights([10, 20, 3], 123)
        b = sample_weights([10, 20, 3], 123)
        for A, B in zip(a.matrices, b.matrices):
            np.testing.assert_array_equal(A, B)

    def test_seeds_differ(self):
        a = sample_weights([10, 3], 1)
        b = sample_weights([10, 3], 2)
        assert not np.array_equal(a.matrices[0], b.matrices[0])

    def test_mean_and_variance(self):
        W = sample_weights([100, 100], 7).matrices[0]
        assert abs(W.mean()) <= 3 * math.sqrt(0.01 / W.size)
        assert abs(W.var() - 0.01) <= 0.2 * 0.01

    def test_variance_per_layer(self):
        w = sample_weights([50, 400, 30], 3)
        for W, d_in in zip(w.matrices, (50, 400)):
            assert abs(W.var() * d_in - 1.0) <= 0.2

    def test_json_roundtrip(self):
        w = sample_weights([4, 6, 1], 99)
        text = w.to_json()
        assert set(json.loads(text)) == {"arch", "seed", "sampler"}
        back = NetworkWeights.from_json(text)
        for A, B in zip(w.matrices, back.matrices):
            np.testing.assert_array_equal(A, B)

    def test_read_only(self):
        w = sample_weights([3, 2], 0)
        with pytest.raises(ValueError):
            w.matrices[0][0, 0] = 1.0


class TestForward:
    def test_identity_is_linear(self, identity_exp, x64):
        w = sample_weights([64, 32], 0)
        phis, psis = forward(w, identity_exp.activation, x64)
        np.testing.assert_allclose(phis[0], w.matrices[0] @ x64, atol=1e-14)
        np.testing.assert_allclose(psis[0], phis[0])

    def test_dimension_mismatch(self, erf_act):
        w = sample_weights([4, 2], 0)
        with pytest.raises(ValueError):
            forward(w, erf_act, np.ones(5))

    def test_batch_matches_single(self, erf_act):
        w = sample_weights([6, 9, 2], 0)
        X = sample_sphere(6, 5, np.random.default_rng(2))
        batch, _ = forward(w, erf_act, X)
        for k in range(5):
            single, _ = forward(w, erf_act, X[k])
            np.testing.assert_allclose(batch[-1][k], single[-1], atol=1e-14)

    @pytest.mark.parametrize("layer", [0, 1])
    def test_second_moment_preserved(self, erf_act, x64, layer):
        # E_W ||Phi^1||^2 = 1 and E_W ||Psi^1||^2 = 1
        vals = []
        for s in range(400):
            phis, psis = forward(sample_weights([64, 64, 1], s), erf_act, x64)
            vals.append(norm(phis[0]) ** 2 if layer == 0 else norm(psis[0]) ** 2)
        m, se = mean_se(vals)
        assert abs(m - 1.0) <= 3 * se

    def test_linear_layer_contraction(self):
        v = np.random.default_rng(0).standard_normal(40)
        vals = [norm(sample_weights([40, 60], s).matrices[0] @ v) for s in range(500)]
        m, se = mean_se(vals)
        assert m <= norm(v) + 3 * se


class TestShadowForward:
    def test_identity_equals_forward(self, identity_exp, x64):
        w = sample_weights([64, 20, 20, 1], 5)
        a, _ = forward(w, identity_exp.activation, x64)
        b, _ = shadow_forward(w, identity_exp, 2, x64)
        np.testing.assert_allclose(a[-1], b[-1], atol=1e-13)

    def test_last_layer_linear(self, erf_exp, x64):
        w = sample_weights([64, 20, 3], 5)
        phis, psis = shadow_forward(w, erf_exp, 4, x64)
        np.testing.assert_array_equal(phis[-1], psis[-1])

    def test_too_coarse(self, relu_exp, x64):
        w = sample_weights([64, 4, 1], 0)
        with pytest.raises(TruncationTooCoarse):
            shadow_forward(w, relu_exp, 0, x64)

    def test_depth_two_gap(self, erf_exp, x64):
        act = erf_exp.activation
        gaps, sq = [], []
        for s in range(300):
            w = sample_weights([64, 256, 1], s)
            a_phi, a_psi = forward(w, act, x64)
            b_phi, b_psi = shadow_forward(w, erf_exp, 5, x64)
            gaps.append(norm(a_phi[-1] - b_phi[-1]))
            sq.append(norm(a_psi[0] - b_psi[0]) ** 2)
        m, se = mean_se(gaps)
        assert m <= math.sqrt(2 * erf_exp.eps[5]) + 3 * se
        m2, se2 = mean_se(sq)
        assert abs(m2 - 2 * (1 - math.sqrt(1 - erf_exp.eps[5]))) <= 3 * se2


class TestClipping:
    def test_zero_weights(self, erf_exp):
        arch = Architecture((3, 4, 1))
        w = NetworkWeights(arch, (np.zeros((4, 3)), np.zeros((1, 4))), 0)
        x = np.ones(3)
        phis, _ = shadow_forward(w, erf_exp, 3, x)
        np.testing.assert_array_equal(clipped_shadow_forward(w, erf_exp, 3, x), phis[-1])

    def test_large_entry_zeroes_output(self, erf_exp):
        base = sample_weights([3, 4, 1], 0)
        W1 = np.array(base.matrices[0])
        W1[0, 0] = base.arch.d_bar + 1
        w = NetworkWeights(base.arch, (W1, base.matrices[1]), 0)
        assert not clip_condition(w)
        out = clipped_shadow_forward(w, erf_exp, 3, np.ones(3))
        np.testing.assert_array_equal(out, 0.0)

    def test_clip_rare_at_realistic_widths(self):
        hits = sum(not clip_condition(sample_weights([50, 50, 1], s)) for s in range(1000))
        assert hits / 1000 < 0.01


class TestTruncatedForward:
    def test_depth_one_never_clipped(self, erf_exp):
        w = sample_weights([8, 5], 0)
        X = sample_sphere(8, 50, np.random.default_rng(0))
        _, _, clipped = truncated_forward(w, erf_exp, 4, X, 1e-6)
        assert not clipped.any()

    def test_delta_range(self, erf_exp):
        w = sample_weights([8, 5], 0)
        for bad in (0.0, 0.6):
            with pytest.raises(ValueError):
                truncated_forward(w, erf_exp, 4, np.ones(8), bad)

    def test_tiny_delta_clips(self, erf_exp):
        w = sample_weights([8, 30, 1], 0)
        X = sample_sphere(8, 50, np.random.default_rng(0))
        psi, psi_n, clipped = truncated_forward(w, erf_exp, 4, X, 1e-6)
        assert clipped.all()
        np.testing.assert_array_equal(psi, 0.0)
        np.testing.assert_array_equal(psi_n, 0.0)

    def test_unclipped_rows_match_passes(self, erf_exp):
        w = sample_weights([8, 300, 1], 0)
        x = sample_sphere(8, None, np.random.default_rng(0))
        psi, psi_n, clipped = truncated_forward(w, erf_exp, 4, x, 0.5)
        assert clipped is False
        phis, _ = forward(w, erf_exp.activation, x)
        np.testing.assert_allclose(psi, erf_exp.activation(phis[-1]))

    def test_clip_rate_wide_depth_three(self, erf_exp):
        x = sample_sphere(16, None, np.random.default_rng(0))
        hits = sum(truncated_forward(sample_weights([16, 200, 200, 1], s), erf_exp, 4, x, 0.5)[2] for s in range(1000))
        assert hits / 1000 < 0.05

    def test_identity_clip_rate_shrinks_with_width(self, identity_exp):
        x = sample_sphere(16, None, np.random.default_rng(0))
        rates = []
        for width in (50, 200, 800):
            hits = sum(
                truncated_forward(sample_weights([16, width, width, 1], s), identity_exp, 1, x, 0.15)[2]
                for s in range(300)
            )
            rates.append(hits / 300)
        assert rates[0] >= rates[1] >= rates[2]
        assert rates[0] > 0
