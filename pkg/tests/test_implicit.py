import math

import numpy as np
import pytest
import torch

from aivqa.encoders import EncoderSpec, ToyTextEncoder, ToyVideoEncoder
from aivqa.errors import SchemaError
from aivqa.prompt_affinity import (
    DEFAULT_TEXT_PAIRS,
    ImplicitScoreParams,
    TextPair,
    affinity_score,
    feature_score,
    frame_features,
    implicit_text_score,
    score_stack,
)
from aivqa.sampling import FrameStack
from oracles import finite_diff_grad, relative_error


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    return torch.tensor(v / np.linalg.norm(v))


def _pair(pos_vec, neg_vec, pos="good", neg="bad"):
    return TextPair(positive=pos, negative=neg, f_pos=_unit(pos_vec), f_neg=_unit(neg_vec))


def _sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


class TestTextPair:
    def test_rejects_empty_prompt(self):
        with pytest.raises(SchemaError):
            _pair([1.0, 0.0], [0.0, 1.0], pos="")

    def test_rejects_non_unit_embedding(self):
        with pytest.raises(SchemaError):
            TextPair(
                positive="good",
                negative="bad",
                f_pos=torch.tensor([2.0, 0.0]),
                f_neg=torch.tensor([0.0, 1.0]),
            )

    def test_from_encoder_yields_unit_vectors(self):
        enc = ToyTextEncoder(EncoderSpec(channels=16, patch=1, seed=3))
        for pos, neg in DEFAULT_TEXT_PAIRS:
            pair = TextPair.from_encoder(pos, neg, enc)
            assert abs(float(pair.f_pos.norm()) - 1.0) < 1e-5
            assert abs(float(pair.f_neg.norm()) - 1.0) < 1e-5


class TestAffinityScore:
    def test_balanced_features_give_half(self):
        # frames orthogonal to both prompts: every diff is 0, sigmoid(0) = 0.5
        pair = _pair([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        feats = torch.tensor([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]], dtype=torch.float64)
        assert abs(float(affinity_score(feats, pair)) - 0.5) < 1e-12

    def test_two_frame_hand_computation(self):
        pair = _pair([1.0, 0.0], [0.0, 1.0])
        feats = torch.tensor([[0.6, 0.8], [1.0, 0.0]], dtype=torch.float64)
        # diffs: 0.6-0.8 = -0.2 and 1.0-0.0 = 1.0, mean 0.4
        want = _sigmoid(0.4)
        assert abs(float(affinity_score(feats, pair)) - want) < 1e-12

    def test_swapping_prompts_is_antisymmetric(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            c = int(rng.integers(2, 9))
            pair = _pair(rng.normal(size=c), rng.normal(size=c))
            flipped = TextPair(
                positive=pair.negative,
                negative=pair.positive,
                f_pos=pair.f_neg,
                f_neg=pair.f_pos,
            )
            feats = torch.tensor(rng.normal(size=(int(rng.integers(1, 5)), c)))
            s = float(affinity_score(feats, pair))
            s_flip = float(affinity_score(feats, flipped))
            assert abs(s + s_flip - 1.0) < 1e-9

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            n, c = int(rng.integers(1, 5)), int(rng.integers(2, 9))
            pos = rng.normal(size=c)
            neg = rng.normal(size=c)
            pair = _pair(pos, neg)
            feats_np = rng.normal(size=(n, c))

            total = 0.0
            pos_u = pos / np.linalg.norm(pos)
            neg_u = neg / np.linalg.norm(neg)
            for i in range(n):
                d_pos = sum(feats_np[i][k] * pos_u[k] for k in range(c))
                d_neg = sum(feats_np[i][k] * neg_u[k] for k in range(c))
                total += d_pos - d_neg
            want = _sigmoid(total / n)

            got = float(affinity_score(torch.tensor(feats_np), pair))
            assert abs(got - want) < 1e-10

    def test_strongly_aligned_features_saturate_high(self):
        pair = _pair([1.0, 0.0], [0.0, 1.0])
        feats = torch.full((3, 2), 0.0, dtype=torch.float64)
        feats[:, 0] = 20.0
        assert float(affinity_score(feats, pair)) > 0.999

    def test_rejects_bad_shapes(self):
        pair = _pair([1.0, 0.0], [0.0, 1.0])
        with pytest.raises(SchemaError):
            affinity_score(torch.zeros(3, dtype=torch.float64), pair)
        with pytest.raises(SchemaError):
            affinity_score(torch.zeros((0, 2), dtype=torch.float64), pair)


class TestFeatureScore:
    def test_zeroed_params_give_half(self):
        params = ImplicitScoreParams(4, seed=0).double()
        with torch.no_grad():
            for p in params.parameters():
                p.zero_()
            out = feature_score(torch.ones(4, dtype=torch.float64), params)
        assert abs(float(out) - 0.5) < 1e-12

    def test_output_strictly_inside_unit_interval(self):
        params = ImplicitScoreParams(8, seed=1).double()
        rng = np.random.default_rng(2)
        with torch.no_grad():
            for _ in range(20):
                out = float(feature_score(torch.tensor(rng.normal(size=8) * 10), params))
                assert 0.0 < out < 1.0

    def test_matches_manual_mlp(self):
        params = ImplicitScoreParams(5, seed=3).double()
        x = torch.tensor(np.random.default_rng(4).normal(size=5))
        with torch.no_grad():
            h = torch.nn.functional.gelu(params.fc1(x))
            raw = torch.nn.functional.gelu(params.fc2(h).squeeze(-1))
            want = torch.sigmoid(raw)
            got = feature_score(x, params)
        assert abs(float(got) - float(want)) < 1e-12

    def test_gradient_matches_finite_differences(self):
        params = ImplicitScoreParams(6, seed=5).double()
        x0 = np.random.default_rng(6).normal(size=6)

        def f(x):
            with torch.no_grad():
                return float(feature_score(torch.tensor(x), params))

        x = torch.tensor(x0, requires_grad=True)
        feature_score(x, params).backward()
        assert relative_error(x.grad.numpy(), finite_diff_grad(f, x0)) < 1e-4


class TestCombiner:
    def _projector(self, index, bias=0.0):
        params = ImplicitScoreParams(4, seed=0).double()
        with torch.no_grad():
            params.combiner.weight.zero_()
            params.combiner.weight[0, index] = 1.0
            params.combiner.bias.fill_(bias)
        return params

    def test_weight_selects_each_input(self):
        inputs = (0.3, 0.6, 0.9)
        for i, want in enumerate(inputs):
            params = self._projector(i)
            with torch.no_grad():
                got = implicit_text_score(
                    *[torch.tensor(v, dtype=torch.float64) for v in inputs], params
                )
            assert abs(float(got) - want) < 1e-12

    def test_bias_shifts_output(self):
        params = self._projector(0, bias=1.5)
        with torch.no_grad():
            got = implicit_text_score(
                torch.tensor(0.25), torch.tensor(0.0), torch.tensor(0.0), params
            )
        assert abs(float(got) - 1.75) < 1e-12

    def test_accepts_mixed_precision_inputs(self):
        params = ImplicitScoreParams(4, seed=1)
        out = implicit_text_score(
            torch.tensor(0.5, dtype=torch.float64),
            torch.tensor(0.5, dtype=torch.float32),
            torch.tensor(0.5, dtype=torch.float32),
            params,
        )
        assert out.ndim == 0


class TestFrameFeatures:
    def _stack(self, data):
        return FrameStack(data=data.astype(np.float32), sample_kind="resized", source_id=0)

    def test_rows_are_unit_norm(self):
        enc = ToyVideoEncoder(EncoderSpec(channels=12, patch=4, seed=0))
        data = np.random.default_rng(0).random(size=(3, 8, 8, 3))
        feats = frame_features(self._stack(data), enc)
        assert feats.shape == (3, 12)
        assert torch.allclose(feats.norm(dim=-1), torch.ones(3), atol=1e-5)

    def test_each_row_matches_single_frame_encoding(self):
        enc = ToyVideoEncoder(EncoderSpec(channels=12, patch=4, seed=1))
        data = np.random.default_rng(1).random(size=(4, 8, 8, 3))
        full = frame_features(self._stack(data), enc)
        for i in range(4):
            solo = frame_features(self._stack(data[i : i + 1]), enc)
            assert torch.allclose(full[i], solo[0], atol=1e-6)

    def test_empty_stack_is_rejected_upstream(self):
        with pytest.raises(SchemaError):
            FrameStack(
                data=np.zeros((0, 8, 8, 3), dtype=np.float32),
                sample_kind="resized",
                source_id=0,
            )


class TestScoreStack:
    def _fixture(self, channels=12):
        spec = EncoderSpec(channels=channels, patch=4, seed=2)
        enc = ToyVideoEncoder(spec)
        text = ToyTextEncoder(EncoderSpec(channels=channels, patch=1, seed=3))
        pairs = tuple(
            TextPair.from_encoder(pos, neg, text) for pos, neg in DEFAULT_TEXT_PAIRS
        )
        params = ImplicitScoreParams(channels, seed=4)
        data = np.random.default_rng(5).random(size=(3, 8, 8, 3)).astype(np.float32)
        stack = FrameStack(data=data, sample_kind="resized", source_id=0)
        return enc, pairs, params, stack

    def test_matches_manual_composition(self):
        enc, pairs, params, stack = self._fixture()
        feats = frame_features(stack, enc)
        want = implicit_text_score(
            feature_score(feats.mean(dim=0), params),
            affinity_score(feats, pairs[0]),
            affinity_score(feats, pairs[1]),
            params,
        )
        got = score_stack(stack, enc, pairs, params)
        assert torch.allclose(got, want, atol=1e-7)

    def test_requires_exactly_two_pairs(self):
        enc, pairs, params, stack = self._fixture()
        with pytest.raises(SchemaError):
            score_stack(stack, enc, pairs[:1], params)
        with pytest.raises(SchemaError):
            score_stack(stack, enc, pairs + pairs, params)
