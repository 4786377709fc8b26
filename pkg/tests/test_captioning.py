import csv

import numpy as np
import pytest

from aivqa.captioning import (
    EXEMPLAR_COUNT,
    FrameStatsCaptioner,
    HashedBagOfWordsEmbedder,
    IclPromptTemplate,
    SimilarityScore,
    build_icl_prompt,
    caption_similarity,
    caption_videos,
    read_caption_cache,
    write_caption_cache,
    write_similarity_csv,
)
from aivqa.dataset import load_manifest
from aivqa.errors import DegenerateEmbeddingError, SchemaError
from aivqa.utils import stable_hash

EXEMPLARS = (
    "a red ball bounces",
    "a dog runs in grass",
    "waves crash on rocks",
    "a city street at night",
    "snow falls on pines",
)


class TestIclPrompt:
    def test_contains_every_exemplar_and_placeholder(self):
        rendered = build_icl_prompt(exemplars=EXEMPLARS)
        for text in EXEMPLARS:
            assert text in rendered
        assert "<video>" in rendered
        # numbered 1..5 in the given order
        lines = rendered.splitlines()
        for i, text in enumerate(EXEMPLARS):
            assert lines[1 + i] == f"{i + 1}. {text}"

    def test_rendering_is_deterministic(self):
        assert build_icl_prompt(exemplars=EXEMPLARS) == build_icl_prompt(exemplars=EXEMPLARS)

    def test_rejects_wrong_exemplar_count(self):
        with pytest.raises(ValueError):
            IclPromptTemplate(exemplars=EXEMPLARS[:4])
        with pytest.raises(ValueError):
            build_icl_prompt(exemplars=EXEMPLARS + ("extra",))

    def test_rejects_empty_exemplar(self):
        with pytest.raises(ValueError):
            IclPromptTemplate(exemplars=EXEMPLARS[:4] + ("",))

    def test_samples_from_manifest_deterministically(self, synth_manifest):
        manifest = synth_manifest
        a = build_icl_prompt(manifest=manifest, seed=3)
        b = build_icl_prompt(manifest=manifest, seed=3)
        assert a == b
        prompts = {r.prompt for r in manifest}
        picked = [line[3:] for line in a.splitlines()[1:6]]
        assert len(picked) == EXEMPLAR_COUNT
        assert all(p in prompts for p in picked)

    def test_needs_five_distinct_prompts(self, tmp_path):
        rows = ["video_name,prompt,mos"]
        rows += [f"{i}_0.npy,same prompt,3.0" for i in range(6)]
        path = tmp_path / "manifest.csv"
        path.write_text("\n".join(rows) + "\n")
        manifest = load_manifest(path, split_tag="train")
        with pytest.raises(ValueError):
            build_icl_prompt(manifest=manifest, seed=0)

    def test_requires_exemplars_or_manifest(self):
        with pytest.raises(ValueError):
            build_icl_prompt()


class TestSimilarity:
    def test_identical_text_scores_one(self):
        emb = HashedBagOfWordsEmbedder()
        score = caption_similarity("a red ball bounces", "a red ball bounces", emb)
        assert abs(score.cosine - 1.0) < 1e-12
        assert abs(score.normalized - 1.0) < 1e-12

    def test_disjoint_tokens_score_half(self):
        # verify the token sets share no hash bucket so cosine is exactly 0
        emb = HashedBagOfWordsEmbedder()
        a, b = "alpha beta gamma", "delta epsilon zeta"
        buckets_a = {stable_hash(t, emb.dim) for t in a.split()}
        buckets_b = {stable_hash(t, emb.dim) for t in b.split()}
        assert not buckets_a & buckets_b
        score = caption_similarity(a, b, emb)
        assert abs(score.cosine - 0.0) < 1e-12
        assert abs(score.normalized - 0.5) < 1e-12

    def test_symmetry(self):
        emb = HashedBagOfWordsEmbedder()
        s1 = caption_similarity("a dog runs fast", "a cat sits still", emb)
        s2 = caption_similarity("a cat sits still", "a dog runs fast", emb)
        assert abs(s1.cosine - s2.cosine) < 1e-12

    def test_case_insensitive_tokens(self):
        emb = HashedBagOfWordsEmbedder()
        score = caption_similarity("Red Ball", "red ball", emb)
        assert abs(score.cosine - 1.0) < 1e-12

    def test_partial_overlap_hand_computation(self):
        # texts "x y" and "x z" with all three tokens in distinct buckets:
        # cosine = 1 / (sqrt(2) * sqrt(2)) = 0.5
        emb = HashedBagOfWordsEmbedder()
        tokens = ["x", "y", "z"]
        assert len({stable_hash(t, emb.dim) for t in tokens}) == 3
        score = caption_similarity("x y", "x z", emb)
        assert abs(score.cosine - 0.5) < 1e-12
        assert abs(score.normalized - 0.75) < 1e-12

    def test_empty_text_rejected(self):
        emb = HashedBagOfWordsEmbedder()
        with pytest.raises(SchemaError):
            caption_similarity("", "a prompt", emb)

    def test_whitespace_only_text_degenerate(self):
        emb = HashedBagOfWordsEmbedder()
        with pytest.raises(DegenerateEmbeddingError):
            emb.embed("   ")

    def test_normalized_validation(self):
        with pytest.raises(ValueError):
            SimilarityScore(cosine=0.4, normalized=0.9)
        with pytest.raises(ValueError):
            SimilarityScore(cosine=1.5, normalized=1.25)
        score = SimilarityScore.from_cosine(-0.2)
        assert abs(score.normalized - 0.4) < 1e-12


class TestEmbedder:
    def test_unit_norm(self):
        emb = HashedBagOfWordsEmbedder(dim=64)
        vec = emb.embed("one two three two")
        assert abs(np.linalg.norm(vec) - 1.0) < 1e-12

    def test_repeated_token_counts(self):
        emb = HashedBagOfWordsEmbedder(dim=64)
        tokens = ["solo", "dup"]
        assert len({stable_hash(t, 64) for t in tokens}) == 2
        vec = emb.embed("solo dup dup")
        # counts (1, 2) normalized by sqrt(5)
        assert abs(vec[stable_hash("solo", 64)] - 1 / np.sqrt(5)) < 1e-12
        assert abs(vec[stable_hash("dup", 64)] - 2 / np.sqrt(5)) < 1e-12

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            HashedBagOfWordsEmbedder(dim=0)


class TestFrameStatsCaptioner:
    def _frames(self, level, t=4, noise=0.0, seed=0):
        rng = np.random.default_rng(seed)
        base = np.full((t, 16, 16, 3), level, dtype=np.float32)
        if noise:
            base = base + rng.normal(0, noise, size=base.shape).astype(np.float32)
        return np.clip(base, 0.0, 1.0)

    def test_brightness_words(self):
        cap = FrameStatsCaptioner()
        assert "dark" in cap.caption(self._frames(0.1), "")
        assert "gray" in cap.caption(self._frames(0.5), "")
        assert "bright" in cap.caption(self._frames(0.9), "")

    def test_constant_frames_are_flat_and_static(self):
        cap = FrameStatsCaptioner()
        text = cap.caption(self._frames(0.5), "")
        assert "flat" in text and "static" in text

    def test_noisy_frames_are_textured_and_moving(self):
        cap = FrameStatsCaptioner()
        text = cap.caption(self._frames(0.5, noise=0.2, seed=1), "")
        assert "textured" in text and "moving" in text

    def test_deterministic(self):
        cap = FrameStatsCaptioner()
        frames = self._frames(0.5, noise=0.1, seed=2)
        assert cap.caption(frames, "ctx") == cap.caption(frames, "ctx")

    def test_rejects_bad_shape(self):
        with pytest.raises(SchemaError):
            FrameStatsCaptioner().caption(np.zeros((16, 16, 3), dtype=np.float32), "")


class TestCaptionVideos:
    def test_order_preserved_under_concurrency(self):
        class EchoCaptioner:
            def caption(self, frames, icl_prompt):
                return f"video {int(frames[0, 0, 0, 0])}"

        stacks = [np.full((1, 2, 2, 3), float(i), dtype=np.float32) for i in range(24)]
        captions = caption_videos(stacks, EchoCaptioner(), "ctx", max_workers=8)
        assert captions == [f"video {i}" for i in range(24)]

    def test_single_worker_matches_many(self):
        cap = FrameStatsCaptioner()
        rng = np.random.default_rng(3)
        stacks = [rng.random(size=(2, 8, 8, 3)).astype(np.float32) for _ in range(6)]
        one = caption_videos(stacks, cap, "ctx", max_workers=1)
        many = caption_videos(stacks, cap, "ctx", max_workers=4)
        assert one == many


class TestCacheFiles:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "captions.csv"
        rows = [("0_1.npy", "a dark flat static scene"), ("1_2.npy", "a bright scene")]
        write_caption_cache(path, rows)
        assert read_caption_cache(path) == dict(rows)

    def test_missing_file_is_empty(self, tmp_path):
        assert read_caption_cache(tmp_path / "nope.csv") == {}

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("name,text\na,b\n")
        with pytest.raises(SchemaError):
            read_caption_cache(path)

    def test_similarity_csv_layout(self, tmp_path):
        path = tmp_path / "sim.csv"
        write_similarity_csv(path, [("0_1.npy", 0.123456789, 0.561728394)])
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["video_name", "cosine", "normalized"]
        assert rows[1] == ["0_1.npy", "0.123457", "0.561728"]
