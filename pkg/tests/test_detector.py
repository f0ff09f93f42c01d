"""Per-video vector assembly, bundle serialization, and verdicts."""

import numpy as np
import pytest

from conftest import quick_config
from depthcheck.detector import (
    ClipStats,
    DetectorBundle,
    Verdict,
    assemble_features,
    assemble_from_stats,
    compute_clip_stats,
    detect,
    feature_names,
    vector_width,
)
from depthcheck.errors import DomainError, FeatureError, ModelFormatError, ShapeError
from depthcheck.frames import Frame, FrameMeta, FrameType, Plane, VideoSequence
from depthcheck.ml import save_model


def meta_all(n, letter="I", base_size=100):
    return tuple(
        FrameMeta(index=i, frame_type=FrameType(letter), compressed_size=base_size + i)
        for i in range(n)
    )


def test_feature_names_layout():
    names = feature_names(3)
    assert len(names) == vector_width(3) == 93
    assert names[:3] == ["avg_size_I", "avg_size_P", "avg_size_B"]
    assert names[3:10] == [
        "Y_I_mean", "Y_I_std", "Y_I_prob",
        "Y_I_sw_mean", "Y_I_sw_std", "Y_I_sw_prob", "Y_I_present",
    ]
    assert "Cr_IB_t_std" in names
    assert names[-1] == "Cr_PB_t_prob"
    assert len(set(names)) == len(names)

    mono = feature_names(1)
    assert len(mono) == vector_width(1) == 33
    assert all(n.startswith(("avg_size_", "Y_")) for n in mono)


class TestClipStats:
    def test_values_and_shapes(self, gradient_clip, fast_cfg):
        stats = compute_clip_stats(gradient_clip, fast_cfg)
        assert stats.lsb_mean.shape == (4, 3)
        assert stats.lsb_std.shape == (4, 3)
        assert stats.luma_pixels == 48 * 48
        assert stats.plane_count == 3
        assert len(stats.frame_vectors) == 4
        for fv in stats.frame_vectors:
            assert fv is not None and fv.shape == (9,)
        low = (gradient_clip.frames[0].planes[0].samples & 3).astype(np.float64)
        assert stats.lsb_mean[0, 0] == pytest.approx(low.mean(), abs=1e-12)
        assert stats.lsb_std[0, 0] == pytest.approx(low.std(), abs=1e-12)

    def test_thread_count_does_not_change_results(self, gradient_clip):
        one = compute_clip_stats(gradient_clip, quick_config(threads=1))
        two = compute_clip_stats(gradient_clip, quick_config(threads=2))
        assert np.array_equal(one.lsb_mean, two.lsb_mean)
        assert np.array_equal(one.lsb_std, two.lsb_std)
        for a, b in zip(one.frame_vectors, two.frame_vectors):
            assert np.array_equal(a, b)


class TestAssemble:
    def test_metadata_must_align(self, gradient_clip, fast_cfg):
        stats = compute_clip_stats(gradient_clip, fast_cfg)
        bad = tuple(
            FrameMeta(index=i, frame_type=FrameType.I, compressed_size=10)
            for i in (0, 1, 3, 4)
        )
        with pytest.raises(DomainError, match="metadata must cover frames"):
            assemble_from_stats(stats, bad, None, fast_cfg)

    def test_sequence_without_metadata_rejected(self, gradient_clip, fast_cfg):
        with pytest.raises(DomainError, match="supply metadata"):
            assemble_features(gradient_clip, None, None, fast_cfg)

    def test_absent_types_leave_zeroed_slots(self, gradient_clip, fast_cfg):
        stats = compute_clip_stats(gradient_clip, fast_cfg)
        vec = assemble_from_stats(stats, meta_all(4, "I"), None, fast_cfg)
        names = feature_names(3)
        val = dict(zip(names, vec))
        assert val["avg_size_I"] == pytest.approx(101.5)  # sizes 100..103
        assert val["avg_size_P"] == 0.0
        assert val["avg_size_B"] == 0.0
        assert val["Y_I_present"] == 1.0
        assert val["Y_P_present"] == 0.0
        assert val["Cb_B_present"] == 0.0
        assert val["Y_I_mean"] == pytest.approx(stats.lsb_mean[:, 0].mean())
        # every cross-type comparison needs both sides
        for name in names:
            if "_t_" in name:
                assert val[name] == 0.0

    def test_no_ensemble_means_zero_probability_series(self, gradient_clip, fast_cfg):
        stats = compute_clip_stats(gradient_clip, fast_cfg)
        val = dict(zip(feature_names(3),
                       assemble_from_stats(stats, meta_all(4), None, fast_cfg)))
        assert val["Y_I_prob"] == 0.0
        assert val["Y_I_sw_prob"] == 0.0

    def test_ensemble_fills_probability_series(self, gradient_clip, fast_cfg,
                                               trained_bundle):
        stats = compute_clip_stats(gradient_clip, fast_cfg)
        meta = meta_all(4)
        bare = assemble_from_stats(stats, meta, None, fast_cfg)
        with_ens = assemble_from_stats(stats, meta, trained_bundle.ensemble, fast_cfg)
        names = feature_names(3)
        idx = names.index("Y_I_prob")
        assert 0.0 < with_ens[idx] < 1.0
        # non-probability slots are identical either way
        for i, name in enumerate(names):
            if "prob" not in name:
                assert bare[i] == with_ens[i]

    def test_ensemble_with_no_frame_vectors_rejected(self, fast_cfg, trained_bundle):
        stats = ClipStats(
            lsb_mean=np.zeros((2, 3)),
            lsb_std=np.zeros((2, 3)),
            frame_vectors=[None, None],
            luma_pixels=256,
            plane_count=3,
        )
        with pytest.raises(FeatureError, match="no frame produced cloud features"):
            assemble_from_stats(stats, meta_all(2), trained_bundle.ensemble, fast_cfg)
        # without an ensemble the same stats still assemble
        vec = assemble_from_stats(stats, meta_all(2), None, fast_cfg)
        assert vec.shape == (93,)

    def test_size_per_pixel_rescales_sizes(self, gradient_clip):
        cfg_abs = quick_config(size_per_pixel=False)
        cfg_rel = quick_config(size_per_pixel=True)
        stats = compute_clip_stats(gradient_clip, cfg_abs)
        meta = meta_all(4)
        v_abs = assemble_from_stats(stats, meta, None, cfg_abs)
        v_rel = assemble_from_stats(stats, meta, None, cfg_rel)
        assert v_rel[0] == pytest.approx(v_abs[0] / (48 * 48))


class TestBundle:
    def test_round_trip(self, trained_bundle):
        blob = trained_bundle.save()
        loaded = DetectorBundle.load(blob)
        assert loaded.config == trained_bundle.config
        assert loaded.ensemble is not None
        assert loaded.save() == blob  # serialization is canonical

    def test_round_trip_without_ensemble(self, trained_bundle):
        lean = DetectorBundle(forest=trained_bundle.forest, ensemble=None,
                              config=trained_bundle.config)
        loaded = DetectorBundle.load(lean.save())
        assert loaded.ensemble is None

    def test_corrupt_blobs(self, trained_bundle):
        blob = trained_bundle.save()
        with pytest.raises(ModelFormatError, match="too short"):
            DetectorBundle.load(blob[:6])
        with pytest.raises(ModelFormatError, match="bad bundle magic"):
            DetectorBundle.load(b"X" * len(blob))
        with pytest.raises(ModelFormatError, match="bare model"):
            DetectorBundle.load(save_model(trained_bundle.forest))
        broken = bytearray(blob)
        broken[-1] ^= 0xFF
        with pytest.raises(ModelFormatError, match="checksum mismatch"):
            DetectorBundle.load(bytes(broken))


@pytest.fixture(scope="module")
def judged_clip(corpus_dir, fast_cfg):
    from depthcheck.pipeline import load_corpus

    return load_corpus(corpus_dir / "manifest.json", fast_cfg)[0].video


class TestDetect:
    def test_verdict_contract(self, judged_clip, trained_bundle):
        verdict = detect(judged_clip, trained_bundle)
        assert isinstance(verdict, Verdict)
        assert 0.0 <= verdict.probability <= 1.0
        assert verdict.threshold == trained_bundle.config.threshold
        assert verdict.decision == (verdict.probability >= verdict.threshold)
        assert set(verdict.features) == set(feature_names(3))
        assert verdict.features["avg_size_I"] > 0

    def test_threshold_override(self, judged_clip, trained_bundle):
        verdict = detect(judged_clip, trained_bundle, threshold=0.0)
        assert verdict.threshold == 0.0
        assert verdict.decision is True
        verdict = detect(judged_clip, trained_bundle, threshold=1.0)
        assert verdict.decision == (verdict.probability >= 1.0)
        with pytest.raises(DomainError, match="threshold"):
            detect(judged_clip, trained_bundle, threshold=1.5)

    def test_plane_count_mismatch(self, trained_bundle):
        rng = np.random.default_rng(1)
        frames = tuple(
            Frame((Plane(rng.integers(0, 1024, (16, 16), dtype=np.uint16), 10),))
            for _ in range(3)
        )
        mono = VideoSequence(frames)
        # ensemble-free bundle so assembly itself succeeds; the forest
        # trained on three-plane vectors must then refuse the mono vector
        lean = DetectorBundle(forest=trained_bundle.forest, ensemble=None,
                              config=trained_bundle.config)
        with pytest.raises(ShapeError, match="33 features"):
            detect(mono, lean, metadata=meta_all(3))
