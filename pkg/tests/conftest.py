"""Shared fixtures: a fast training configuration and small corpora on disk.

Model sizes here are cut far below the defaults; the full-size settings
are exercised by the acceptance suite where the scores actually matter.
"""

from __future__ import annotations

import numpy as np
import pytest

from depthcheck.config import ForestConfig, GbmConfig, RunConfig, SvmConfig
from depthcheck.simulate import (
    CompressionProfile,
    RefillMethod,
    SceneSpec,
    build_corpus,
    synth_scene,
)


def quick_config(**kw) -> RunConfig:
    base = dict(
        threads=1,
        svm=SvmConfig(max_passes=3, sigmoid_folds=2),
        gbm=GbmConfig(rounds=20, depth=3),
        forest=ForestConfig(trees=30, depth=8),
    )
    base.update(kw)
    return RunConfig(**base)


@pytest.fixture(scope="session")
def fast_cfg() -> RunConfig:
    return quick_config()


@pytest.fixture(scope="session")
def gradient_clip():
    return synth_scene(SceneSpec(kind="gradient", width=48, height=48,
                                 bit_depth=10, frame_count=4, grain=0.9, seed=5))


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """Three compressed scenes, native plus zeros and noise refills each."""
    out = tmp_path_factory.mktemp("corpus")
    scenes = [
        SceneSpec(kind=kind, width=32, height=32, bit_depth=10,
                  frame_count=6, grain=0.9, seed=40 + i)
        for i, kind in enumerate(("gradient", "vignette", "texture"))
    ]
    methods = [RefillMethod("zeros"), RefillMethod("noise", seed=7)]
    profile = CompressionProfile(q_i=0, q_p=1, q_b=2, gop="IBBP")
    build_corpus(out, scenes, methods, profile=profile, config=quick_config())
    return out


@pytest.fixture(scope="session")
def trained_bundle(corpus_dir, fast_cfg):
    from depthcheck.pipeline import load_corpus, train_detector

    records = load_corpus(corpus_dir / "manifest.json", fast_cfg)
    return train_detector(records, fast_cfg)


def separable_blob(n=40, width=4, seed=0, spread=0.6):
    """Two well-separated gaussian clusters with alternating groups."""
    rng = np.random.default_rng(seed)
    half = n // 2
    neg = rng.normal(0.0, spread, size=(half, width))
    pos = rng.normal(3.0, spread, size=(n - half, width))
    X = np.vstack([neg, pos])
    y = np.array([0] * half + [1] * (n - half))
    groups = tuple(f"g{i % 4}" for i in range(n))
    return X, y, groups
