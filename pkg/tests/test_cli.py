"""Command-line surface: every subcommand end to end on a tiny corpus."""

import json
from types import SimpleNamespace

import numpy as np
import pytest

from conftest import quick_config
from depthcheck.cli import main
from depthcheck.detector import DetectorBundle, detect
from depthcheck.ingest import read_frame_metadata, read_y4m
from streams import stream


@pytest.fixture(scope="module")
def env(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    cfg = d / "cfg.json"
    cfg.write_text(json.dumps(quick_config().to_dict()))
    corpus = d / "corpus"
    assert main([
        "simulate", "--out", str(corpus), "--scenes", "2",
        "--width", "32", "--height", "32", "--frames", "4",
        "--corpus-seed", "50", "--methods", "zeros,noise:seed=7",
    ]) == 0
    model = d / "model.bin"
    assert main([
        "train", str(corpus / "manifest.json"),
        "--out", str(model), "--config", str(cfg),
    ]) == 0
    return SimpleNamespace(
        dir=d, cfg=cfg, corpus=corpus, model=model,
        manifest=corpus / "manifest.json",
        clip=corpus / "scene000_native.y4m",
        meta=corpus / "scene000_native.csv",
    )


class TestSimulateAndTrain:
    def test_corpus_layout(self, env):
        names = sorted(p.name for p in env.corpus.iterdir())
        assert "manifest.json" in names
        assert sum(n.endswith(".y4m") for n in names) == 6  # 2 scenes x 3 variants
        assert sum(n.endswith(".csv") for n in names) == 6
        assert "scene001_noise.y4m" in names

    def test_training_is_repeatable(self, env):
        second = env.dir / "model2.bin"
        assert main([
            "train", str(env.manifest), "--out", str(second),
            "--config", str(env.cfg),
        ]) == 0
        assert second.read_bytes() == env.model.read_bytes()

    def test_no_compress_skips_sidecars(self, env):
        out = env.dir / "plain"
        assert main([
            "simulate", "--out", str(out), "--scenes", "1", "--width", "32",
            "--height", "32", "--frames", "2", "--no-compress",
            "--methods", "zeros",
        ]) == 0
        names = [p.name for p in out.iterdir()]
        assert not any(n.endswith(".csv") for n in names)


class TestDetect:
    def test_json_output_matches_library(self, env, capsys):
        assert main([
            "detect", str(env.clip), "--bundle", str(env.model),
            "--meta", str(env.meta), "--json",
        ]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert set(doc) == {"probability", "decision", "threshold", "features"}
        assert len(doc["features"]) == 93

        bundle = DetectorBundle.load(env.model.read_bytes())
        video = read_y4m(env.clip.read_bytes()).with_metadata(
            read_frame_metadata(env.meta.read_text()))
        want = detect(video, bundle)
        assert doc["probability"] == pytest.approx(want.probability, abs=1e-12)
        assert doc["decision"] == want.decision

    def test_table_output(self, env, capsys):
        assert main([
            "detect", str(env.clip), "--bundle", str(env.model),
            "--meta", str(env.meta),
        ]) == 0
        out = capsys.readouterr().out
        first, rest = out.split("\n", 1)
        record = json.loads(first)
        assert set(record) == {"decision", "probability", "threshold"}
        assert "verdict: " in rest
        assert ("native" in rest) or ("synthesized" in rest)
        assert "avg size" in rest

    def test_threshold_flag(self, env, capsys):
        assert main([
            "detect", str(env.clip), "--bundle", str(env.model),
            "--meta", str(env.meta), "--threshold", "0", "--json",
        ]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["threshold"] == 0.0
        assert doc["decision"] is True

    def test_types_from_stream_file(self, env, capsys):
        types = env.dir / "types.265"
        types.write_bytes(stream("IBBP"))
        assert main([
            "detect", str(env.clip), "--bundle", str(env.model),
            "--stream", str(types), "--json",
        ]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["features"]["Y_B_present"] == 1.0

    def test_server_mode_posts_to_service(self, env, trained_bundle, monkeypatch,
                                          capsys):
        from fastapi.testclient import TestClient

        from depthcheck.service.app import create_app

        client = TestClient(create_app(trained_bundle))
        calls = {}

        def fake_post(url, json=None, timeout=None):
            calls["url"] = url
            return client.post("/detect", json=json)

        monkeypatch.setattr("httpx.post", fake_post)
        assert main([
            "detect", str(env.clip), "--server", "http://unit.test",
            "--meta", str(env.meta), "--json",
        ]) == 0
        assert calls["url"] == "http://unit.test/detect"
        doc = json.loads(capsys.readouterr().out)
        video = read_y4m(env.clip.read_bytes()).with_metadata(
            read_frame_metadata(env.meta.read_text()))
        want = detect(video, trained_bundle)
        assert doc["probability"] == pytest.approx(want.probability, abs=1e-12)

    def test_server_short_verdict_line(self, env, trained_bundle, monkeypatch,
                                       capsys):
        from fastapi.testclient import TestClient

        from depthcheck.service.app import create_app

        client = TestClient(create_app(trained_bundle))
        monkeypatch.setattr(
            "httpx.post", lambda url, json=None, timeout=None:
            client.post("/detect", json=json))
        assert main([
            "detect", str(env.clip), "--server", "http://unit.test",
            "--meta", str(env.meta),
        ]) == 0
        out = capsys.readouterr().out.strip()
        assert out.endswith(("native", "synthesized"))


class TestEval:
    def test_text_report(self, env, capsys):
        assert main([
            "eval", str(env.manifest), "--config", str(env.cfg),
        ]) == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert lines[0] == "group,f1"
        assert lines[1].startswith("scene000,")
        assert lines[2].startswith("scene001,")
        assert lines[-1].startswith("mean ")
        assert lines[-1].endswith("(population std over folds)")

    def test_json_report(self, env, capsys):
        assert main([
            "eval", str(env.manifest), "--config", str(env.cfg),
            "--no-frame-ensemble", "--json",
        ]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert set(doc) == {"folds", "mean", "std"}
        assert set(doc["folds"]) == {"scene000", "scene001"}

    def test_grid_sweep(self, env, capsys):
        assert main([
            "eval", str(env.manifest), "--config", str(env.cfg),
            "--no-frame-ensemble", "--grid", "forest.trees=10,20", "--json",
        ]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert set(doc) == {"10", "20"}
        for report in doc.values():
            assert set(report) == {"folds", "mean", "std"}

    def test_bad_grid_key(self, env):
        assert main([
            "eval", str(env.manifest), "--config", str(env.cfg),
            "--no-frame-ensemble", "--grid", "nosuch.key=1",
        ]) == 2


class TestExtract:
    def test_csv_output(self, env):
        out = env.dir / "features.csv"
        assert main(["extract", str(env.clip), "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("frame,Y_entropy,")
        assert len(lines) == 5  # header + 4 frames
        assert lines[1].split(",")[0] == "0"

    def test_stdout_and_cloud_dump(self, env, capsys):
        cloud = env.dir / "cloud.csv"
        assert main(["extract", str(env.clip), "--dump-cloud", str(cloud)]) == 0
        assert capsys.readouterr().out.startswith("frame,")
        rows = cloud.read_text().strip().splitlines()
        assert rows[0] == "x,y"
        assert len(rows) > 10

    def test_raw_planar_input(self, env):
        video = read_y4m(env.clip.read_bytes())
        blob = b"".join(
            p.samples.astype("<u2").tobytes()
            for f in video.frames for p in f.planes
        )
        raw = env.dir / "clip.raw"
        raw.write_bytes(blob)
        out = env.dir / "raw_features.csv"
        assert main([
            "extract", str(raw), "--raw", "32x32x10",
            "--subsampling", "420", "--out", str(out),
        ]) == 0
        same = env.dir / "y4m_features.csv"
        assert main(["extract", str(env.clip), "--out", str(same)]) == 0
        assert out.read_text() == same.read_text()


class TestParseStream:
    def test_sidecar_file(self, env):
        src = env.dir / "gop.265"
        src.write_bytes(stream("IPBBP"))
        out = env.dir / "gop.csv"
        assert main(["parse-stream", str(src), "--out", str(out)]) == 0
        metas = read_frame_metadata(out.read_text())
        assert [m.frame_type.value for m in metas] == ["I", "P", "B", "B", "P"]
        assert sum(m.compressed_size for m in metas) == len(src.read_bytes())

    def test_stdout(self, env, capsys):
        src = env.dir / "tiny.265"
        src.write_bytes(stream("I"))
        assert main(["parse-stream", str(src)]) == 0
        assert capsys.readouterr().out.startswith("index,type,size")


class TestBench:
    def test_json(self, capsys):
        assert main([
            "bench", "--width", "64", "--height", "48", "--frames", "2", "--json",
        ]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert set(doc) == {"frames", "seconds", "fps", "width", "height", "bit_depth"}
        assert doc["frames"] == 2
        assert doc["fps"] > 0

    def test_text(self, capsys):
        assert main(["bench", "--width", "64", "--height", "48", "--frames", "2"]) == 0
        assert capsys.readouterr().out.startswith("2 frames at 64x48")


class TestExitCodes:
    def test_help_is_success(self, capsys):
        assert main(["--help"]) == 0
        assert "simulate" in capsys.readouterr().out

    def test_usage_errors(self, capsys):
        assert main([]) == 1
        assert main(["frobnicate"]) == 1
        assert main(["simulate"]) == 1  # --out is required
        capsys.readouterr()

    def test_detect_needs_a_source_of_model(self, env, capsys):
        assert main(["detect", str(env.clip)]) == 1
        assert "--bundle" in capsys.readouterr().err

    def test_missing_files(self, env, capsys):
        assert main([
            "detect", str(env.dir / "nope.y4m"), "--bundle", str(env.model),
        ]) == 2
        assert main(["train", str(env.dir / "nope.json"), "--out",
                     str(env.dir / "x.bin")]) == 2
        capsys.readouterr()

    def test_bad_data(self, env, capsys):
        junk = env.dir / "junk.y4m"
        junk.write_bytes(b"this is not a clip")
        assert main([
            "detect", str(junk), "--bundle", str(env.model), "--json",
        ]) == 2
        assert main([
            "simulate", "--out", str(env.dir / "q"), "--quantize", "9",
        ]) == 2
        err = capsys.readouterr().err
        assert "error:" in err
