import json

import numpy as np
import pytest

from scenefuse.errors import ParameterError
from scenefuse.evalharness import (
    BenchmarkManifest,
    BenchmarkSample,
    EvalRecord,
    assemble_benchmark,
    build_human_study_bundle,
    clip_score,
    cosine_similarity_100,
    hpsv2_score,
    load_key,
    lpips_score,
    run_eval,
    toy_scorers,
)
from scenefuse.images import save_image
from scenefuse.rng import RandomSource


def probe_image(seed: int, size: int = 64) -> np.ndarray:
    """Deterministic smooth test image: gradient plus soft blob."""
    rng = RandomSource(seed)
    base = np.zeros((size, size, 3), np.float64)
    ramp = np.linspace(60, 200, size)
    base[:, :, 0] = ramp[None, :]
    base[:, :, 1] = ramp[:, None]
    base[:, :, 2] = 120
    yy, xx = np.mgrid[0:size, 0:size]
    lo, hi = size // 4, size - size // 4
    cx, cy = rng.integers(lo, hi), rng.integers(lo, hi)
    blob = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / 200.0)
    base += 50 * blob[:, :, None]
    return np.clip(base, 0, 255).astype(np.uint8)


def corrupt(image: np.ndarray, amount: float, seed: int = 0) -> np.ndarray:
    noise = RandomSource(seed).draw_gaussian(image.shape).astype(np.float64)
    out = image.astype(np.float64) + 255.0 * amount * noise
    return np.clip(out, 0, 255).astype(np.uint8)


class TestMetrics:
    def test_cosine_of_self_is_100(self):
        v = RandomSource(1).draw_gaussian((32,))
        assert cosine_similarity_100(v, v) == pytest.approx(100.0)

    def test_orthogonal_embeddings_score_zero(self):
        a = np.zeros(4)
        a[0] = 1.0
        b = np.zeros(4)
        b[1] = 1.0
        assert cosine_similarity_100(a, b) == pytest.approx(0.0)

    def test_clip_score_empty_text_rejected(self):
        with pytest.raises(ParameterError):
            clip_score(probe_image(0), "", toy_scorers().clip)

    def test_clip_score_deterministic(self):
        scorers = toy_scorers()
        img = probe_image(3)
        a = clip_score(img, "a bicycle", scorers.clip)
        b = clip_score(img, "a bicycle", scorers.clip)
        assert a == b
        assert -100.0 <= a <= 100.0

    def test_lpips_identity_is_exact_zero(self):
        img = probe_image(2)
        assert lpips_score(img, img, toy_scorers().perceptual) == 0.0

    def test_lpips_symmetric(self):
        m = toy_scorers().perceptual
        a, b = probe_image(1), probe_image(2)
        assert lpips_score(a, b, m) == pytest.approx(lpips_score(b, a, m), abs=1e-6)

    def test_lpips_monotone_in_corruption(self):
        m = toy_scorers().perceptual
        img = probe_image(4)
        d10 = lpips_score(img, corrupt(img, 0.10), m)
        d50 = lpips_score(img, corrupt(img, 0.50), m)
        assert d50 > d10 > 0

    def test_lpips_degenerate_inputs_finite(self):
        m = toy_scorers().perceptual
        flat = np.full((32, 32, 3), 128, np.uint8)
        assert lpips_score(flat, flat, m) == 0.0
        assert np.isfinite(lpips_score(flat, probe_image(1, 32), m))

    def test_lpips_resizes_mismatched_dims(self):
        m = toy_scorers().perceptual
        assert np.isfinite(lpips_score(probe_image(1, 64), probe_image(1, 32), m))

    def test_hpsv2_deterministic(self):
        s = toy_scorers().preference
        img = probe_image(5)
        assert hpsv2_score(img, "a photo", s) == hpsv2_score(img, "a photo", s)

    def test_hpsv2_prefers_clean_over_noisy(self):
        s = toy_scorers().preference
        wins = 0
        for seed in range(10):
            img = probe_image(seed + 10)
            clean = hpsv2_score(img, "a photo", s)
            noisy = hpsv2_score(corrupt(img, 0.5, seed), "a photo", s)
            wins += clean > noisy
        assert wins >= 9


class TestEvalRecordValidation:
    def test_negative_lpips_rejected(self):
        with pytest.raises(ParameterError):
            EvalRecord("s", "m", clip=10.0, hpsv2=0.1, lpips=-0.1, artifact="x")

    def test_clip_out_of_range_rejected(self):
        with pytest.raises(ParameterError):
            EvalRecord("s", "m", clip=150.0, hpsv2=0.1, lpips=0.1, artifact="x")


def build_toy_source(tmp_path, name, n, contains_object_idx=()):
    d = tmp_path / name
    d.mkdir()
    meta = {}
    for i in range(n):
        fname = f"img_{i:03d}.png"
        save_image(probe_image(i), d / fname)
        if i in contains_object_idx:
            meta[fname] = {"contains_object": True}
    if meta:
        (d / "metadata.json").write_text(json.dumps(meta))
    return d


class TestAssembleBenchmark:
    def test_filter_removes_flagged_samples(self, tmp_path):
        src = build_toy_source(tmp_path, "tficon", 10, contains_object_idx=(1, 4, 7))
        manifest = assemble_benchmark({"tficon": {"dir": str(src)}}, seed=0)
        assert len(manifest.samples) == 7
        assert manifest.provenance["filtered_out"]["tficon"] == 3

    def test_exact_per_category_sampling(self, tmp_path):
        cats = {}
        for cat in ("bikes", "cars", "products"):
            cats[cat] = {"dir": str(build_toy_source(tmp_path, cat, 30))}
        manifest = assemble_benchmark({"categories": cats, "per_category": 20}, seed=5)
        counts = manifest.category_counts()
        assert counts == {"bikes": 20, "cars": 20, "products": 20}

    def test_fixed_seed_reproducible(self, tmp_path):
        cats = {"bikes": {"dir": str(build_toy_source(tmp_path, "bikes", 25))}}
        m1 = assemble_benchmark({"categories": cats}, seed=3)
        m2 = assemble_benchmark({"categories": cats}, seed=3)
        assert [s.object_ref for s in m1.samples] == [s.object_ref for s in m2.samples]

    def test_missing_sources_listed_by_name(self, tmp_path):
        with pytest.raises(ParameterError) as err:
            assemble_benchmark({
                "tficon": {"dir": str(tmp_path / "nope1")},
                "categories": {"cars": {"dir": str(tmp_path / "nope2")}},
            }, seed=0)
        msg = str(err.value)
        assert "nope1" in msg and "nope2" in msg

    def test_insufficient_category_images(self, tmp_path):
        cats = {"bikes": {"dir": str(build_toy_source(tmp_path, "bikes", 5))}}
        with pytest.raises(ParameterError, match="need 20"):
            assemble_benchmark({"categories": cats}, seed=0)

    def test_manifest_round_trip(self, tmp_path):
        cats = {"bikes": {"dir": str(build_toy_source(tmp_path, "bikes", 21))}}
        manifest = assemble_benchmark({"categories": cats}, seed=1)
        path = tmp_path / "manifest.jsonl"
        manifest.save(path)
        back = BenchmarkManifest.load(path)
        assert back.seed == manifest.seed
        assert [s.to_dict() for s in back.samples] == [s.to_dict() for s in manifest.samples]


class TestRunEval:
    def make_manifest_and_outputs(self, tmp_path, n=4):
        objects = tmp_path / "objects"
        objects.mkdir()
        outputs = tmp_path / "outputs"
        outputs.mkdir()
        samples = []
        for i in range(n):
            ref = objects / f"obj_{i}.png"
            save_image(probe_image(i + 40), ref)
            sid = f"cat{'AB'[i % 2]}_{i:03d}"
            samples.append(BenchmarkSample(
                sample_id=sid, category="catA" if i % 2 == 0 else "catB",
                object_ref=str(ref),
                prompt_spec={"prompt": "a photo of a thing"},
            ))
            save_image(probe_image(i + 40), outputs / f"{sid}.png")
        return BenchmarkManifest(samples=samples, seed=0), outputs

    def test_identical_outputs_zero_lpips(self, tmp_path):
        manifest, outputs = self.make_manifest_and_outputs(tmp_path)
        report = run_eval(manifest, outputs, toy_scorers())
        assert len(report.records) == 4
        assert all(r.lpips == 0.0 for r in report.records)

    def test_overall_mean_is_plain_mean(self, tmp_path):
        manifest, outputs = self.make_manifest_and_outputs(tmp_path)
        report = run_eval(manifest, outputs, toy_scorers())
        agg = report.aggregates()
        by_hand = float(np.mean([r.clip for r in report.records]))
        assert agg["overall"]["clip"] == pytest.approx(by_hand, rel=1e-12)

    def test_category_aggregation_matches_hand_computation(self, tmp_path):
        manifest, outputs = self.make_manifest_and_outputs(tmp_path)
        report = run_eval(manifest, outputs, toy_scorers())
        agg = report.aggregates()
        for cat in ("catA", "catB"):
            recs = [r for r in report.records
                    if report.categories[r.sample_id] == cat]
            assert agg[cat]["hpsv2"] == pytest.approx(
                float(np.mean([r.hpsv2 for r in recs])), rel=1e-12)
            assert agg[cat]["count"] == 2

    def test_missing_outputs_reported_not_skipped(self, tmp_path):
        manifest, outputs = self.make_manifest_and_outputs(tmp_path)
        (outputs / f"{manifest.samples[0].sample_id}.png").unlink()
        report = run_eval(manifest, outputs, toy_scorers())
        assert report.missing == [manifest.samples[0].sample_id]
        assert len(report.records) == 3

    def test_report_files(self, tmp_path):
        manifest, outputs = self.make_manifest_and_outputs(tmp_path)
        report = run_eval(manifest, outputs, toy_scorers())
        report.save_jsonl(tmp_path / "report.jsonl")
        report.save_csv(tmp_path / "report.csv")
        lines = (tmp_path / "report.jsonl").read_text().splitlines()
        assert json.loads(lines[0])["record"] == "report_header"
        assert len(lines) == 1 + len(report.records)
        csv_text = (tmp_path / "report.csv").read_text()
        assert csv_text.splitlines()[0] == "Dataset,Model,CLIP,HPSv2,LPIPS,Count"
        assert "overall" in csv_text


class TestStudyBundle:
    def make_bundle_inputs(self, tmp_path, per_category=2, n_per_cat=4):
        samples = []
        objects = tmp_path / "objects"
        objects.mkdir()
        methods = {}
        for cat in ("bikes", "cars", "products"):
            for i in range(n_per_cat):
                sid = f"{cat}_{i:03d}"
                ref = objects / f"{sid}.png"
                save_image(probe_image(hash(sid) % 100), ref)
                samples.append(BenchmarkSample(sample_id=sid, category=cat,
                                               object_ref=str(ref)))
        manifest = BenchmarkManifest(samples=samples, seed=0)
        for method in ("ours", "baseline"):
            mdir = tmp_path / method
            mdir.mkdir()
            for s in samples:
                save_image(probe_image(hash(method + s.sample_id) % 100),
                           mdir / f"{s.sample_id}.png")
            methods[method] = str(mdir)
        return manifest, methods

    def test_key_inverts_shuffle(self, tmp_path):
        manifest, methods = self.make_bundle_inputs(tmp_path)
        out = tmp_path / "bundle"
        build_human_study_bundle(manifest, methods, out, per_category=2, seed=4)
        key = load_key(out)
        assert len(key["pages"]) == 6  # 2 per category x 3 categories
        from scenefuse.images import file_digest

        for page, info in key["pages"].items():
            for letter, method in info["methods"].items():
                page_file = out / "pages" / page / f"{letter}.png"
                source = tmp_path / method / f"{info['sample_id']}.png"
                assert file_digest(page_file) == file_digest(source)

    def test_different_seeds_differ(self, tmp_path):
        manifest, methods = self.make_bundle_inputs(tmp_path)
        build_human_study_bundle(manifest, methods, tmp_path / "b1", 2, seed=1)
        build_human_study_bundle(manifest, methods, tmp_path / "b2", 2, seed=2)
        k1 = load_key(tmp_path / "b1")["pages"]
        k2 = load_key(tmp_path / "b2")["pages"]
        order1 = [v["sample_id"] for v in k1.values()]
        order2 = [v["sample_id"] for v in k2.values()]
        letters1 = [tuple(sorted(v["methods"].items())) for v in k1.values()]
        letters2 = [tuple(sorted(v["methods"].items())) for v in k2.values()]
        assert order1 != order2 or letters1 != letters2

    def test_per_category_selection_honored(self, tmp_path):
        manifest, methods = self.make_bundle_inputs(tmp_path, n_per_cat=8)
        out = tmp_path / "bundle7"
        build_human_study_bundle(manifest, methods, out, per_category=7, seed=0)
        key = load_key(out)
        cats = [v["category"] for v in key["pages"].values()]
        assert all(cats.count(c) == 7 for c in ("bikes", "cars", "products"))

    def test_incomplete_coverage_rejected(self, tmp_path):
        manifest, methods = self.make_bundle_inputs(tmp_path)
        victim = next(iter(methods.values()))
        (list((tmp_path / "ours").glob("*.png"))[0]).unlink()
        with pytest.raises(ParameterError, match="missing method outputs"):
            build_human_study_bundle(manifest, methods, tmp_path / "bundle", 2, seed=0)

    def test_single_method_rejected(self, tmp_path):
        manifest, methods = self.make_bundle_inputs(tmp_path)
        with pytest.raises(ParameterError):
            build_human_study_bundle(manifest, {"ours": methods["ours"]},
                                     tmp_path / "bundle", 2, seed=0)
