from .benchmark import BenchmarkManifest, BenchmarkSample, assemble_benchmark
from .metrics import clip_score, cosine_similarity_100, hpsv2_score, lpips_score
from .report import EvalRecord, EvalReport, run_eval
from .scorers import (
    ScorerSet,
    ToyClipScorer,
    ToyPerceptualMetric,
    ToyPreferenceScorer,
    toy_scorers,
)
from .study import build_human_study_bundle, load_key

__all__ = [
    "BenchmarkManifest",
    "BenchmarkSample",
    "EvalRecord",
    "EvalReport",
    "ScorerSet",
    "ToyClipScorer",
    "ToyPerceptualMetric",
    "ToyPreferenceScorer",
    "assemble_benchmark",
    "build_human_study_bundle",
    "clip_score",
    "cosine_similarity_100",
    "hpsv2_score",
    "load_key",
    "lpips_score",
    "run_eval",
    "toy_scorers",
]
