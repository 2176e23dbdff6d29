"""Scoring runs over method outputs, with per-category and overall means."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ParameterError
from ..images import load_image
from .benchmark import BenchmarkManifest
from .metrics import RESIZE_POLICY, clip_score, hpsv2_score, lpips_score
from .scorers import ScorerSet

METRIC_NAMES = ("clip", "hpsv2", "lpips")


@dataclass(frozen=True)
class EvalRecord:
    sample_id: str
    method_id: str
    clip: float
    hpsv2: float
    lpips: float
    artifact: str

    def __post_init__(self):
        if self.lpips < 0:
            raise ParameterError(f"lpips must be >= 0, got {self.lpips}")
        if not -100.0 <= self.clip <= 100.0:
            raise ParameterError(f"clip score must be in [-100, 100], got {self.clip}")

    def to_dict(self) -> dict:
        return {"record": "eval", "sample_id": self.sample_id,
                "method_id": self.method_id, "clip": self.clip,
                "hpsv2": self.hpsv2, "lpips": self.lpips, "artifact": self.artifact}


@dataclass
class EvalReport:
    method_id: str
    records: list[EvalRecord]
    missing: list[str]
    errors: list[dict]
    scorer_name: str
    crop_object: bool
    categories: dict[str, str] = field(default_factory=dict)  # sample_id -> category

    def aggregates(self) -> dict[str, dict[str, float]]:
        """Per-category and overall plain means of the per-sample records."""
        groups: dict[str, list[EvalRecord]] = {}
        for r in self.records:
            cat = self.categories.get(r.sample_id, "unknown")
            groups.setdefault(cat, []).append(r)
        groups["overall"] = list(self.records)
        out = {}
        for cat, recs in sorted(groups.items()):
            if not recs:
                continue
            out[cat] = {m: float(np.mean([getattr(r, m) for r in recs]))
                        for m in METRIC_NAMES}
            out[cat]["count"] = len(recs)
        return out

    def save_jsonl(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            header = {
                "record": "report_header", "method_id": self.method_id,
                "scorer": self.scorer_name, "crop_object": self.crop_object,
                "resize_policy": RESIZE_POLICY,
                "missing": self.missing, "errors": self.errors,
                "aggregates": self.aggregates(),
            }
            fh.write(json.dumps(header) + "\n")
            for r in self.records:
                fh.write(json.dumps(r.to_dict()) + "\n")

    def save_csv(self, path: str | Path) -> None:
        """Comparison-table layout: one row per (dataset, method)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["Dataset", "Model", "CLIP", "HPSv2", "LPIPS", "Count"])
            for cat, agg in self.aggregates().items():
                writer.writerow([
                    cat, self.method_id,
                    f"{agg['clip']:.3f}", f"{agg['hpsv2']:.3f}", f"{agg['lpips']:.3f}",
                    agg["count"],
                ])


def _crop_bbox(image: np.ndarray, bbox: dict) -> np.ndarray:
    x, y = bbox["x"], bbox["y"]
    w, h = bbox["width"], bbox["height"]
    return image[y : y + h, x : x + w]


def run_eval(
    manifest: BenchmarkManifest,
    outputs_dir: str | Path,
    scorers: ScorerSet,
    method_id: str = "ours",
    crop_object: bool = False,
) -> EvalReport:
    """Score one output per manifest sample.

    Outputs are looked up as ``<outputs_dir>/<sample_id>.png``. Missing or
    unscoreable outputs land in the report's ``missing``/``errors`` lists,
    never silently dropped.
    """
    outputs_dir = Path(outputs_dir)
    records: list[EvalRecord] = []
    missing: list[str] = []
    errors: list[dict] = []
    categories: dict[str, str] = {}

    for sample in manifest.samples:
        categories[sample.sample_id] = sample.category
        out_path = outputs_dir / f"{sample.sample_id}.png"
        if not out_path.exists():
            missing.append(sample.sample_id)
            continue
        try:
            output = load_image(out_path)
            prompt = sample.prompt_spec.get("prompt") or _default_prompt(sample)
            reference_path = sample.reference_ref or sample.object_ref
            reference = load_image(reference_path)
            compared = output
            if crop_object and sample.placement and "bbox" in sample.placement:
                compared = _crop_bbox(output, sample.placement["bbox"])
            records.append(EvalRecord(
                sample_id=sample.sample_id,
                method_id=method_id,
                clip=clip_score(output, prompt, scorers.clip),
                hpsv2=hpsv2_score(output, prompt, scorers.preference),
                lpips=lpips_score(compared, reference, scorers.perceptual),
                artifact=str(out_path),
            ))
        except Exception as exc:
            errors.append({"sample_id": sample.sample_id, "error": str(exc)})

    return EvalReport(
        method_id=method_id, records=records, missing=missing, errors=errors,
        scorer_name=scorers.name, crop_object=crop_object, categories=categories,
    )


def _default_prompt(sample) -> str:
    spec = sample.prompt_spec
    bits = [spec.get("color", ""), spec.get("product_type", "object")]
    place = sample.background_prompt or spec.get("place", "")
    text = " ".join(b for b in bits if b)
    return f"a photo of a {text} in {place}" if place else f"a photo of a {text}"
