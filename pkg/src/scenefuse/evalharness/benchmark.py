"""Benchmark manifest assembly.

Sources are user-provided local directories (never downloaded). A source may
carry a ``metadata.json`` mapping filenames to attributes; samples flagged
``contains_object`` are filtered out of the cross-domain set, mirroring how
the composition benchmark prunes images that already hold a replaceable
object. Custom categories are sampled to a fixed count with a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ParameterError
from ..rng import RandomSource

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".webp", ".bmp")
DEFAULT_PER_CATEGORY = 20


@dataclass(frozen=True)
class BenchmarkSample:
    sample_id: str
    category: str
    object_ref: str
    background_ref: str | None = None
    background_prompt: str | None = None
    prompt_spec: dict = field(default_factory=dict)
    placement: dict | None = None
    reference_ref: str | None = None

    def to_dict(self) -> dict:
        return {
            "record": "sample",
            "sample_id": self.sample_id,
            "category": self.category,
            "object_ref": self.object_ref,
            "background_ref": self.background_ref,
            "background_prompt": self.background_prompt,
            "prompt_spec": self.prompt_spec,
            "placement": self.placement,
            "reference_ref": self.reference_ref,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkSample":
        d = {k: v for k, v in d.items() if k != "record"}
        return cls(**d)


@dataclass
class BenchmarkManifest:
    samples: list[BenchmarkSample]
    seed: int
    provenance: dict = field(default_factory=dict)

    def category_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for s in self.samples:
            counts[s.category] = counts.get(s.category, 0) + 1
        return counts

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            header = {
                "record": "manifest_header",
                "seed": self.seed,
                "category_counts": self.category_counts(),
                "provenance": self.provenance,
            }
            fh.write(json.dumps(header) + "\n")
            for s in self.samples:
                fh.write(json.dumps(s.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "BenchmarkManifest":
        samples, seed, provenance = [], 0, {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                if rec.get("record") == "manifest_header":
                    seed = rec.get("seed", 0)
                    provenance = rec.get("provenance", {})
                elif rec.get("record") == "sample":
                    samples.append(BenchmarkSample.from_dict(rec))
        return cls(samples=samples, seed=seed, provenance=provenance)


def _list_images(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir()
                  if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file())


def _load_metadata(directory: Path) -> dict:
    meta_path = directory / "metadata.json"
    if meta_path.exists():
        return json.loads(meta_path.read_text())
    return {}


def assemble_benchmark(sources: dict, seed: int = 0) -> BenchmarkManifest:
    """Build a manifest from a sources config::

        {
          "tficon": {"dir": "...", "filter_contains_object": true},   # optional
          "categories": {"bikes": {"dir": "..."}, ...},               # optional
          "per_category": 20,
          "background_prompts": ["a city street", ...],               # optional
          "backgrounds_dir": "...",                                   # optional
        }

    Missing source directories are reported together, by name.
    """
    rng = RandomSource(seed)
    missing: list[str] = []
    samples: list[BenchmarkSample] = []
    provenance: dict = {"filtered_out": {}}

    tficon = sources.get("tficon")
    categories = sources.get("categories", {})
    if not tficon and not categories:
        raise ParameterError("sources config names no 'tficon' set and no 'categories'")

    for name, conf in [("tficon", tficon)] if tficon else []:
        directory = Path(conf["dir"])
        if not directory.is_dir():
            missing.append(f"{name}: {directory}")
    for cat, conf in categories.items():
        directory = Path(conf["dir"])
        if not directory.is_dir():
            missing.append(f"categories.{cat}: {directory}")
    backgrounds_dir = sources.get("backgrounds_dir")
    if backgrounds_dir and not Path(backgrounds_dir).is_dir():
        missing.append(f"backgrounds_dir: {backgrounds_dir}")
    if missing:
        raise ParameterError("missing benchmark sources:\n  " + "\n  ".join(missing))

    background_files = _list_images(Path(backgrounds_dir)) if backgrounds_dir else []
    background_prompts = sources.get("background_prompts", [])

    def pick_background(k: int):
        if background_files:
            return str(background_files[int(rng.integers(0, len(background_files)))]), None
        if background_prompts:
            return None, background_prompts[int(rng.integers(0, len(background_prompts)))]
        return None, None

    if tficon:
        directory = Path(tficon["dir"])
        meta = _load_metadata(directory)
        files = _list_images(directory)
        kept, dropped = [], 0
        for f in files:
            if tficon.get("filter_contains_object", True) and \
                    meta.get(f.name, {}).get("contains_object", False):
                dropped += 1
                continue
            kept.append(f)
        provenance["filtered_out"]["tficon"] = dropped
        for i, f in enumerate(kept):
            bg_ref, bg_prompt = pick_background(i)
            samples.append(BenchmarkSample(
                sample_id=f"tficon_{i:04d}", category="tficon", object_ref=str(f),
                background_ref=bg_ref, background_prompt=bg_prompt,
                prompt_spec=meta.get(f.name, {}).get("prompt_spec", {}),
            ))

    per_category = int(sources.get("per_category", DEFAULT_PER_CATEGORY))
    for cat in sorted(categories):
        directory = Path(categories[cat]["dir"])
        meta = _load_metadata(directory)
        files = _list_images(directory)
        if len(files) < per_category:
            raise ParameterError(
                f"category {cat!r} has {len(files)} images, need {per_category}"
            )
        chosen = rng.shuffled(files)[:per_category]
        for i, f in enumerate(sorted(chosen)):
            bg_ref, bg_prompt = pick_background(i)
            samples.append(BenchmarkSample(
                sample_id=f"{cat}_{i:04d}", category=cat, object_ref=str(f),
                background_ref=bg_ref, background_prompt=bg_prompt,
                prompt_spec=meta.get(f.name, {}).get("prompt_spec", {}),
            ))

    provenance["sources"] = {k: str(v.get("dir")) for k, v in categories.items()}
    if tficon:
        provenance["sources"]["tficon"] = str(tficon["dir"])
    return BenchmarkManifest(samples=samples, seed=seed, provenance=provenance)
