"""Blind-randomized bundles for human evaluation.

Each page shows every method's output for one sample under shuffled
anonymous letters; the page order is shuffled too. The mapping back to
methods lives only in a sealed key file next to (not inside) the pages.
"""

from __future__ import annotations

import json
import shutil
import string
from pathlib import Path

from ..errors import ParameterError
from ..rng import RandomSource
from .benchmark import BenchmarkManifest

DEFAULT_PER_CATEGORY = 7
KEY_FILE = "key.json"


def build_human_study_bundle(
    manifest: BenchmarkManifest,
    methods: dict[str, str | Path],
    out_dir: str | Path,
    per_category: int = DEFAULT_PER_CATEGORY,
    seed: int = 0,
) -> Path:
    """Create ``out_dir/pages/page_###/<letter>.png`` plus a sealed key file.

    ``methods`` maps method name -> directory holding ``<sample_id>.png``
    outputs. Incomplete coverage for any selected sample is an error.
    """
    if len(methods) < 2:
        raise ParameterError("a blind study needs at least two methods")
    out_dir = Path(out_dir)
    rng = RandomSource(seed)

    by_category: dict[str, list] = {}
    for s in manifest.samples:
        by_category.setdefault(s.category, []).append(s)

    selected = []
    for cat in sorted(by_category):
        pool = by_category[cat]
        if len(pool) < per_category:
            raise ParameterError(
                f"category {cat!r} has {len(pool)} samples, need {per_category}"
            )
        selected.extend(rng.shuffled(pool)[:per_category])

    # verify full method coverage before writing anything
    incomplete = []
    for s in selected:
        for method, mdir in methods.items():
            if not (Path(mdir) / f"{s.sample_id}.png").exists():
                incomplete.append(f"{method}/{s.sample_id}.png")
    if incomplete:
        raise ParameterError("missing method outputs:\n  " + "\n  ".join(incomplete))

    pages_dir = out_dir / "pages"
    pages_dir.mkdir(parents=True, exist_ok=True)
    letters = string.ascii_uppercase

    key: dict[str, dict] = {}
    page_order = rng.shuffled(selected)
    for page_idx, sample in enumerate(page_order):
        page_name = f"page_{page_idx:03d}"
        page_dir = pages_dir / page_name
        page_dir.mkdir(parents=True, exist_ok=True)
        shuffled_methods = rng.shuffled(sorted(methods))
        assignment = {}
        for letter, method in zip(letters, shuffled_methods):
            src = Path(methods[method]) / f"{sample.sample_id}.png"
            shutil.copyfile(src, page_dir / f"{letter}.png")
            assignment[letter] = method
        key[page_name] = {
            "sample_id": sample.sample_id,
            "category": sample.category,
            "methods": assignment,
        }

    (out_dir / KEY_FILE).write_text(json.dumps(
        {"seed": seed, "per_category": per_category, "pages": key}, indent=2
    ))
    return out_dir


def load_key(bundle_dir: str | Path) -> dict:
    return json.loads((Path(bundle_dir) / KEY_FILE).read_text())
