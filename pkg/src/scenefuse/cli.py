"""Command-line entry points mirroring the pipeline workflows and ablations.

Every pipeline constant is a flag with its reference default; outputs land
in a run directory that is finalized atomically (a failed run leaves
nothing behind).
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
import uuid
from pathlib import Path

import numpy as np

from .adapters.registry import ModelRegistry, cache_root
from .errors import AdapterError, ParameterError, StageError
from .images import load_image, save_image
from .masks import make_mask
from .pipeline import PipelineConfig, PlacementSpec, PromptSpec, render_prompt
from .pipeline import runner as pipeline_runner
from .pipeline.colorize import colorize as colorize_op
from .pipeline.config import TemplateId

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    defaults = PipelineConfig()
    p.add_argument("--config", default=None,
                   help="pipeline config file (key = value INI); explicit flags override it")
    p.add_argument("--compose-steps", type=int, default=defaults.compose_steps,
                   help="diffusion steps for the intermediate composition")
    p.add_argument("--compose-guidance", type=float, default=defaults.compose_guidance,
                   help="prompt-guidance strength for composition")
    p.add_argument("--refine-inference-steps", type=int,
                   default=defaults.refine_inference_steps,
                   help="total steps in the refinement plan")
    p.add_argument("--refine-noise-steps", type=int, default=defaults.refine_noise_steps,
                   help="how many plan steps of noise to add before refining")
    p.add_argument("--refine-guidance", type=float, default=defaults.refine_guidance,
                   help="prompt-guidance strength for refinement")
    p.add_argument("--colorize-steps", type=int, default=defaults.colorize_steps,
                   help="diffusion steps for colorization")
    p.add_argument("--colorize-strength", type=float, default=defaults.colorize_strength,
                   help="image-to-image strength for colorization")
    p.add_argument("--colorize-guidance", type=float, default=defaults.colorize_guidance,
                   help="prompt-guidance strength for colorization")
    p.add_argument("--upscale-factor", type=int, default=defaults.upscale_factor,
                   help="upscaling factor applied before colorizing small images")
    p.add_argument("-k", "--variants-k", type=int, default=defaults.variants_k,
                   help="variants per run (interactive mode defaults to 5)")
    p.add_argument("--seed", type=int, default=defaults.seed, help="run seed")
    p.add_argument("--no-refine", action="store_true",
                   help="stop at the intermediate composition (ablation arm)")
    p.add_argument("--colorize", choices=["auto", "force", "off"], default=defaults.colorize,
                   help="colorization trigger mode")
    p.add_argument("--update-mode", choices=["scheduler", "literal"],
                   default=defaults.update_mode, help="denoising update rule")
    p.add_argument("--mask-threshold", type=float, default=None,
                   help="object mask brightness threshold (default: 95%% of max)")
    p.add_argument("--toy-adapters", action="store_true",
                   help="run with the deterministic weight-free adapters")


FLAG_TO_FIELD = {
    "compose_steps": "compose_steps",
    "compose_guidance": "compose_guidance",
    "refine_inference_steps": "refine_inference_steps",
    "refine_noise_steps": "refine_noise_steps",
    "refine_guidance": "refine_guidance",
    "colorize_steps": "colorize_steps",
    "colorize_strength": "colorize_strength",
    "colorize_guidance": "colorize_guidance",
    "upscale_factor": "upscale_factor",
    "variants_k": "variants_k",
    "seed": "seed",
    "no_refine": "no_refine",
    "colorize": "colorize",
    "update_mode": "update_mode",
    "mask_threshold": "mask_threshold",
}


def _config_from_args(args) -> PipelineConfig:
    """Config file (if any) is the base; explicitly passed flags override."""
    explicit: set[str] = getattr(args, "_explicit", set())
    if args.config:
        base = PipelineConfig.load_ini(args.config).to_dict()
    else:
        base = None

    values = {}
    for dest, field in FLAG_TO_FIELD.items():
        if base is None or dest in explicit:
            values[field] = getattr(args, dest)
    if base is not None:
        base.update(values)
        values = base

    if getattr(args, "interactive", False) and values.get("variants_k", 1) == 1:
        values["variants_k"] = PipelineConfig.INTERACTIVE_K
    return PipelineConfig.from_dict(values) if base is not None else PipelineConfig(**values)


def _adapters_from_args(args):
    if getattr(args, "toy_adapters", False):
        from .adapters.toy import toy_adapters

        return toy_adapters()
    from .adapters.real import real_adapters, weights_available

    if weights_available():
        return real_adapters()
    print("note: pretrained weights not cached; falling back to toy adapters "
          "(run `scenefuse fetch-models` or pass --toy-adapters to silence)",
          file=sys.stderr)
    from .adapters.toy import toy_adapters

    return toy_adapters()


def _stdin_selector(stage: str, images: list[np.ndarray]) -> int:
    sheet = _contact_sheet(images)
    sheet_path = Path(tempfile.gettempdir()) / f"scenefuse_{stage}_choices.png"
    save_image(sheet, sheet_path)
    print(f"[{stage}] {len(images)} candidates; contact sheet: {sheet_path}")
    while True:
        raw = input(f"select variant for {stage} [0-{len(images) - 1}]: ").strip()
        try:
            idx = int(raw)
            if 0 <= idx < len(images):
                return idx
        except ValueError:
            pass
        print(f"enter a number between 0 and {len(images) - 1}")


def _contact_sheet(images: list[np.ndarray], pad: int = 4) -> np.ndarray:
    h = max(im.shape[0] for im in images)
    w = max(im.shape[1] for im in images)
    sheet = np.full((h + 2 * pad, (w + pad) * len(images) + pad, 3), 255, np.uint8)
    for i, im in enumerate(images):
        x = pad + i * (w + pad)
        sheet[pad : pad + im.shape[0], x : x + im.shape[1]] = im
    return sheet


def _atomic_run_dir(out: str):
    """Context: yields a temp dir, renamed to the target only on success."""

    class _Ctx:
        def __enter__(self):
            self.final = Path(out)
            if self.final.exists():
                raise ParameterError(f"output directory already exists: {self.final}")
            self.tmp = self.final.parent / f".tmp-{uuid.uuid4().hex[:8]}-{self.final.name}"
            self.tmp.mkdir(parents=True)
            return self.tmp

        def __exit__(self, exc_type, exc, tb):
            if exc_type is None:
                self.tmp.rename(self.final)
            else:
                shutil.rmtree(self.tmp, ignore_errors=True)
            return False

    return _Ctx()


# --- subcommands -----------------------------------------------------------


def cmd_insert(args) -> int:
    cfg = _config_from_args(args)
    adapters = _adapters_from_args(args)
    obj = load_image(args.object)
    bg = load_image(args.background) if args.background else None

    if bg is not None:
        h, w = bg.shape[:2]
        canvas = ((w // 8) * 8, (h // 8) * 8)
    else:
        if not args.canvas:
            raise ParameterError("--canvas WxH is required without --background")
        w, h = (int(v) for v in args.canvas.lower().split("x"))
        canvas = (w, h)

    placement = PlacementSpec(x=args.x, y=args.y, scale=args.scale, canvas_size=canvas)
    spec = PromptSpec(product_type=args.product_type, color=args.color,
                      place=args.place, template_id=TemplateId.INSERTION)
    selector = _stdin_selector if args.interactive else None

    with _atomic_run_dir(args.out) as run_dir:
        result = pipeline_runner.insert(
            obj, bg, placement, spec, cfg, adapters, out_dir=run_dir, selector=selector
        )
    print(f"run complete: {len(result.images)} output(s) in {args.out}")
    for i, digest in enumerate(result.manifest["outputs"]):
        print(f"  variants/final_{i}.png  {digest[:16]}")
    return EXIT_OK


def cmd_generate_bg(args) -> int:
    adapters = _adapters_from_args(args)
    w, h = (int(v) for v in args.size.lower().split("x"))
    image = adapters.bg_generator.generate(args.prompt, args.seed, (w, h))
    save_image(image, args.out)
    print(f"background written to {args.out}")
    return EXIT_OK


def cmd_colorize(args) -> int:
    cfg = _config_from_args(args)
    adapters = _adapters_from_args(args)
    from .rng import RandomSource

    obj = load_image(args.object)
    spec = PromptSpec(product_type=args.product_type, color=args.color,
                      place="", template_id=TemplateId.COLORIZATION)
    out = colorize_op(obj, spec, cfg, adapters, RandomSource(cfg.seed))
    save_image(out, args.out)
    print(f"colorized image written to {args.out}")
    return EXIT_OK


def cmd_segment(args) -> int:
    adapters = _adapters_from_args(args)
    image = load_image(args.image)
    mask = adapters.segmenter.segment(image, args.category)
    save_image(np.stack([mask.data * 255] * 3, axis=2), args.out)
    print(f"mask written to {args.out} (coverage {mask.coverage():.3f})")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .evalharness import BenchmarkManifest, run_eval, toy_scorers

    manifest = BenchmarkManifest.load(args.manifest)
    if args.real_scorers:
        from .evalharness.scorers import real_scorers

        scorers = real_scorers()
    else:
        scorers = toy_scorers()
    report = run_eval(manifest, args.outputs, scorers,
                      method_id=args.method_id, crop_object=args.crop_object)
    out = Path(args.out)
    report.save_jsonl(out / "report.jsonl")
    report.save_csv(out / "report.csv")
    for cat, agg in report.aggregates().items():
        print(f"{cat:>12}: CLIP {agg['clip']:7.3f}  HPSv2 {agg['hpsv2']:6.3f}  "
              f"LPIPS {agg['lpips']:6.3f}  (n={agg['count']})")
    if report.missing:
        print(f"missing outputs for {len(report.missing)} sample(s): "
              f"{', '.join(report.missing[:5])}{'...' if len(report.missing) > 5 else ''}")
    return EXIT_OK if not report.missing and not report.errors else EXIT_FAILURE


def cmd_bench_assemble(args) -> int:
    from .evalharness import assemble_benchmark

    sources = json.loads(Path(args.sources).read_text())
    manifest = assemble_benchmark(sources, seed=args.seed)
    manifest.save(args.out)
    counts = manifest.category_counts()
    print(f"manifest with {len(manifest.samples)} samples -> {args.out}")
    for cat, n in sorted(counts.items()):
        print(f"  {cat}: {n}")
    return EXIT_OK


def cmd_study_bundle(args) -> int:
    from .evalharness import BenchmarkManifest, build_human_study_bundle

    manifest = BenchmarkManifest.load(args.manifest)
    methods = {}
    for item in args.method:
        name, _, directory = item.partition("=")
        if not directory:
            raise ParameterError(f"--method expects NAME=DIR, got {item!r}")
        methods[name] = directory
    build_human_study_bundle(manifest, methods, args.out,
                             per_category=args.per_category, seed=args.seed)
    print(f"study bundle written to {args.out} (key: {args.out}/key.json)")
    return EXIT_OK


def cmd_fetch_models(args) -> int:
    registry = (ModelRegistry.load(args.registry) if args.registry
                else ModelRegistry.default())
    root = cache_root()
    try:
        from huggingface_hub import snapshot_download
    except ImportError:
        print("fetch-models needs huggingface_hub; install `pip install scenefuse[real]`",
              file=sys.stderr)
        return EXIT_FAILURE
    failures = 0
    for role, entry in sorted(registry.entries.items()):
        target = entry.local_path(role, root)
        if target.is_dir() and any(target.iterdir()):
            print(f"{role}: cached at {target}")
            continue
        print(f"{role}: fetching {entry.identifier}@{entry.revision} -> {target}")
        try:
            snapshot_download(entry.identifier, revision=entry.revision,
                              local_dir=str(target))
        except Exception as exc:
            print(f"{role}: FAILED ({exc})", file=sys.stderr)
            failures += 1
    registry.save(root / "registry.ini")
    return EXIT_FAILURE if failures else EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    adapter_factory = None
    if args.toy_adapters:
        from .adapters.toy import toy_adapters

        adapter_factory = toy_adapters
    app = create_app(args.data_dir, workers=args.workers,
                     adapter_factory=adapter_factory)
    frontend = Path(args.frontend) if args.frontend else None
    if frontend and frontend.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(frontend), html=True), name="ui")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_replay(args) -> int:
    adapters = None
    if args.toy_adapters:
        from .adapters.toy import toy_adapters

        adapters = toy_adapters()
    report = pipeline_runner.replay(args.manifest, adapters=adapters)
    print(report.summary())
    return EXIT_OK if report.matched else EXIT_FAILURE


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenefuse",
        description="Training-free object insertion via masked latent diffusion",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text,
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.set_defaults(fn=fn)
        return p

    p = add("insert", cmd_insert, "insert an object into an existing or new background")
    p.add_argument("--object", required=True, help="object image (bright background)")
    p.add_argument("--background", default=None,
                   help="background image; omit to generate from pure noise")
    p.add_argument("--canvas", default=None,
                   help="canvas WxH when no background is given, e.g. 512x512")
    p.add_argument("--x", type=int, required=True, help="object left edge on the canvas")
    p.add_argument("--y", type=int, required=True, help="object top edge on the canvas")
    p.add_argument("--scale", type=float, default=1.0, help="object scale factor")
    p.add_argument("--product-type", required=True, help="prompt slot: product type")
    p.add_argument("--color", required=True, help="prompt slot: color")
    p.add_argument("--place", required=True, help="prompt slot: place/scene")
    p.add_argument("--interactive", action="store_true",
                   help="pause at each stage and pick between variants")
    p.add_argument("--out", required=True, help="run directory (created atomically)")
    _add_config_flags(p)

    p = add("generate-bg", cmd_generate_bg, "generate a background image from a prompt")
    p.add_argument("--prompt", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", default="1024x1024", help="output WxH")
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--toy-adapters", action="store_true")

    p = add("colorize", cmd_colorize, "colorize a black-and-white object image")
    p.add_argument("--object", required=True)
    p.add_argument("--product-type", required=True)
    p.add_argument("--color", required=True)
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--interactive", action="store_true")
    _add_config_flags(p)

    p = add("segment", cmd_segment, "segment the object out of an image")
    p.add_argument("--image", required=True)
    p.add_argument("--category", required=True, help="object category to segment")
    p.add_argument("--out", required=True, help="output mask PNG")
    p.add_argument("--toy-adapters", action="store_true")

    p = add("evaluate", cmd_evaluate, "score method outputs against a benchmark manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--outputs", required=True, help="directory of <sample_id>.png outputs")
    p.add_argument("--method-id", default="ours")
    p.add_argument("--crop-object", action="store_true",
                   help="score geometric consistency on the object crop")
    p.add_argument("--real-scorers", action="store_true",
                   help="use pretrained scoring models (requires cached checkpoints)")
    p.add_argument("--out", required=True, help="report directory")

    p = add("bench-assemble", cmd_bench_assemble, "assemble a benchmark manifest")
    p.add_argument("--sources", required=True, help="JSON sources config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="manifest JSONL path")

    p = add("study-bundle", cmd_study_bundle, "build a blind human-study bundle")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", action="append", required=True,
                   help="NAME=DIR, repeatable")
    p.add_argument("--per-category", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("fetch-models", cmd_fetch_models, "download registry checkpoints to the cache")
    p.add_argument("--registry", default=None, help="registry INI (default: built-in)")

    p = add("serve", cmd_serve, "run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=int(os.environ.get("SCENEFUSE_PORT", 8000)))
    p.add_argument("--data-dir", default=os.environ.get("SCENEFUSE_DATA", "scenefuse-data"))
    p.add_argument("--workers", type=int,
                   default=int(os.environ.get("SCENEFUSE_WORKERS", 1)))
    p.add_argument("--frontend", default=None, help="static directory to serve as the UI")
    p.add_argument("--toy-adapters", action="store_true")

    p = add("replay", cmd_replay, "re-run a manifest and verify outputs are identical")
    p.add_argument("--manifest", required=True)
    p.add_argument("--toy-adapters", action="store_true")

    return parser


def _explicit_flags(argv: list[str]) -> set[str]:
    """Which config-mapped flags were literally present on the command line."""
    explicit = set()
    for dest in FLAG_TO_FIELD:
        opt = "--" + dest.replace("_", "-")
        if any(tok == opt or tok.startswith(opt + "=") for tok in argv):
            explicit.add(dest)
    if any(tok == "-k" or tok.startswith("-k=") for tok in argv):
        explicit.add("variants_k")
    return explicit


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args._explicit = _explicit_flags(argv)
    try:
        return args.fn(args)
    except (StageError, ParameterError, AdapterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
