"""End-to-end insertion flows and run manifests.

Stage chain: optional colorization -> intermediate composition (masked
diffusion over the pasted latents) -> optional refinement (noise then
denoise). Batch runs carry k independent variant chains; interactive runs
pause at each stage for a selection. Every run can be replayed bit-exactly
from its manifest with toy adapters.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..compositor import UpdateMode, refine, run_masked_diffusion
from ..errors import EmptyMaskWarning, ParameterError, StageError
from ..images import as_rgb, image_digest, load_image, save_image
from ..kernels import get_backend
from ..masks import downsample_mask
from ..rng import RandomSource
from ..schedule import ScheduleKind, TimestepPlan, build_schedule
from ..tensors import BinaryMask
from .colorize import colorize, needs_colorization
from .config import PipelineConfig, PlacementSpec, PromptSpec, TemplateId
from .placement import place_object, placement_bbox
from .prompts import render_prompt

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1

# Fixed stage indices; seeds stay stable even when a stage is skipped.
STAGE_COLORIZE = 0
STAGE_COMPOSE = 1
STAGE_REFINE = 2


@dataclass
class StageRecord:
    name: str
    index: int
    k: int
    variant_digests: list[str] = field(default_factory=list)
    selected: int | None = None
    duration_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name, "index": self.index, "k": self.k,
            "variant_digests": self.variant_digests, "selected": self.selected,
            "duration_s": round(self.duration_s, 6),
        }


@dataclass
class InsertResult:
    images: list[np.ndarray]
    manifest: dict
    run_dir: Path | None = None


def build_schedule_from(cfg: PipelineConfig):
    return build_schedule(
        ScheduleKind(cfg.schedule_kind), cfg.beta_start, cfg.beta_end, cfg.train_steps
    )


def crop_to_factor(image: np.ndarray, factor: int = 8) -> np.ndarray:
    """Top-left crop to dimensions divisible by the codec factor."""
    img = as_rgb(image)
    h, w = img.shape[:2]
    nh, nw = (h // factor) * factor, (w // factor) * factor
    if nh == 0 or nw == 0:
        raise ParameterError(f"image {w}x{h} smaller than one latent cell ({factor}px)")
    if (nh, nw) != (h, w):
        warnings.warn(f"cropping background {w}x{h} -> {nw}x{nh} to fit the latent grid")
        img = img[:nh, :nw]
    return img


def colorize_stage(
    object_image: np.ndarray,
    spec: PromptSpec,
    cfg: PipelineConfig,
    adapters,
    rng: RandomSource,
    k: int,
) -> list[np.ndarray]:
    try:
        return [colorize(object_image, spec, cfg, adapters, rng.child(v)) for v in range(k)]
    except ParameterError:
        raise
    except Exception as exc:
        raise StageError("colorize", str(exc)) from exc


def compose_stage(
    object_image: np.ndarray,
    background_image: np.ndarray | None,
    placement: PlacementSpec,
    spec: PromptSpec,
    cfg: PipelineConfig,
    adapters,
    rng: RandomSource,
    k: int,
) -> tuple[list[np.ndarray], np.ndarray, BinaryMask]:
    """Produce k intermediate compositions.

    Returns (variants, pasted_image, pixel_mask). With a background, the run
    starts from the pasted composition noised to the top of the plan; without
    one it starts from pure noise.
    """
    codec = adapters.codec
    factor = codec.spatial_factor

    if background_image is not None:
        canvas = crop_to_factor(background_image, factor)
        ch, cw = canvas.shape[:2]
        if tuple(placement.canvas_size) != (cw, ch):
            raise StageError(
                "compose",
                f"placement canvas {placement.canvas_size} does not match prepared "
                f"background ({cw}, {ch})",
            )
    else:
        cw, ch = placement.canvas_size
        if cw % factor or ch % factor:
            raise StageError(
                "compose", f"canvas {cw}x{ch} must be divisible by {factor} (latent grid)"
            )
        canvas = np.full((ch, cw, 3), 255, dtype=np.uint8)

    pasted, pixel_mask = place_object(object_image, canvas, placement, cfg.mask_threshold)
    if pixel_mask.is_empty():
        warnings.warn(
            "object mask is empty; composing the background alone", EmptyMaskWarning
        )

    # A fully-covering object leaves no background to synthesize.
    if pixel_mask.is_full() or cfg.compose_steps == 0:
        return [pasted.copy() for _ in range(k)], pasted, pixel_mask

    latent_mask = downsample_mask(pixel_mask, factor, cfg.mask_coverage)
    prompt = adapters.text_encoder.embed(
        render_prompt(PromptSpec(spec.product_type, spec.color, spec.place,
                                 TemplateId.INSERTION))
    )
    schedule = build_schedule_from(cfg)
    plan = TimestepPlan(
        train_steps=cfg.train_steps,
        inference_steps=cfg.compose_steps,
        start_index=cfg.compose_steps,
    )
    z_pasted = codec.encode(pasted)
    z_bg = codec.encode(canvas) if background_image is not None else None

    variants = []
    try:
        for v in range(k):
            out = run_masked_diffusion(
                obj0=z_pasted, bg=z_bg, m=latent_mask,
                denoiser=adapters.base_denoiser, prompt=prompt,
                schedule=schedule, plan=plan, rng=rng.child(v),
                guidance_scale=cfg.compose_guidance, mode=UpdateMode(cfg.update_mode),
            )
            variants.append(codec.decode(out))
    except ParameterError:
        raise
    except Exception as exc:
        raise StageError("compose", str(exc)) from exc
    return variants, pasted, pixel_mask


def refine_stage(
    image: np.ndarray,
    spec: PromptSpec,
    cfg: PipelineConfig,
    adapters,
    rng: RandomSource,
    k: int,
) -> list[np.ndarray]:
    """Noise the composition for refine_noise_steps of the plan and denoise.

    Zero noise steps is the identity on the pixels (no codec round-trip).
    """
    if cfg.refine_noise_steps == 0:
        return [image.copy() for _ in range(k)]
    codec = adapters.codec
    img = crop_to_factor(image, codec.spatial_factor)
    prompt = adapters.text_encoder.embed(
        render_prompt(PromptSpec(spec.product_type, spec.color, spec.place,
                                 TemplateId.INSERTION))
    )
    schedule = build_schedule_from(cfg)
    plan = TimestepPlan(
        train_steps=cfg.train_steps,
        inference_steps=cfg.refine_inference_steps,
        start_index=cfg.refine_inference_steps,
    )
    z = codec.encode(img)
    out = []
    try:
        for v in range(k):
            refined = refine(
                z, cfg.refine_noise_steps, adapters.refiner_denoiser, prompt,
                schedule, plan, rng.child(v),
                guidance_scale=cfg.refine_guidance, mode=UpdateMode(cfg.update_mode),
            )
            out.append(codec.decode(refined))
    except ParameterError:
        raise
    except Exception as exc:
        raise StageError("refine", str(exc)) from exc
    return out


def adjust_placement_for_object(
    placement: PlacementSpec, original: np.ndarray, current: np.ndarray
) -> PlacementSpec:
    """Keep the on-canvas box fixed when a stage resized the object
    (colorization upscales small inputs)."""
    oh, ow = np.asarray(original).shape[:2]
    nh, nw = np.asarray(current).shape[:2]
    if (oh, ow) == (nh, nw):
        return placement
    return PlacementSpec(
        x=placement.x, y=placement.y,
        scale=placement.scale * (ow / nw),
        canvas_size=placement.canvas_size,
    )


def insert(
    object_image: np.ndarray,
    background_image: np.ndarray | None,
    placement: PlacementSpec,
    spec: PromptSpec,
    cfg: PipelineConfig,
    adapters,
    out_dir: str | Path | None = None,
    selector=None,
    stage_k: dict[str, int] | None = None,
) -> InsertResult:
    """Full insertion flow.

    Batch mode (``selector=None``): k independent chains, one final image per
    variant seed. Interactive mode: each stage presents its k candidates to
    ``selector(stage_name, images) -> index`` and continues with the pick;
    ``stage_k`` overrides the candidate count per stage (used by replay to
    reproduce runs whose stages used different k).
    """
    object_image = np.asarray(object_image)
    root = RandomSource(cfg.seed)
    k = cfg.variants_k
    stage_k = stage_k or {}
    do_colorize = needs_colorization(object_image, cfg)
    do_refine = not cfg.no_refine

    stages: list[StageRecord] = []
    stage_images: dict[str, list[np.ndarray]] = {}

    def record(name: str, index: int, imgs: list[np.ndarray], selected, dt: float):
        stages.append(StageRecord(
            name=name, index=index, k=len(imgs),
            variant_digests=[image_digest(im) for im in imgs],
            selected=selected, duration_s=dt,
        ))
        stage_images[name] = imgs

    pasted_ref: np.ndarray | None = None
    mask_ref: BinaryMask | None = None

    if selector is None:
        chains: list[np.ndarray] = []
        colorized_all, intermediates, finals = [], [], []
        t0 = time.perf_counter()
        for v in range(k):
            ov = object_image
            if do_colorize:
                ov = colorize_stage(ov, spec, cfg, adapters,
                                    root.child(STAGE_COLORIZE, v), 1)[0]
                colorized_all.append(ov)
            (ivs, pasted, pmask) = compose_stage(
                ov, background_image,
                adjust_placement_for_object(placement, object_image, ov),
                spec, cfg, adapters, root.child(STAGE_COMPOSE, v), 1,
            )
            pasted_ref, mask_ref = pasted, pmask
            intermediates.append(ivs[0])
            fv = ivs[0]
            if do_refine:
                fv = refine_stage(fv, spec, cfg, adapters,
                                  root.child(STAGE_REFINE, v), 1)[0]
            finals.append(fv)
            chains.append(fv)
        dt = time.perf_counter() - t0
        if do_colorize:
            record("colorize", STAGE_COLORIZE, colorized_all, None, dt)
        record("compose", STAGE_COMPOSE, intermediates, None, dt)
        if do_refine:
            record("refine", STAGE_REFINE, finals, None, dt)
        final_images = chains
    else:
        current = object_image
        if do_colorize:
            t0 = time.perf_counter()
            cands = colorize_stage(current, spec, cfg, adapters, root.child(STAGE_COLORIZE),
                                   stage_k.get("colorize", k))
            idx = int(selector("colorize", cands))
            record("colorize", STAGE_COLORIZE, cands, idx, time.perf_counter() - t0)
            current = cands[idx]
        t0 = time.perf_counter()
        cands, pasted_ref, mask_ref = compose_stage(
            current, background_image,
            adjust_placement_for_object(placement, object_image, current),
            spec, cfg, adapters, root.child(STAGE_COMPOSE), stage_k.get("compose", k),
        )
        idx = int(selector("compose", cands))
        record("compose", STAGE_COMPOSE, cands, idx, time.perf_counter() - t0)
        current = cands[idx]
        if do_refine:
            t0 = time.perf_counter()
            cands = refine_stage(current, spec, cfg, adapters, root.child(STAGE_REFINE),
                                 stage_k.get("refine", k))
            idx = int(selector("refine", cands))
            record("refine", STAGE_REFINE, cands, idx, time.perf_counter() - t0)
            current = cands[idx]
        final_images = [current]

    oh, ow = object_image.shape[:2]
    manifest = {
        "version": MANIFEST_VERSION,
        "kind": "insert" if background_image is not None else "insert_generated",
        "mode": "interactive" if selector is not None else "batch",
        "adapters": adapters.name,
        "kernel_backend": get_backend(),
        "config": cfg.to_dict(),
        "prompt_spec": spec.to_dict(),
        "placement": placement.to_dict(),
        "bbox": placement_bbox(placement, ow, oh),
        "prompt": render_prompt(
            PromptSpec(spec.product_type, spec.color, spec.place, TemplateId.INSERTION)
        ),
        "colorize_applied": do_colorize,
        "inputs": {
            "object": image_digest(object_image),
            "background": image_digest(background_image) if background_image is not None else None,
        },
        "stages": [s.to_dict() for s in stages],
        "outputs": [image_digest(im) for im in final_images],
        "selections": {s.name: s.selected for s in stages if s.selected is not None},
    }

    run_dir = None
    if out_dir is not None:
        run_dir = Path(out_dir)
        _write_run_dir(run_dir, object_image, background_image, manifest,
                       stages, stage_images, final_images, pasted_ref, mask_ref)
    return InsertResult(images=final_images, manifest=manifest, run_dir=run_dir)


def insert_into_background(object_image, background_image, placement, spec, cfg,
                           adapters, out_dir=None, selector=None) -> InsertResult:
    if background_image is None:
        raise ParameterError("insert_into_background requires a background image")
    return insert(object_image, background_image, placement, spec, cfg, adapters,
                  out_dir, selector)


def insert_into_generated(object_image, placement, spec, cfg, adapters,
                          out_dir=None, selector=None) -> InsertResult:
    return insert(object_image, None, placement, spec, cfg, adapters, out_dir, selector)


def _write_run_dir(run_dir: Path, object_image, background_image, manifest,
                   stages, stage_images, final_images, pasted, pixel_mask) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    inputs = run_dir / "inputs"
    save_image(object_image, inputs / "object.png")
    manifest["input_files"] = {"object": "inputs/object.png", "background": None}
    if background_image is not None:
        save_image(background_image, inputs / "background.png")
        manifest["input_files"]["background"] = "inputs/background.png"
    if pasted is not None:
        save_image(pasted, inputs / "pasted_preview.png")
    if pixel_mask is not None:
        save_image(np.stack([pixel_mask.data * 255] * 3, axis=2), inputs / "mask.png")

    for rec in stages:
        stage_dir = run_dir / "stages" / f"{rec.index:02d}_{rec.name}"
        for v, im in enumerate(stage_images[rec.name]):
            save_image(im, stage_dir / f"variant_{v}.png")

    for v, im in enumerate(final_images):
        save_image(im, run_dir / "variants" / f"final_{v}.png")
        sidecar = {"bbox": manifest["bbox"], "prompt": manifest["prompt"],
                   "digest": manifest["outputs"][v]}
        (run_dir / "variants" / f"final_{v}.json").write_text(json.dumps(sidecar, indent=2))

    PipelineConfig.from_dict(manifest["config"]).save_ini(run_dir / "config.ini")
    write_manifest(run_dir / MANIFEST_NAME, manifest)


def write_manifest(path: str | Path, manifest: dict) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


@dataclass
class ReplayReport:
    matched: bool
    expected: list[str]
    actual: list[str]

    def summary(self) -> str:
        if self.matched:
            return f"replay matched: {len(self.expected)} output(s) byte-identical"
        lines = ["replay MISMATCH:"]
        for i, (e, a) in enumerate(zip(self.expected, self.actual)):
            mark = "ok " if e == a else "DIFF"
            lines.append(f"  [{mark}] output {i}: expected {e[:12]} got {a[:12]}")
        return "\n".join(lines)


def replay(manifest_path: str | Path, adapters=None) -> ReplayReport:
    """Re-run a manifest against its stored inputs and compare output digests."""
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    run_dir = manifest_path.parent

    if adapters is None:
        if manifest["adapters"] == "toy":
            from ..adapters.toy import toy_adapters

            adapters = toy_adapters()
        else:
            from ..adapters.real import real_adapters

            adapters = real_adapters()

    files = manifest.get("input_files") or {}
    if not files.get("object"):
        raise ParameterError("manifest has no stored input files; cannot replay")
    obj = load_image(run_dir / files["object"])
    bg = load_image(run_dir / files["background"]) if files.get("background") else None

    cfg = PipelineConfig.from_dict(manifest["config"])
    spec = PromptSpec.from_dict(manifest["prompt_spec"])
    placement = PlacementSpec.from_dict(manifest["placement"])

    selector = None
    stage_k = None
    if manifest.get("mode") == "interactive":
        picks = manifest.get("selections", {})
        stage_k = {s["name"]: s["k"] for s in manifest.get("stages", [])}

        def selector(stage, imgs, _picks=picks):  # noqa: F811
            return _picks.get(stage, 0)

    result = insert(obj, bg, placement, spec, cfg, adapters, out_dir=None,
                    selector=selector, stage_k=stage_k)
    return ReplayReport(
        matched=result.manifest["outputs"] == manifest["outputs"],
        expected=manifest["outputs"],
        actual=result.manifest["outputs"],
    )
