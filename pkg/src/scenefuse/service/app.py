"""HTTP facade over the insertion pipeline.

JSON everywhere except image payloads, which are raw lossless-encoded bytes.
Sessions and job tickets live on disk; stage jobs run on a bounded worker
pool, and each job builds its own adapter set so heavyweight state is never
shared across concurrent jobs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request, Response
from pydantic import BaseModel, Field

from ..errors import ParameterError, StageError
from ..images import decode_image_bytes, encode_png, image_digest, save_image
from ..pipeline import (
    PipelineConfig,
    PlacementSpec,
    PromptSpec,
    colorize_stage,
    compose_stage,
    place_object,
    refine_stage,
    render_prompt,
)
from ..pipeline.config import TemplateId
from ..pipeline.runner import (
    MANIFEST_VERSION,
    STAGE_COLORIZE,
    STAGE_COMPOSE,
    STAGE_REFINE,
    adjust_placement_for_object,
    write_manifest,
)
from ..rng import RandomSource
from .jobs import JobQueue
from .sessions import IllegalTransition, SessionStore

MAX_UPLOAD_BYTES = 32 * 1024 * 1024
STAGE_INDEX = {"colorize": STAGE_COLORIZE, "compose": STAGE_COMPOSE, "refine": STAGE_REFINE}


class SessionCreateBody(BaseModel):
    config: dict = Field(default_factory=dict)
    prompt_spec: dict = Field(default_factory=dict)


class PlacementBody(BaseModel):
    x: int
    y: int
    scale: float
    canvas_size: tuple[int, int] | None = None


class PromptBody(BaseModel):
    product_type: str = ""
    color: str = ""
    place: str = ""


class SelectBody(BaseModel):
    index: int


def create_app(
    data_dir: str | Path,
    workers: int = 1,
    adapter_factory=None,
) -> FastAPI:
    if adapter_factory is None:
        from ..adapters.toy import toy_adapters

        adapter_factory = toy_adapters

    data_dir = Path(data_dir)
    store = SessionStore(data_dir / "sessions")
    queue = JobQueue(data_dir / "jobs", workers=workers)

    app = FastAPI(title="scenefuse", version="0.1.0")
    app.state.store = store
    app.state.queue = queue
    app.state.adapter_factory = adapter_factory

    def get_session(session_id: str):
        try:
            return store.load(session_id)
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id!r}")

    def decode_asset_image(session_id: str, digest: str) -> np.ndarray:
        return decode_image_bytes(store.get_asset(session_id, digest))

    def session_view(state) -> dict:
        return {
            "id": state.id,
            "stage": state.stage,
            "pending_stage": state.pending_stage,
            "assets": state.assets,
            "placement": state.placement,
            "prompt_spec": state.prompt_spec,
            "config": state.config,
            "canvas_size": state.canvas_size,
            "variants": state.variants,
            "selections": state.selections,
            "colorize_ran": state.colorize_ran,
            "result_digest": state.result_digest,
        }

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionCreateBody | None = None):
        body = body or SessionCreateBody()
        try:
            state = store.create(config=body.config, prompt_spec=body.prompt_spec)
        except ParameterError as exc:
            raise HTTPException(422, str(exc))
        return session_view(state)

    @app.get("/sessions/{session_id}")
    def get_session_state(session_id: str):
        return session_view(get_session(session_id))

    @app.post("/sessions/{session_id}/assets", status_code=201)
    async def upload_asset(session_id: str, request: Request,
                           kind: str = Query(...)):
        if kind not in ("object", "background"):
            raise HTTPException(422, f"kind must be object|background, got {kind!r}")
        data = await request.body()
        if len(data) > MAX_UPLOAD_BYTES:
            raise HTTPException(413, f"upload exceeds {MAX_UPLOAD_BYTES} bytes")
        if not data:
            raise HTTPException(400, "empty upload")
        try:
            img = decode_image_bytes(data)
        except ParameterError as exc:
            raise HTTPException(400, str(exc))
        with store.lock(session_id):
            state = get_session(session_id)
            digest = store.put_asset(state, data)
            state.assets[kind] = digest
            if kind == "background":
                h, w = img.shape[:2]
                state.canvas_size = [(w // 8) * 8, (h // 8) * 8]
            state.log("upload", kind=kind, digest=digest)
            store.save(state)
        return {"ref": digest, "kind": kind, "size": list(img.shape[1::-1]),
                "canvas_size": state.canvas_size}

    @app.get("/sessions/{session_id}/assets/{ref}")
    def fetch_asset(session_id: str, ref: str):
        get_session(session_id)
        try:
            data = store.get_asset(session_id, ref)
        except KeyError:
            raise HTTPException(404, f"unknown asset {ref!r}")
        return Response(content=data, media_type="application/octet-stream")

    @app.put("/sessions/{session_id}/placement")
    def set_placement(session_id: str, body: PlacementBody):
        with store.lock(session_id):
            state = get_session(session_id)
            if "object" not in state.assets:
                raise HTTPException(409, "upload an object image first")
            obj = decode_asset_image(session_id, state.assets["object"])
            canvas_size = body.canvas_size or state.canvas_size
            if canvas_size is None:
                raise HTTPException(
                    422, "no canvas: upload a background or pass canvas_size"
                )
            try:
                spec = PlacementSpec(x=body.x, y=body.y, scale=body.scale,
                                     canvas_size=tuple(canvas_size))
                oh, ow = obj.shape[:2]
                spec.validate_for(ow, oh)
            except ParameterError as exc:
                clamped = PlacementSpec(
                    x=body.x, y=body.y, scale=max(body.scale, 1e-6),
                    canvas_size=tuple(canvas_size),
                ).clamped_for(obj.shape[1], obj.shape[0])
                raise HTTPException(422, detail={
                    "error": str(exc), "clamped": clamped.to_dict(),
                })

            if "background" in state.assets:
                bg = decode_asset_image(session_id, state.assets["background"])
                bg = bg[: canvas_size[1], : canvas_size[0]]
            else:
                bg = np.full((canvas_size[1], canvas_size[0], 3), 255, np.uint8)
            cfg = PipelineConfig.from_dict(state.config)
            pasted, mask = place_object(obj, bg, spec, cfg.mask_threshold)
            preview_ref = store.put_asset(state, encode_png(pasted))
            mask_img = np.stack([mask.data * 255] * 3, axis=2)
            mask_ref = store.put_asset(state, encode_png(mask_img))

            state.placement = spec.to_dict()
            state.canvas_size = list(canvas_size)
            if state.stage == "created":
                state.stage = "placed"
            state.log("placement", spec=spec.to_dict())
            store.save(state)
        return {"placement": spec.to_dict(), "preview_ref": preview_ref,
                "mask_ref": mask_ref}

    @app.put("/sessions/{session_id}/prompt")
    def set_prompt(session_id: str, body: PromptBody):
        with store.lock(session_id):
            state = get_session(session_id)
            spec = PromptSpec(product_type=body.product_type, color=body.color,
                              place=body.place, template_id=TemplateId.INSERTION)
            try:
                rendered = render_prompt(spec)
            except ParameterError as exc:
                raise HTTPException(422, str(exc))
            state.prompt_spec = spec.to_dict()
            state.log("prompt", spec=state.prompt_spec)
            store.save(state)
        return {"prompt_spec": state.prompt_spec, "prompt": rendered}

    # -- stage execution ----------------------------------------------------

    def run_stage_job(session_id: str, stage: str, k: int, progress) -> None:
        adapters = app.state.adapter_factory()
        state = store.load(session_id)
        cfg = PipelineConfig.from_dict(state.config)
        spec = PromptSpec.from_dict(state.prompt_spec) if state.prompt_spec else PromptSpec(
            product_type="object", color="neutral", place="a neutral scene"
        )
        root = RandomSource(cfg.seed)
        obj = decode_asset_image(session_id, state.assets["object"])
        progress(0.1)

        if stage == "colorize":
            variants = colorize_stage(obj, spec, cfg, adapters,
                                      root.child(STAGE_COLORIZE), k)
        elif stage == "compose":
            current = obj
            if state.colorize_ran:
                current = decode_asset_image(
                    session_id, store.selected_digest(state, "colorize")
                )
            bg = None
            if "background" in state.assets:
                bg = decode_asset_image(session_id, state.assets["background"])
            placement = adjust_placement_for_object(
                PlacementSpec.from_dict(state.placement), obj, current
            )
            variants, _, _ = compose_stage(current, bg, placement, spec, cfg, adapters,
                                           root.child(STAGE_COMPOSE), k)
        elif stage == "refine":
            current = decode_asset_image(
                session_id, store.selected_digest(state, "compose")
            )
            variants = refine_stage(current, spec, cfg, adapters,
                                    root.child(STAGE_REFINE), k)
        else:
            raise ParameterError(f"unknown stage {stage!r}")
        progress(0.8)

        with store.lock(session_id):
            state = store.load(session_id)
            digests = [store.put_asset(state, encode_png(v)) for v in variants]
            store.store_variants(state, stage, digests)

    @app.post("/sessions/{session_id}/stages/{stage}", status_code=202)
    def run_stage(session_id: str, stage: str, k: int = Query(default=1, ge=1, le=8)):
        with store.lock(session_id):
            state = get_session(session_id)
            try:
                store.check_runnable(state, stage)
            except IllegalTransition as exc:
                raise HTTPException(409, str(exc))
            except ParameterError as exc:
                raise HTTPException(422, str(exc))
            if stage == "compose" and state.placement is None:
                raise HTTPException(409, "set a placement before composing")
            if stage == "colorize" and "object" not in state.assets:
                raise HTTPException(409, "upload an object image first")
            state.pending_stage = stage
            state.log("stage_started", stage=stage, k=k)
            store.save(state)
        ticket = queue.submit(session_id, stage,
                              lambda progress: run_stage_job(session_id, stage, k, progress))
        return ticket.to_dict()

    @app.post("/sessions/{session_id}/run_all", status_code=202)
    def run_all(session_id: str):
        """Batch bypass: every remaining stage with k=1, auto-selected."""
        with store.lock(session_id):
            state = get_session(session_id)
            if state.stage not in ("placed", "colorized", "composed"):
                raise HTTPException(409, f"cannot run pipeline from state {state.stage!r}")
            if state.placement is None:
                raise HTTPException(409, "set a placement first")
            state.log("run_all")
            store.save(state)

        def job(progress):
            state = store.load(session_id)
            cfg = PipelineConfig.from_dict(state.config)
            from ..pipeline.colorize import needs_colorization

            obj = decode_asset_image(session_id, state.assets["object"])
            if state.stage == "placed" and needs_colorization(obj, cfg):
                run_stage_job(session_id, "colorize", 1, lambda p: progress(p * 0.3))
            state = store.load(session_id)
            if state.stage in ("placed", "colorized"):
                run_stage_job(session_id, "compose", 1,
                              lambda p: progress(0.3 + p * 0.4))
            run_stage_job(session_id, "refine", 1, lambda p: progress(0.7 + p * 0.3))

        ticket = queue.submit(session_id, "pipeline", job)
        return ticket.to_dict()

    @app.get("/jobs/{ticket_id}")
    def poll(ticket_id: str):
        try:
            return queue.get(ticket_id).to_dict()
        except KeyError:
            raise HTTPException(404, f"unknown job {ticket_id!r}")

    @app.get("/sessions/{session_id}/variants/{stage}")
    def list_variants(session_id: str, stage: str):
        state = get_session(session_id)
        if stage not in state.variants:
            raise HTTPException(404, f"no variants for stage {stage!r}")
        return {"stage": stage, "refs": state.variants[stage],
                "selected": state.selections.get(stage)}

    @app.post("/sessions/{session_id}/variants/{stage}/select")
    def select_variant(session_id: str, stage: str, body: SelectBody):
        with store.lock(session_id):
            state = get_session(session_id)
            try:
                store.select(state, stage, body.index)
            except IllegalTransition as exc:
                raise HTTPException(409, str(exc))
            except ParameterError as exc:
                raise HTTPException(422, str(exc))
        return session_view(state)

    @app.get("/sessions/{session_id}/result")
    def result(session_id: str):
        with store.lock(session_id):
            state = get_session(session_id)
            if state.stage != "done" or state.result_digest is None:
                raise HTTPException(409, f"session is at stage {state.stage!r}, not done")
            manifest = _build_result_manifest(store, state)
            _write_result_dir(store, state, manifest)
            executed = [s for s in ("colorize", "compose", "refine")
                        if s in state.selections]
            thumbnails = [state.variants[s][state.selections[s]] for s in executed]
        return {"image_ref": state.result_digest, "manifest": manifest,
                "stage_thumbnails": thumbnails}

    @app.exception_handler(StageError)
    def stage_error_handler(request, exc):
        raise HTTPException(500, str(exc))

    return app


def _build_result_manifest(store: SessionStore, state) -> dict:
    cfg = PipelineConfig.from_dict(state.config)
    cfg_dict = cfg.to_dict()
    cfg_dict["colorize"] = "force" if state.colorize_ran else "off"
    cfg_dict["no_refine"] = False

    obj = decode_image_bytes(store.get_asset(state.id, state.assets["object"]))
    bg_digest = None
    if "background" in state.assets:
        bg = decode_image_bytes(store.get_asset(state.id, state.assets["background"]))
        bg_digest = image_digest(bg)

    spec = PromptSpec.from_dict(state.prompt_spec) if state.prompt_spec else PromptSpec(
        product_type="object", color="neutral", place="a neutral scene"
    )
    stages = []
    for name in ("colorize", "compose", "refine"):
        if name in state.variants:
            digests = [
                image_digest(decode_image_bytes(store.get_asset(state.id, d)))
                for d in state.variants[name]
            ]
            stages.append({
                "name": name, "index": STAGE_INDEX[name], "k": len(digests),
                "variant_digests": digests,
                "selected": state.selections.get(name), "duration_s": 0.0,
            })
    final = decode_image_bytes(store.get_asset(state.id, state.result_digest))
    return {
        "version": MANIFEST_VERSION,
        "kind": "insert" if bg_digest else "insert_generated",
        "mode": "interactive",
        "adapters": "toy",
        "config": cfg_dict,
        "prompt_spec": spec.to_dict(),
        "placement": state.placement,
        "prompt": render_prompt(PromptSpec(spec.product_type, spec.color, spec.place,
                                           TemplateId.INSERTION)),
        "colorize_applied": state.colorize_ran,
        "inputs": {"object": image_digest(obj), "background": bg_digest},
        "stages": stages,
        "outputs": [image_digest(final)],
        "selections": {k: v for k, v in state.selections.items()},
        "session_id": state.id,
        "audit": state.audit,
    }


def _write_result_dir(store: SessionStore, state, manifest: dict) -> None:
    result_dir = store.session_dir(state.id) / "result"
    inputs = result_dir / "inputs"
    obj = decode_image_bytes(store.get_asset(state.id, state.assets["object"]))
    save_image(obj, inputs / "object.png")
    manifest["input_files"] = {"object": "inputs/object.png", "background": None}
    if "background" in state.assets:
        bg = decode_image_bytes(store.get_asset(state.id, state.assets["background"]))
        save_image(bg, inputs / "background.png")
        manifest["input_files"]["background"] = "inputs/background.png"
    final = decode_image_bytes(store.get_asset(state.id, state.result_digest))
    save_image(final, result_dir / "final.png")
    write_manifest(result_dir / "manifest.json", manifest)
