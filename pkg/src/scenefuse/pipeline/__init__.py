from .colorize import colorize, mean_masked_saturation, needs_colorization
from .config import PipelineConfig, PlacementSpec, PromptSpec, TemplateId
from .placement import place_object, placement_bbox
from .prompts import render_prompt, template_text
from .runner import (
    InsertResult,
    ReplayReport,
    colorize_stage,
    compose_stage,
    insert,
    insert_into_background,
    insert_into_generated,
    load_manifest,
    refine_stage,
    replay,
    write_manifest,
)

__all__ = [
    "InsertResult",
    "PipelineConfig",
    "PlacementSpec",
    "PromptSpec",
    "ReplayReport",
    "TemplateId",
    "colorize",
    "colorize_stage",
    "compose_stage",
    "insert",
    "insert_into_background",
    "insert_into_generated",
    "load_manifest",
    "mean_masked_saturation",
    "needs_colorization",
    "place_object",
    "placement_bbox",
    "refine_stage",
    "render_prompt",
    "replay",
    "template_text",
    "write_manifest",
]
