"""Prompt templating.

Templates are editable text assets with named slots; which slots a template
requires is fixed here so missing input fails loudly before any model runs.
"""

from __future__ import annotations

from importlib import resources

from ..errors import ParameterError
from .config import PromptSpec, TemplateId

REQUIRED_SLOTS = {
    TemplateId.INSERTION: ("product_type", "color", "place"),
    TemplateId.COLORIZATION: ("product_type", "color"),
    TemplateId.BACKGROUND: ("place",),
}


def template_text(template_id: TemplateId) -> str:
    ref = resources.files("scenefuse.pipeline").joinpath(f"templates/{template_id.value}.txt")
    return ref.read_text().strip()


def render_prompt(spec: PromptSpec) -> str:
    missing = [s for s in REQUIRED_SLOTS[spec.template_id] if not getattr(spec, s)]
    if missing:
        raise ParameterError(
            f"template {spec.template_id.value!r} requires slots {missing} to be non-empty"
        )
    return template_text(spec.template_id).format(
        product_type=spec.product_type, color=spec.color, place=spec.place
    )
