"""User-facing value types: placement, prompt slots, and pipeline settings."""

from __future__ import annotations

import configparser
import enum
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..errors import ParameterError


@dataclass(frozen=True)
class PlacementSpec:
    """Top-left position and scale of the object on the background canvas."""

    x: int
    y: int
    scale: float
    canvas_size: tuple[int, int]  # (width, height)

    def __post_init__(self):
        if self.scale <= 0:
            raise ParameterError(f"scale must be > 0, got {self.scale}")
        if len(self.canvas_size) != 2 or min(self.canvas_size) <= 0:
            raise ParameterError(f"bad canvas size {self.canvas_size}")

    def scaled_box(self, obj_w: int, obj_h: int) -> tuple[int, int, int, int]:
        """(x, y, w, h) of the scaled object on the canvas."""
        w = max(1, round(obj_w * self.scale))
        h = max(1, round(obj_h * self.scale))
        return self.x, self.y, w, h

    def validate_for(self, obj_w: int, obj_h: int) -> None:
        x, y, w, h = self.scaled_box(obj_w, obj_h)
        cw, ch = self.canvas_size
        if x < 0 or y < 0 or x + w > cw or y + h > ch:
            raise ParameterError(
                f"placement box ({x}, {y}, {w}x{h}) exceeds canvas {cw}x{ch}"
            )

    def clamped_for(self, obj_w: int, obj_h: int) -> "PlacementSpec":
        """Nearest valid spec: shrink scale to fit, then clamp position."""
        cw, ch = self.canvas_size
        scale = min(self.scale, cw / obj_w, ch / obj_h)
        w = max(1, round(obj_w * scale))
        h = max(1, round(obj_h * scale))
        x = min(max(self.x, 0), cw - w)
        y = min(max(self.y, 0), ch - h)
        return PlacementSpec(x=x, y=y, scale=scale, canvas_size=self.canvas_size)

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "scale": self.scale,
                "canvas_size": list(self.canvas_size)}

    @classmethod
    def from_dict(cls, d: dict) -> "PlacementSpec":
        return cls(x=d["x"], y=d["y"], scale=d["scale"],
                   canvas_size=tuple(d["canvas_size"]))


class TemplateId(enum.Enum):
    INSERTION = "insertion"
    COLORIZATION = "colorization"
    BACKGROUND = "background"


@dataclass(frozen=True)
class PromptSpec:
    """Slots the user fills; the template turns them into the actual prompt."""

    product_type: str = ""
    color: str = ""
    place: str = ""
    template_id: TemplateId = TemplateId.INSERTION

    def to_dict(self) -> dict:
        return {"product_type": self.product_type, "color": self.color,
                "place": self.place, "template_id": self.template_id.value}

    @classmethod
    def from_dict(cls, d: dict) -> "PromptSpec":
        return cls(
            product_type=d.get("product_type", ""),
            color=d.get("color", ""),
            place=d.get("place", ""),
            template_id=TemplateId(d.get("template_id", "insertion")),
        )


@dataclass
class PipelineConfig:
    """Every tunable of the two-stage pipeline, defaulting to the reference
    operating point: 75 composition steps at guidance 15, refinement noising
    10 of 50 steps at guidance 7.5, colorization 30 steps at strength 0.91
    and guidance 17, 4x upscaling for small inputs."""

    compose_steps: int = 75
    compose_guidance: float = 15.0
    refine_inference_steps: int = 50
    refine_noise_steps: int = 10
    refine_guidance: float = 7.5
    colorize_steps: int = 30
    colorize_strength: float = 0.91
    colorize_guidance: float = 17.0
    upscale_factor: int = 4
    variants_k: int = 1
    seed: int = 0
    # behavioral flags
    no_refine: bool = False
    colorize: str = "auto"  # auto | force | off
    update_mode: str = "scheduler"  # scheduler | literal
    saturation_threshold: float = 0.08
    mask_threshold: float | None = None
    mask_coverage: float = 0.5
    # schedule parameters (defaults of the referenced model family)
    schedule_kind: str = "scaled_linear"
    beta_start: float = 0.00085
    beta_end: float = 0.012
    train_steps: int = 1000

    INTERACTIVE_K = 5

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.refine_noise_steps > self.refine_inference_steps:
            raise ParameterError(
                f"refine_noise_steps ({self.refine_noise_steps}) must be <= "
                f"refine_inference_steps ({self.refine_inference_steps})"
            )
        for name in ("compose_guidance", "refine_guidance", "colorize_guidance"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        if not 0 <= self.colorize_strength <= 1:
            raise ParameterError(f"colorize_strength must be in [0, 1]")
        if self.variants_k < 1:
            raise ParameterError("variants_k must be >= 1")
        if self.colorize not in ("auto", "force", "off"):
            raise ParameterError(f"colorize must be auto|force|off, got {self.colorize!r}")
        if self.update_mode not in ("scheduler", "literal"):
            raise ParameterError(f"update_mode must be scheduler|literal")
        for name in ("compose_steps", "refine_inference_steps", "refine_noise_steps",
                     "colorize_steps"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    def save_ini(self, path) -> None:
        """Human-readable key = value snapshot of every setting."""
        parser = configparser.ConfigParser()
        parser["pipeline"] = {
            k: ("" if v is None else str(v)) for k, v in self.to_dict().items()
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            parser.write(fh)

    @classmethod
    def load_ini(cls, path) -> "PipelineConfig":
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise ParameterError(f"config file not found: {path}")
        if "pipeline" not in parser:
            raise ParameterError(f"{path}: missing [pipeline] section")
        raw = dict(parser["pipeline"])
        typed: dict = {}
        for f in fields(cls):
            if f.name not in raw:
                continue
            text = raw.pop(f.name)
            typed[f.name] = _coerce_field(f.name, text)
        if raw:
            raise ParameterError(f"{path}: unknown config keys {sorted(raw)}")
        return cls.from_dict(typed)


_BOOL_FIELDS = frozenset({"no_refine"})
_INT_FIELDS = frozenset({
    "compose_steps", "refine_inference_steps", "refine_noise_steps",
    "colorize_steps", "upscale_factor", "variants_k", "seed", "train_steps",
})
_FLOAT_FIELDS = frozenset({
    "compose_guidance", "refine_guidance", "colorize_strength",
    "colorize_guidance", "saturation_threshold", "mask_coverage",
    "beta_start", "beta_end",
})
_OPTIONAL_FLOAT_FIELDS = frozenset({"mask_threshold"})


def _coerce_field(name: str, text: str):
    text = text.strip()
    try:
        if name in _BOOL_FIELDS:
            return text.lower() in ("1", "true", "yes", "on")
        if name in _INT_FIELDS:
            return int(text)
        if name in _FLOAT_FIELDS:
            return float(text)
        if name in _OPTIONAL_FLOAT_FIELDS:
            return float(text) if text and text.lower() != "none" else None
        return text
    except ValueError as exc:
        raise ParameterError(f"config key {name!r}: cannot parse {text!r}") from exc
