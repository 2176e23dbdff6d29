"""Durable per-session state with an explicit stage machine.

Each session is a directory: ``session.json`` plus digest-addressed assets.
Interactive pauses therefore survive process restarts. All mutations go
through the store, which serializes them with a per-session lock and appends
to the session's audit log.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import uuid
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..errors import ParameterError
from ..pipeline import PipelineConfig

STAGE_ORDER = ("created", "placed", "colorized", "composed", "refined", "done")

# stage -> stages it may be entered from
RUNNABLE_STAGES = {
    "colorize": ("placed",),
    "compose": ("placed", "colorized"),
    "refine": ("composed",),
}
STAGE_AFTER = {"colorize": "colorized", "compose": "composed", "refine": "refined"}


class IllegalTransition(Exception):
    pass


@dataclass
class SessionState:
    id: str
    stage: str = "created"
    assets: dict = field(default_factory=dict)        # kind -> digest
    placement: dict | None = None
    prompt_spec: dict = field(default_factory=dict)
    config: dict = field(default_factory=lambda: PipelineConfig().to_dict())
    canvas_size: list | None = None
    variants: dict = field(default_factory=dict)      # stage -> [digests]
    selections: dict = field(default_factory=dict)    # stage -> index
    pending_stage: str | None = None
    colorize_ran: bool = False
    audit: list = field(default_factory=list)
    result_digest: str | None = None

    def log(self, event: str, **details):
        self.audit.append({"t": time.time(), "event": event, **details})


class SessionStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def session_dir(self, session_id: str) -> Path:
        return self.root / session_id

    def create(self, config: dict | None = None, prompt_spec: dict | None = None) -> SessionState:
        sid = uuid.uuid4().hex[:12]
        state = SessionState(id=sid)
        if config:
            merged = PipelineConfig().to_dict()
            merged.update(config)
            PipelineConfig.from_dict(merged)  # validates
            state.config = merged
        if prompt_spec:
            state.prompt_spec = prompt_spec
        state.log("created")
        self.session_dir(sid).mkdir(parents=True)
        (self.session_dir(sid) / "assets").mkdir()
        self.save(state)
        return state

    def load(self, session_id: str) -> SessionState:
        path = self.session_dir(session_id) / "session.json"
        if not path.exists():
            raise KeyError(session_id)
        return SessionState(**json.loads(path.read_text()))

    def save(self, state: SessionState) -> None:
        path = self.session_dir(state.id) / "session.json"
        path.write_text(json.dumps(asdict(state), indent=2))

    # -- assets ------------------------------------------------------------

    def put_asset(self, state: SessionState, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self.session_dir(state.id) / "assets" / f"{digest}.bin"
        if not path.exists():
            path.write_bytes(data)
        return digest

    def get_asset(self, session_id: str, digest: str) -> bytes:
        path = self.session_dir(session_id) / "assets" / f"{digest}.bin"
        if not path.exists():
            raise KeyError(digest)
        return path.read_bytes()

    # -- stage machine -----------------------------------------------------

    def check_runnable(self, state: SessionState, stage: str) -> None:
        if stage not in RUNNABLE_STAGES:
            raise ParameterError(f"unknown stage {stage!r}; runnable: {sorted(RUNNABLE_STAGES)}")
        if state.pending_stage is not None:
            raise IllegalTransition(
                f"stage {state.pending_stage!r} is awaiting variants or a selection"
            )
        if state.stage not in RUNNABLE_STAGES[stage]:
            raise IllegalTransition(
                f"cannot run {stage!r} from state {state.stage!r} "
                f"(legal from: {RUNNABLE_STAGES[stage]})"
            )

    def store_variants(self, state: SessionState, stage: str, digests: list[str]) -> None:
        state.variants[stage] = digests
        state.log("variants", stage=stage, count=len(digests))
        if len(digests) == 1:
            self._apply_selection(state, stage, 0, auto=True)
        self.save(state)

    def select(self, state: SessionState, stage: str, index: int) -> None:
        if state.pending_stage != stage:
            raise IllegalTransition(
                f"no pending selection for stage {stage!r} "
                f"(pending: {state.pending_stage!r})"
            )
        digests = state.variants.get(stage, [])
        if not 0 <= index < len(digests):
            raise ParameterError(f"variant index {index} out of range [0, {len(digests)})")
        self._apply_selection(state, stage, index, auto=False)
        self.save(state)

    def _apply_selection(self, state: SessionState, stage: str, index: int, auto: bool) -> None:
        state.selections[stage] = index
        state.pending_stage = None
        state.stage = STAGE_AFTER[stage]
        if stage == "colorize":
            state.colorize_ran = True
        if stage == "refine":
            state.stage = "done"
            state.result_digest = state.variants[stage][index]
        state.log("selected", stage=stage, index=index, auto=auto)

    def selected_digest(self, state: SessionState, stage: str) -> str:
        return state.variants[stage][state.selections[stage]]
