"""Exception and warning types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class AdapterError(RuntimeError):
    """A model adapter failed or returned something out of contract."""

    def __init__(self, message: str, model_id: str | None = None):
        if model_id:
            message = f"{message} (model: {model_id})"
        super().__init__(message)
        self.model_id = model_id


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage label for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class EmptyMaskWarning(UserWarning):
    """Raised (as a warning) when a mask comes out all-zero."""
