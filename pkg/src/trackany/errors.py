"""Exception hierarchy shared across the package."""


class TrackAnyError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(TrackAnyError):
    """Two rasters that must share dimensions do not."""


class UnknownObjectError(TrackAnyError):
    """An object id is not declared by the label map or session."""


class MaskFormatError(TrackAnyError):
    """A mask PNG is not in the expected indexed format."""


class DatasetLayoutError(TrackAnyError):
    """A dataset directory does not follow the expected layout."""


class PhaseError(TrackAnyError):
    """A session operation was attempted in the wrong phase."""

    def __init__(self, message: str, phase: str = ""):
        super().__init__(message)
        self.phase = phase


class EmptyMaskError(TrackAnyError):
    """The segmenter produced an empty mask where one was required."""


class BackendError(TrackAnyError):
    """A model backend failed."""


class BackendUnavailableError(BackendError):
    """The backend could not be reached; carries retry metadata."""

    def __init__(self, message: str, attempts: int = 0, last_status: int | None = None):
        super().__init__(message)
        self.attempts = attempts
        self.last_status = last_status


class SchemaViolationError(BackendError):
    """A backend response failed validation against the wire schema."""


class ReplayDivergenceError(TrackAnyError):
    """A replay diverged from the recorded event log."""

    def __init__(self, message: str, event_index: int, kind: str):
        super().__init__(message)
        self.event_index = event_index
        self.kind = kind


class ConfigError(TrackAnyError):
    """Invalid configuration or generation spec."""
