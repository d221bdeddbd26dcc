"""Exception hierarchy shared by all loomkit modules."""


class LoomkitError(Exception):
    """Base class for all toolkit errors."""


class MalformedRle(LoomkitError):
    """Run-length encoding does not describe a mask of the stated geometry."""


class InvalidInput(LoomkitError):
    """A precondition on an operation's input was violated."""


class InvalidFeatures(LoomkitError):
    """A frame feature series contains non-finite or ill-shaped data."""


class InvalidGeometry(LoomkitError):
    """An image operation cannot fit inside the target frame."""


class InvalidConfig(LoomkitError):
    """A configuration value violates a structural constraint."""


class GeometryMismatch(LoomkitError):
    """Two masks that must share a geometry do not."""


class ClipGridMismatch(LoomkitError):
    """Saliency scores and clip labels do not align on the same clip grid."""


class CoverageViolation(LoomkitError):
    """Parsed frame ranges leave a gap, overlap, or run out of range."""

    def __init__(self, message, frame_range=None):
        super().__init__(message)
        self.frame_range = frame_range


class NoPerson(LoomkitError):
    """No detection of the requested category; the video should be skipped."""


class NoGroundTruthForeground(LoomkitError):
    """Ground-truth masklet has no nonempty frame; the item cannot be scored."""


class MalformedBenchmark(LoomkitError):
    """Benchmark or prediction file violates its schema."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ClientTransportError(LoomkitError):
    """A model client request failed after exhausting its retries."""


class PipelineStageError(LoomkitError):
    """A pipeline stage failed; carries the shot index it was working on."""

    def __init__(self, message, shot_index):
        super().__init__(f"{message} (shot {shot_index})")
        self.shot_index = shot_index


class UnknownTarget(LoomkitError):
    """A review decision references a video or shot that does not exist."""


class InvalidRound(LoomkitError):
    """Review round must be 1 or 2."""


class Conflict(LoomkitError):
    """A review decision targets something that was already decided."""
