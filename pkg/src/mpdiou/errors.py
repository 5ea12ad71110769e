"""Exception types shared across the toolkit."""


class BoxError(Exception):
    """Base class for all toolkit errors."""


class NonFiniteCoordinate(BoxError):
    """A box coordinate is NaN or infinite."""


class DegenerateGroundTruth(BoxError):
    """Ground-truth box has zero area; similarity metrics are undefined."""


class DegenerateEnclosure(BoxError):
    """Enclosing box has zero diagonal/extent; a normalizer vanishes."""


class DegenerateAspect(BoxError):
    """A box has zero width or height; aspect-ratio terms are undefined."""


class NonSmoothPoint(BoxError):
    """The loss is not differentiable at this configuration.

    Raised by analytic gradients when a min/max selection is tied within
    tolerance, so one-sided derivatives disagree.
    """

    def __init__(self, message: str, tied_coords: tuple[str, ...] = ()):
        super().__init__(message)
        self.tied_coords = tied_coords


class OutOfImage(BoxError):
    """A constructed box does not fit inside the image."""


class BadScale(BoxError):
    """Scale factor k must be > 1."""


class VerificationFailure(BoxError):
    """A verification suite assertion failed.

    Carries the machine-readable report with the first counterexample.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class SchemaError(BoxError):
    """Dataset or config JSON does not match the expected schema.

    ``pointer`` is a JSON-pointer-style path to the offending field.
    """

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer}: {message}" if pointer else message)
        self.pointer = pointer


class UnknownCategory(BoxError):
    """Requested category does not appear in the dataset."""


class IoFailure(BoxError):
    """Could not read or write a file."""


class ShapeMismatch(BoxError):
    """Batched inputs have inconsistent shapes or lengths."""
