"""Exception types shared across the package.

Every error carries a stable machine-readable ``code`` string; the CLI maps
codes to exit codes and the HTTP service puts them in JSON error bodies.
"""


class ThinLensError(Exception):
    """Base class for all package errors."""

    code = "internal"


class SingularLens(ThinLensError):
    """focus_scale * focus_distance is too close to the focal length."""

    code = "singular_lens"


class InvalidDepth(ThinLensError):
    """Depth map contains non-positive or non-finite values."""

    code = "invalid_depth"


class DimensionMismatch(ThinLensError):
    """Paired rasters do not share dimensions."""

    code = "dimension_mismatch"


class ZeroSaliencyMass(ThinLensError):
    """Saliency map has (near-)zero total mass; weighted average undefined."""

    code = "zero_saliency_mass"


class MissingParameter(ThinLensError):
    """A lens parameter could not be resolved from any source."""

    code = "missing_parameter"

    def __init__(self, field: str):
        self.field = field
        super().__init__(f"unresolved lens parameter: {field}")


class TooFewImages(ThinLensError):
    """Metric needs at least two inputs."""

    code = "too_few_images"


class InvalidKernel(ThinLensError):
    """Kernel taps are negative or do not sum to one."""

    code = "invalid_kernel"


class InvalidApertureList(ThinLensError):
    """Aperture sweep list must be strictly increasing."""

    code = "invalid_aperture_list"


class NotAnImage(ThinLensError):
    """Bytes do not start with a JPEG SOI marker or a TIFF header."""

    code = "not_an_image"


class TruncatedExif(ThinLensError):
    """An EXIF offset or value points outside the supplied bytes."""

    code = "truncated_exif"


class MalformedIfd(ThinLensError):
    """IFD structure is internally inconsistent."""

    code = "malformed_ifd"


class ZeroDenominator(ThinLensError):
    """A RATIONAL value has denominator zero."""

    code = "zero_denominator"


class UnknownSession(ThinLensError):
    """Render request references a session id that does not exist."""

    code = "unknown_session"
