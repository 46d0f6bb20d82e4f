"""Differentiable thin-lens defocus rendering toolkit."""

from .errors import (
    DimensionMismatch,
    InvalidApertureList,
    InvalidDepth,
    InvalidKernel,
    MalformedIfd,
    MissingParameter,
    NotAnImage,
    SingularLens,
    ThinLensError,
    TooFewImages,
    TruncatedExif,
    UnknownSession,
    ZeroDenominator,
    ZeroSaliencyMass,
)
from .exif import (
    DofBucket,
    ExifRecord,
    PartitionConfig,
    PartitionReport,
    classify_dof_bucket,
    parse_exif,
    partition_corpus,
)
from .focus import (
    FocusEstimate,
    focus_from_saliency,
    huber_loss,
    resolve_lens_params,
    stub_saliency,
)
from .lens import (
    APERTURE_SWEEP,
    LensGradients,
    LensParams,
    SoftDiskKernel,
    build_soft_disk_kernel,
    compute_coc_map,
    default_coc_max_px,
    default_pixels_per_unit,
    render_adjoint,
    render_defocus,
    sweep_apertures,
)
from .metrics import (
    CONSISTENCY_APERTURES,
    EnergyValue,
    LabelStack,
    blur_monotonicity,
    circular_convolve,
    circular_energy_oracle,
    content_consistency,
    signal_energy,
)
from .pipeline import RenderResult, render_scene

__version__ = "0.1.0"

__all__ = [
    "APERTURE_SWEEP",
    "CONSISTENCY_APERTURES",
    "DimensionMismatch",
    "DofBucket",
    "EnergyValue",
    "ExifRecord",
    "FocusEstimate",
    "InvalidApertureList",
    "InvalidDepth",
    "InvalidKernel",
    "LabelStack",
    "LensGradients",
    "LensParams",
    "MalformedIfd",
    "MissingParameter",
    "NotAnImage",
    "PartitionConfig",
    "PartitionReport",
    "RenderResult",
    "SingularLens",
    "SoftDiskKernel",
    "ThinLensError",
    "TooFewImages",
    "TruncatedExif",
    "UnknownSession",
    "ZeroDenominator",
    "ZeroSaliencyMass",
    "blur_monotonicity",
    "build_soft_disk_kernel",
    "circular_convolve",
    "circular_energy_oracle",
    "classify_dof_bucket",
    "compute_coc_map",
    "content_consistency",
    "default_coc_max_px",
    "default_pixels_per_unit",
    "focus_from_saliency",
    "huber_loss",
    "parse_exif",
    "partition_corpus",
    "render_adjoint",
    "render_defocus",
    "render_scene",
    "resolve_lens_params",
    "signal_energy",
    "stub_saliency",
    "sweep_apertures",
]
