"""Empirical watershed wavelet transform.

Detects harmonic modes as persistent maxima of the scale-space of the Fourier
magnitude, partitions the spectrum with a marker watershed, builds a smooth
tight-ish frame of band-pass filters on that partition and uses it for
analysis, synthesis and regularized deconvolution.
"""
from .deconv import (
    BlurKernel,
    DeconvConfig,
    DeconvResult,
    deconv_adaptive,
    deconv_fixed,
    deconvolve,
    gaussian_blur_kernel,
    kernel_from_taps,
    prox_data,
    prox_linf_dual,
    ssim,
)
from .errors import (
    ArtifactIOError,
    BankMismatchError,
    DimensionMismatchError,
    DivergenceError,
    EmptyPartitionError,
    EWWTError,
    FrameViolationError,
    InvalidInputError,
    InvalidPartitionError,
    PairingError,
    SymmetryViolationError,
)
from .filterbank import (
    FilterBank,
    beta,
    build_filter,
    build_filter_bank,
    dual_filter_bank,
    frame_bounds,
    region_distance_transform,
)
from .partition import (
    Partition,
    assign_boundary_pixels,
    build_partition,
    impose_minima,
    marker_watershed,
    symmetrize_regions,
)
from .scalespace import (
    ScaleSpaceConfig,
    detect_local_maxima,
    discrete_gaussian_kernel,
    otsu_threshold,
    persistent_maxima,
    scale_space_step,
    track_persistence,
)
from .spectrum import forward_fft, inverse_fft, magnitude_spectrum, symmetric_index
from .synthetic import make_texture, make_toy_image
from .transform import Coefficients, ewwt, ewwt_forward, ewwt_inverse

__version__ = "0.1.0"
