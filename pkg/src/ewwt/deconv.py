"""Non-blind deconvolution with an empirical-wavelet sparsity prior.

The solver is the first-order primal-dual scheme for

    min_u  sum_n |W_u(n)|_1 + lambda/2 |A * u - f|^2

with the dual step projecting onto the unit ball, the primal step solved in
closed form in the Fourier domain, and the transform inverse standing in for
its adjoint.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    DimensionMismatchError,
    DivergenceError,
    EmptyPartitionError,
    InvalidInputError,
    PairingError,
)
from .filterbank import DEFAULT_TAU, FilterBank, build_filter_bank
from .partition import build_partition
from .scalespace import ScaleSpaceConfig
from .spectrum import as_image, forward_fft, inverse_fft
from .transform import analyze, synthesize

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BlurKernel:
    spatial: np.ndarray  # H x W, tap for offset (0, 0) at index (0, 0)
    spectrum: np.ndarray  # centered, unnormalized DFT: spectrum[DC] == sum(spatial)
    variance: Optional[float] = None

    @property
    def shape(self):
        return self.spatial.shape

    def apply(self, image):
        """Circular convolution ``A * image``."""
        return inverse_fft(forward_fft(image) * self.spectrum)


def kernel_from_taps(taps, dims, variance=None):
    """Embed a centered odd-sized tap array circularly into an ``dims`` grid."""
    taps = np.asarray(taps, dtype=np.float64)
    if taps.ndim != 2 or taps.shape[0] % 2 == 0 or taps.shape[1] % 2 == 0:
        raise InvalidInputError("kernel taps must be a 2D array with odd sides")
    if taps.shape[0] > dims[0] or taps.shape[1] > dims[1]:
        raise InvalidInputError(f"kernel {taps.shape} larger than image {tuple(dims)}")
    total = taps.sum()
    if not (np.all(np.isfinite(taps)) and total > 0):
        raise InvalidInputError("kernel taps must be finite with a positive sum")
    taps = taps / total
    spatial = np.zeros(dims)
    rk, rl = taps.shape[0] // 2, taps.shape[1] // 2
    rows = np.arange(-rk, rk + 1) % dims[0]
    cols = np.arange(-rl, rl + 1) % dims[1]
    np.add.at(spatial, np.ix_(rows, cols), taps)
    spectrum = np.fft.fftshift(np.fft.fft2(spatial))
    return BlurKernel(spatial=spatial, spectrum=spectrum, variance=variance)


def gaussian_blur_kernel(variance, dims):
    """Sampled isotropic Gaussian of the given variance, radius ``ceil(4 sigma)``."""
    if not variance > 0:
        raise InvalidInputError(f"blur variance must be positive, got {variance}")
    sigma = math.sqrt(variance)
    radius = int(math.ceil(4.0 * sigma))
    radius = min(radius, (dims[0] - 1) // 2, (dims[1] - 1) // 2)
    x = np.arange(-radius, radius + 1)
    taps = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / (2.0 * variance))
    return kernel_from_taps(taps, dims, variance=float(variance))


def prox_linf_dual(y, candidate, sigma):
    """Dual step: ``z / max(1, |z|)`` with ``z = y + sigma * candidate``."""
    z = np.asarray(y) + sigma * np.asarray(candidate)
    return z / np.maximum(1.0, np.abs(z))


def prox_data(z, f, kernel: BlurKernel, nu, lam):
    """Exact minimizer of ``|z - v|^2 / 2 + nu lam / 2 |A * v - f|^2``."""
    z = np.asarray(z, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if z.shape != f.shape or z.shape != kernel.shape:
        raise DimensionMismatchError("z, f and kernel must share dimensions")
    a_hat = kernel.spectrum
    w = nu * lam
    num = w * np.conj(a_hat) * forward_fft(f) + forward_fft(z)
    return inverse_fft(num / (1.0 + w * np.abs(a_hat) ** 2))


@dataclass(frozen=True)
class DeconvConfig:
    lam: float = 5000.0
    sigma: float = 0.1
    nu: float = 0.1
    theta: float = 1.0
    tol: float = 2e-4
    max_iter: int = 200
    mode: str = "fixed"
    refresh_period: float = 1  # iterations between bank updates; math.inf never

    def __post_init__(self):
        for name in ("lam", "sigma", "nu", "tol"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        if self.theta not in (0, 1):
            raise InvalidInputError("theta must be 0 or 1")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidInputError("max_iter must be a positive integer")
        if self.mode not in ("fixed", "adaptive"):
            raise InvalidInputError(f"unknown mode {self.mode!r}")
        if not self.refresh_period >= 1:
            raise InvalidInputError("refresh_period must be >= 1")


@dataclass
class PrimalDualState:
    u: np.ndarray
    u_bar: np.ndarray
    y: np.ndarray  # coefficient planes under the current bank
    bank: FilterBank
    iteration: int = 0


@dataclass
class DeconvResult:
    u: np.ndarray
    iterations: int
    rel_change: float
    converged: bool
    bank: FilterBank
    bank_updates: int = 0
    history: list = field(default_factory=list)


def _check_finite(state, k):
    for name in ("u", "u_bar", "y"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise DivergenceError(f"non-finite {name} at iteration {k}", iteration=k)


def _solve(f, kernel, config, ss_config, tau, adaptive, bank=None):
    f = as_image(f)
    if f.shape != kernel.shape:
        raise DimensionMismatchError(f"image {f.shape} and kernel {kernel.shape} differ")
    if bank is None:
        bank = build_filter_bank(build_partition(f, ss_config), tau)
    state = PrimalDualState(u=f.copy(), u_bar=f.copy(), y=analyze(f, bank), bank=bank)
    rel = math.inf
    updates = 0
    history = []
    converged = False
    for k in range(1, int(config.max_iter) + 1):
        state.y = prox_linf_dual(state.y, analyze(state.u_bar, state.bank), config.sigma)
        u_new = prox_data(
            state.u - config.nu * synthesize(state.y, state.bank), f, kernel, config.nu, config.lam
        )
        state.u_bar = u_new + config.theta * (u_new - state.u)
        rel = float(np.linalg.norm(u_new - state.u) / max(np.linalg.norm(state.u), 1e-12))
        state.u = u_new
        state.iteration = k
        history.append(rel)
        _check_finite(state, k)
        if adaptive and k % config.refresh_period == 0:
            # The dual variable crosses banks through the image domain.
            try:
                new_bank = build_filter_bank(build_partition(state.u, ss_config), tau)
            except (EmptyPartitionError, PairingError) as exc:
                log.warning("bank refresh failed at iteration %d (%s); keeping previous bank", k, exc)
            else:
                y_img = synthesize(state.y, state.bank)
                state.bank = new_bank
                state.y = analyze(y_img, new_bank)
                updates += 1
        if rel < config.tol:
            converged = True
            break
    return DeconvResult(
        u=state.u,
        iterations=state.iteration,
        rel_change=rel,
        converged=converged,
        bank=state.bank,
        bank_updates=updates,
        history=history,
    )


def deconv_fixed(f, kernel, config=DeconvConfig(), ss_config=ScaleSpaceConfig(), tau=DEFAULT_TAU, bank=None):
    """Deconvolve with a filter bank detected once from ``f``."""
    return _solve(f, kernel, config, ss_config, tau, adaptive=False, bank=bank)


def deconv_adaptive(f, kernel, config=DeconvConfig(mode="adaptive"), ss_config=ScaleSpaceConfig(), tau=DEFAULT_TAU, bank=None):
    """Deconvolve while re-detecting the filter bank from the current estimate
    every ``config.refresh_period`` iterations. A failed detection keeps the
    previous bank."""
    return _solve(f, kernel, config, ss_config, tau, adaptive=True, bank=bank)


def deconvolve(f, kernel, config=DeconvConfig(), ss_config=ScaleSpaceConfig(), tau=DEFAULT_TAU):
    solver = deconv_adaptive if config.mode == "adaptive" else deconv_fixed
    return solver(f, kernel, config, ss_config, tau)


def objective_value(u, f, kernel, bank, lam):
    """``sum_n |W_u(n)|_1 + lam/2 |A * u - f|^2``."""
    u = as_image(u)
    residual = kernel.apply(u) - np.asarray(f, dtype=np.float64)
    return float(np.sum(np.abs(analyze(u, bank))) + 0.5 * lam * np.sum(residual**2))


def ssim(u, reference, window=8, dynamic_range=1.0):
    """Mean SSIM over all ``window x window`` patches (no padding).

    Uses sample (N - 1) statistics and ``C1 = (0.01 L)^2``, ``C2 = (0.03 L)^2``.
    """
    x = np.asarray(u, dtype=np.float64)
    y = np.asarray(reference, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatchError(f"shapes {x.shape} and {y.shape} differ")
    if x.ndim != 2 or min(x.shape) < window:
        raise InvalidInputError(f"images must be 2D and at least {window}x{window}")
    c1 = (0.01 * dynamic_range) ** 2
    c2 = (0.03 * dynamic_range) ** 2
    n = window * window
    px = sliding_window_view(x, (window, window)).reshape(-1, n)
    py = sliding_window_view(y, (window, window)).reshape(-1, n)
    mx = px.mean(axis=1)
    my = py.mean(axis=1)
    dx = px - mx[:, None]
    dy = py - my[:, None]
    vx = np.einsum("ij,ij->i", dx, dx) / (n - 1)
    vy = np.einsum("ij,ij->i", dy, dy) / (n - 1)
    cxy = np.einsum("ij,ij->i", dx, dy) / (n - 1)
    s = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx**2 + my**2 + c1) * (vx + vy + c2))
    return float(s.mean())
