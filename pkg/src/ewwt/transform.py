"""Forward and inverse empirical watershed wavelet transform."""
from dataclasses import dataclass

import numpy as np

from .errors import BankMismatchError, DimensionMismatchError
from .filterbank import DEFAULT_TAU, FilterBank, build_filter_bank
from .partition import build_partition
from .scalespace import ScaleSpaceConfig
from .spectrum import as_image, forward_fft, inverse_fft


@dataclass(frozen=True, eq=False)
class Coefficients:
    planes: np.ndarray  # (n, H, W), pixel domain
    bank_ref: str

    @property
    def n_planes(self):
        return self.planes.shape[0]

    def energies(self):
        return np.sum(self.planes**2, axis=(1, 2))


def analyze(image, bank: FilterBank) -> np.ndarray:
    """Coefficient planes of ``image`` under ``bank`` as an ``(n, H, W)`` array."""
    image = as_image(image)
    if image.shape != tuple(bank.shape):
        raise DimensionMismatchError(f"image {image.shape} does not match bank {tuple(bank.shape)}")
    spec = forward_fft(image)
    # filters are real, so conjugation is a no-op
    return np.stack([inverse_fft(spec * phi) for phi in bank.filters])


def synthesize(planes, bank: FilterBank) -> np.ndarray:
    """Dual-frame reconstruction from coefficient planes."""
    planes = np.asarray(planes, dtype=np.float64)
    if planes.shape != bank.filters.shape:
        raise DimensionMismatchError(f"planes {planes.shape} do not match bank {bank.filters.shape}")
    acc = np.zeros(bank.shape, dtype=np.complex128)
    for plane, dual in zip(planes, bank.duals):
        acc += forward_fft(plane) * dual
    return inverse_fft(acc)


def ewwt_forward(image, bank: FilterBank) -> Coefficients:
    return Coefficients(planes=analyze(image, bank), bank_ref=bank.ref)


def ewwt_inverse(coeffs: Coefficients, bank: FilterBank) -> np.ndarray:
    if coeffs.bank_ref != bank.ref:
        raise BankMismatchError("coefficients were produced by a different filter bank")
    return synthesize(coeffs.planes, bank)


def ewwt(image, config=ScaleSpaceConfig(), tau=DEFAULT_TAU):
    """Detect a partition from ``image``, build its filter bank and transform.

    Returns ``(coefficients, partition, bank)``.
    """
    image = as_image(image)
    partition = build_partition(image, config)
    bank = build_filter_bank(partition, tau)
    return ewwt_forward(image, bank), partition, bank
