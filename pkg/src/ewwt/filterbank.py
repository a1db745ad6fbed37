"""Empirical watershed wavelet filters and their dual frame."""
import hashlib
import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .errors import FrameViolationError, InvalidInputError, InvalidPartitionError
from .partition import Partition
from .spectrum import symmetric_map

SQRT2 = math.sqrt(2.0)
DEFAULT_TAU = 0.1


def quasi_euclidean_distance(a, b):
    """Quasi-euclidean distance between bins ``a = (k, l)`` and ``b = (p, q)``."""
    dk = abs(int(b[0]) - int(a[0]))
    dl = abs(int(b[1]) - int(a[1]))
    major, minor = (dk, dl) if dk >= dl else (dl, dk)
    return (SQRT2 - 1.0) * minor + major


@numba.njit(cache=True)
def _relax(ax, dg, val, i, j, p, q, diagonal):
    if ax[p, q] < 0:
        return
    a = ax[p, q]
    b = dg[p, q]
    if diagonal:
        b += 1
    else:
        a += 1
    v = a + b * SQRT2
    if v < val[i, j]:
        val[i, j] = v
        ax[i, j] = a
        dg[i, j] = b


@numba.njit(cache=True)
def _chamfer(seeds):
    # Two raster passes of the 3x3 (1, sqrt 2) chamfer mask. Each bin keeps
    # the integer (axial, diagonal) step counts of its best path so the final
    # distance is evaluated with the closed-form expression, bit for bit.
    h, w = seeds.shape
    ax = np.full((h, w), -1, dtype=np.int64)
    dg = np.full((h, w), -1, dtype=np.int64)
    val = np.full((h, w), np.inf)
    for i in range(h):
        for j in range(w):
            if seeds[i, j]:
                ax[i, j] = 0
                dg[i, j] = 0
                val[i, j] = 0.0
    for i in range(h):
        for j in range(w):
            if i > 0:
                if j > 0:
                    _relax(ax, dg, val, i, j, i - 1, j - 1, True)
                _relax(ax, dg, val, i, j, i - 1, j, False)
                if j < w - 1:
                    _relax(ax, dg, val, i, j, i - 1, j + 1, True)
            if j > 0:
                _relax(ax, dg, val, i, j, i, j - 1, False)
    for i in range(h - 1, -1, -1):
        for j in range(w - 1, -1, -1):
            if i < h - 1:
                if j < w - 1:
                    _relax(ax, dg, val, i, j, i + 1, j + 1, True)
                _relax(ax, dg, val, i, j, i + 1, j, False)
                if j > 0:
                    _relax(ax, dg, val, i, j, i + 1, j - 1, True)
            if j < w - 1:
                _relax(ax, dg, val, i, j, i, j + 1, False)
    out = np.full((h, w), np.inf)
    for i in range(h):
        for j in range(w):
            if ax[i, j] >= 0:
                minor = dg[i, j]
                major = ax[i, j] + dg[i, j]
                out[i, j] = (SQRT2 - 1.0) * minor + major
    return out


def chamfer_distance(seeds):
    """Quasi-euclidean distance from every bin to the nearest ``True`` bin."""
    return _chamfer(np.ascontiguousarray(seeds, dtype=np.bool_))


def inner_boundary(mask):
    """Bins of ``mask`` with at least one 8-neighbor outside it."""
    mask = np.asarray(mask, dtype=bool)
    padded = np.pad(mask, 1, mode="constant", constant_values=True)
    h, w = mask.shape
    interior = np.ones_like(mask)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            interior &= padded[1 + di : 1 + di + h, 1 + dj : 1 + dj + w]
    return mask & ~interior


def frequency_scale(dims):
    return 2.0 * math.pi / min(dims)


@dataclass(frozen=True)
class SignedDistancePlane:
    data: np.ndarray
    region_index: int


def _region_mask(partition, n):
    if not 1 <= n <= partition.n_regions:
        raise InvalidInputError(f"region index {n} outside 1..{partition.n_regions}")
    mask = np.asarray(partition.labels) == n
    if not mask.any():
        raise InvalidPartitionError(f"region {n} is empty")
    return mask


def region_distance_transform(partition: Partition, n: int) -> SignedDistancePlane:
    """Signed distance to the boundary of region ``n``.

    The boundary is the set of region bins with an outside 8-neighbor.
    Values are positive inside, negative outside, scaled by ``2 pi / N``.
    A region covering the whole grid has no boundary: ``+inf`` everywhere.
    """
    mask = _region_mask(partition, n)
    boundary = inner_boundary(mask)
    if not boundary.any():
        return SignedDistancePlane(np.full(mask.shape, np.inf), n)
    d = frequency_scale(mask.shape) * chamfer_distance(boundary)
    return SignedDistancePlane(np.where(mask, d, -d), n)


def interface_distance_transform(partition: Partition, n: int) -> SignedDistancePlane:
    """Signed distance to the interface between region ``n`` and the rest.

    The interface runs half a bin outside the region's boundary bins: inside
    bins measure ``d(c, outside) - 1/2``, outside bins ``-(d(c, region) - 1/2)``.
    Two adjacent regions then satisfy ``D_2 = -D_1`` exactly.
    """
    mask = _region_mask(partition, n)
    if mask.all():
        return SignedDistancePlane(np.full(mask.shape, np.inf), n)
    scale = frequency_scale(mask.shape)
    inside = chamfer_distance(~mask)
    outside = chamfer_distance(mask)
    data = np.where(mask, scale * (inside - 0.5), -(scale * (outside - 0.5)))
    return SignedDistancePlane(data, n)


def beta(x):
    """Transition polynomial ``x^4 (35 - 84x + 70x^2 - 20x^3)`` clamped to [0, 1]."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    # Horner form keeps beta(x) + beta(1 - x) within a few ulps of 1
    out = (x * x) * (x * x) * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)))
    return out if out.ndim else float(out)


def build_filter(distance, tau=DEFAULT_TAU):
    """Filter with a cosine roll-off of half-width ``tau`` around ``D = 0``."""
    if not tau > 0:
        raise InvalidInputError(f"tau must be positive, got {tau}")
    d = distance.data if isinstance(distance, SignedDistancePlane) else np.asarray(distance, float)
    out = np.zeros(d.shape)
    out[d > tau] = 1.0
    band = np.abs(d) <= tau
    out[band] = np.cos(0.5 * math.pi * beta((tau - d[band]) / (2.0 * tau)))
    return out


def _canonical_copy(plane):
    # Copy each value onto its mirror bin from the lexicographically smaller
    # member of the pair, making the plane exactly sym-symmetric.
    h, w = plane.shape
    flat = np.arange(h * w).reshape(h, w)
    canon = np.minimum(flat, flat[symmetric_map((h, w))])
    return plane.ravel()[canon]


def dual_filter_bank(filters):
    """Canonical dual: each filter divided by the sum of squared filters."""
    filters = np.asarray(filters, dtype=np.float64)
    energy = np.sum(filters**2, axis=0)
    if not np.all(energy > 0):
        bad = np.argwhere(~(energy > 0))[0]
        raise FrameViolationError(f"filter energy vanishes at bin {tuple(int(x) for x in bad)}")
    return filters / energy


@dataclass(frozen=True, eq=False)
class FilterBank:
    filters: np.ndarray  # (n, H, W)
    duals: np.ndarray
    tau: float
    partition: Optional[Partition] = None

    @property
    def n_filters(self):
        return self.filters.shape[0]

    @property
    def shape(self):
        return self.filters.shape[1:]

    @property
    def ref(self):
        """Content hash binding coefficients to the filters that made them."""
        digest = hashlib.sha256()
        digest.update(np.asarray(self.filters.shape, dtype=np.int64).tobytes())
        digest.update(np.ascontiguousarray(self.filters, dtype="<f8").tobytes())
        return digest.hexdigest()[:16]

    @classmethod
    def from_filters(cls, filters, tau, partition=None):
        filters = np.asarray(filters, dtype=np.float64)
        if filters.ndim != 3:
            raise InvalidInputError("filters must be stacked as (n, H, W)")
        return cls(filters=filters, duals=dual_filter_bank(filters), tau=float(tau), partition=partition)


def build_filter_bank(partition: Partition, tau=DEFAULT_TAU, distance="interface") -> FilterBank:
    """One filter per region, plus duals.

    ``distance="interface"`` (default) uses :func:`interface_distance_transform`;
    ``"boundary"`` uses :func:`region_distance_transform` directly, which on the
    lattice leaves a one-bin gap between neighbors and a lower frame bound
    near 1/2. Filters of a paired partition are made exactly sym-symmetric.
    """
    if not tau > 0:
        raise InvalidInputError(f"tau must be positive, got {tau}")
    transform = {
        "interface": interface_distance_transform,
        "boundary": region_distance_transform,
    }.get(distance)
    if transform is None:
        raise InvalidInputError(f"unknown distance mode {distance!r}")
    planes = []
    for n in range(1, partition.n_regions + 1):
        phi = build_filter(transform(partition, n), tau)
        if partition.paired:
            phi = _canonical_copy(phi)
        planes.append(phi)
    return FilterBank.from_filters(np.stack(planes), tau, partition)


def frame_bounds(bank):
    """Empirical frame bounds ``(min, max)`` of the summed squared filters."""
    energy = np.sum(np.asarray(bank.filters if isinstance(bank, FilterBank) else bank) ** 2, axis=0)
    return float(energy.min()), float(energy.max())
