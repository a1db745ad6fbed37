"""Discrete Gaussian scale-space of the magnitude spectrum and persistence
of its local maxima."""
import csv
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree
from scipy.special import ive

from .errors import EmptyPartitionError, InvalidInputError
from .spectrum import as_image, center, magnitude_spectrum, symmetric_index

Coord = Tuple[int, int]


@dataclass(frozen=True)
class ScaleSpaceConfig:
    """Parameters of the persistent-maxima detector.

    ``s0`` is the scale step; with ``alpha = 1`` a scale ``s`` is the variance
    of the discrete Gaussian kernel. ``edge_exclusion`` is the width, in bins,
    of the border band whose maxima are discarded.
    """

    s0: float = 1.0
    alpha: float = 1.0
    kernel_truncation_eps: float = 1e-8
    edge_exclusion: int = 0
    max_scale_override: Optional[float] = None
    # magnitudes below this fraction of the peak are FFT round-off; zeroed
    relative_floor: float = 1e-12

    def __post_init__(self):
        if not self.s0 > 0:
            raise InvalidInputError(f"s0 must be positive, got {self.s0}")
        if not self.alpha > 0:
            raise InvalidInputError(f"alpha must be positive, got {self.alpha}")
        if not 0 < self.kernel_truncation_eps <= 1e-6:
            raise InvalidInputError("kernel_truncation_eps must lie in (0, 1e-6]")
        if int(self.edge_exclusion) != self.edge_exclusion or self.edge_exclusion < 0:
            raise InvalidInputError("edge_exclusion must be a non-negative integer")
        if self.max_scale_override is not None and not self.max_scale_override > 0:
            raise InvalidInputError("max_scale_override must be positive")
        if not 0 <= self.relative_floor < 1:
            raise InvalidInputError("relative_floor must lie in [0, 1)")

    def check_dims(self, dims):
        if self.edge_exclusion >= min(dims) / 4:
            raise InvalidInputError(
                f"edge_exclusion {self.edge_exclusion} too wide for a {dims[0]}x{dims[1]} grid"
            )


@dataclass(frozen=True)
class DiscreteKernel:
    taps: np.ndarray
    scale: float
    halfwidth: int

    @property
    def size(self):
        return 2 * self.halfwidth + 1


@dataclass(frozen=True)
class MaximumTrack:
    position: Coord
    lifespan: float
    birth_value: float
    birth_scale: float


def discrete_gaussian_kernel(s, config=ScaleSpaceConfig()):
    """Taps ``exp(-alpha s) I_k(alpha s)`` truncated where the excluded tail
    mass drops below ``config.kernel_truncation_eps``, renormalized to 1."""
    if not s > 0:
        raise InvalidInputError(f"scale must be positive, got {s}")
    t = config.alpha * s
    kmax = int(math.ceil(t + 12.0 * math.sqrt(t) + 30))
    half = ive(np.arange(kmax + 1), t)
    # tail[K] = mass of |k| > K, summed from the far end to avoid cancellation
    tail = 2.0 * np.concatenate([np.cumsum(half[::-1])[::-1][1:], [0.0]])
    halfwidth = int(np.argmax(tail < config.kernel_truncation_eps))
    side = half[1 : halfwidth + 1]
    taps = np.concatenate([side[::-1], half[:1], side])
    taps = taps / taps.sum()
    return DiscreteKernel(taps=taps, scale=float(s), halfwidth=halfwidth)


def scale_space_step(plane, kernel):
    """Separable convolution of ``plane`` with ``kernel`` (rows, then columns),
    half-sample symmetric boundary extension."""
    plane = np.asarray(plane, dtype=np.float64)
    out = ndimage.correlate1d(plane, kernel.taps, axis=1, mode="reflect")
    return ndimage.correlate1d(out, kernel.taps, axis=0, mode="reflect")


_NEIGHBORS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _shifted(padded, di, dj, h, w):
    return padded[1 + di : 1 + di + h, 1 + dj : 1 + dj + w]


def detect_local_maxima(plane) -> List[Coord]:
    """Regional maxima under 8-connectivity, sorted lexicographically.

    A flat plateau counts once, at its lexicographically smallest bin, and
    only if every bin around it is strictly lower. Border bins are compared
    against the neighbors that exist.
    """
    plane = np.asarray(plane, dtype=np.float64)
    h, w = plane.shape
    padded = np.pad(plane, 1, mode="constant", constant_values=-np.inf)
    # missing neighbors pad as -inf for the max, +inf for the "lower" test
    padded_hi = np.pad(plane, 1, mode="constant", constant_values=np.inf)
    nb_max = np.full(plane.shape, -np.inf)
    has_lower = np.zeros(plane.shape, dtype=bool)
    for di, dj in _NEIGHBORS:
        np.maximum(nb_max, _shifted(padded, di, dj, h, w), out=nb_max)
        has_lower |= _shifted(padded_hi, di, dj, h, w) < plane

    strict = plane > nb_max
    strict &= np.isfinite(nb_max)  # a 1x1 grid has no neighbor to beat
    found = [tuple(int(x) for x in c) for c in np.argwhere(strict)]

    flat = plane == nb_max
    if flat.any():
        # A flat candidate touching an equal-valued non-candidate sits on a
        # plateau that is not a regional maximum.
        candidate = flat | strict
        bad = np.zeros(plane.shape, dtype=bool)
        padded_cand = np.pad(candidate, 1, mode="constant", constant_values=True)
        for di, dj in _NEIGHBORS:
            nb = _shifted(padded, di, dj, h, w)
            nb_cand = _shifted(padded_cand, di, dj, h, w)
            bad |= flat & (nb == plane) & ~nb_cand
        labels, n = ndimage.label(flat, structure=np.ones((3, 3), dtype=bool))
        if n:
            flat_labels = labels.ravel()
            idx = np.arange(1, n + 1)
            any_bad = ndimage.maximum(bad, labels, idx).astype(bool)
            any_lower = ndimage.maximum(has_lower, labels, idx).astype(bool)
            _, first = np.unique(flat_labels, return_index=True)
            first = first[1:] if flat_labels[first[0]] == 0 else first
            for lab, pos in zip(idx, first):
                if any_lower[lab - 1] and not any_bad[lab - 1]:
                    found.append((int(pos // w), int(pos % w)))
    found.sort()
    return found


def max_scale(config, dims):
    """Largest sampled scale, ``4 s0 N / K`` rounded down to a multiple of s0.

    ``N`` is ``min(H, W)``; ``K`` is the kernel size evaluated at the candidate
    maximum scale, found by two rounds of fixed-point iteration from ``K = 3``.
    """
    if config.max_scale_override is not None:
        s_max = float(config.max_scale_override)
    else:
        n = min(dims)
        k = 3
        for _ in range(2):
            s_max = 4.0 * config.s0 * n / k
            k = discrete_gaussian_kernel(s_max, config).size
        s_max = 4.0 * config.s0 * n / k
    steps = max(1, int(math.floor(s_max / config.s0 + 1e-9)))
    return steps * config.s0


def scale_levels(config, dims):
    steps = int(round(max_scale(config, dims) / config.s0))
    return [m * config.s0 for m in range(1, steps + 1)]


def maxima_per_scale(magnitude, config=ScaleSpaceConfig()):
    """Yield ``(s, plane, maxima, kernel)`` for every sampled scale.

    Each level is blurred from the base plane with its own kernel.
    """
    magnitude = np.asarray(magnitude, dtype=np.float64)
    for s in scale_levels(config, magnitude.shape):
        kernel = discrete_gaussian_kernel(s, config)
        plane = scale_space_step(magnitude, kernel)
        yield s, plane, detect_local_maxima(plane), kernel


def track_persistence(magnitude, config=ScaleSpaceConfig()) -> List[MaximumTrack]:
    """Follow local maxima through scale-space and measure their lifespans.

    A maximum at the current scale continues the track of the nearest
    previous-scale maximum within a Chebyshev radius equal to the current
    kernel halfwidth (ties: larger previous value, then smaller coordinate).
    Unmatched maxima open new tracks.
    """
    magnitude = np.asarray(magnitude, dtype=np.float64)
    if np.any(magnitude < 0):
        raise InvalidInputError("magnitude spectrum must be non-negative")

    births = []  # (position, birth scale)
    last_seen = []
    base = None
    prev_coords = prev_ids = prev_vals = None
    for s, plane, maxima, kernel in maxima_per_scale(magnitude, config):
        if base is None:
            base = plane
        coords = np.array(maxima, dtype=np.int64).reshape(-1, 2)
        ids = np.empty(len(maxima), dtype=np.int64)
        tree = cKDTree(prev_coords) if prev_coords is not None and len(prev_coords) else None
        for i, c in enumerate(maxima):
            match = -1
            if tree is not None:
                near = tree.query_ball_point(c, r=kernel.halfwidth + 1e-9, p=np.inf)
                if near:
                    match = min(
                        near,
                        key=lambda j: (
                            max(abs(int(prev_coords[j, 0]) - c[0]), abs(int(prev_coords[j, 1]) - c[1])),
                            -prev_vals[j],
                            int(prev_coords[j, 0]),
                            int(prev_coords[j, 1]),
                        ),
                    )
            if match >= 0:
                ids[i] = prev_ids[match]
                last_seen[ids[i]] = s
            else:
                ids[i] = len(births)
                births.append((c, s))
                last_seen.append(s)
        prev_coords, prev_ids = coords, ids
        prev_vals = plane[coords[:, 0], coords[:, 1]] if len(coords) else np.empty(0)

    return [
        MaximumTrack(
            position=pos,
            lifespan=float(last_seen[t]),
            birth_value=float(base[pos]),
            birth_scale=float(born),
        )
        for t, (pos, born) in enumerate(births)
    ]


def otsu_threshold(values, nbins=256):
    """Otsu threshold over a 256-bin histogram spanning ``[min, max]``.

    Returns the midpoint between the largest value of the lower class and the
    smallest value of the upper class, so ``v > threshold`` reproduces the
    histogram split exactly. If all values are equal, returns ``min - 1``.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise InvalidInputError("otsu_threshold needs at least one value")
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        return lo - 1.0
    counts, edges = np.histogram(v, bins=nbins, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    p = counts / counts.sum()
    w0 = np.cumsum(p)[:-1]
    m0 = np.cumsum(p * centers)[:-1]
    mt = float(np.sum(p * centers))
    w1 = 1.0 - w0
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mt * w0 - m0) ** 2 / (w0 * w1)
    between[(w0 <= 0) | (w1 <= 0)] = -1.0
    t = int(np.argmax(between))
    bin_of = np.clip(np.searchsorted(edges, v, side="right") - 1, 0, nbins - 1)
    return 0.5 * (float(v[bin_of <= t].max()) + float(v[bin_of > t].min()))


def edge_distance(coord, dims):
    k, l = coord
    return min(k, dims[0] - 1 - k, l, dims[1] - 1 - l)


def radial_order(coords, dims):
    """Sort bins by squared distance to DC, then lexicographically."""
    ck, cl = center(dims)
    return sorted(coords, key=lambda c: ((c[0] - ck) ** 2 + (c[1] - cl) ** 2, c[0], c[1]))


def select_persistent(tracks, dims, config=ScaleSpaceConfig()):
    """Otsu-classify ``tracks`` by lifespan and return the sym-closed marker
    set, with the edge band removed, in radial order."""
    config.check_dims(dims)
    if not tracks:
        raise EmptyPartitionError("no local maxima in the magnitude spectrum")
    threshold = otsu_threshold([t.lifespan for t in tracks])
    kept = {t.position for t in tracks if t.lifespan > threshold}
    closed = kept | {symmetric_index(c, dims) for c in kept}
    band = config.edge_exclusion
    markers = [
        c
        for c in closed
        if edge_distance(c, dims) >= band and edge_distance(symmetric_index(c, dims), dims) >= band
    ]
    if not markers:
        raise EmptyPartitionError("no persistent maxima left after edge exclusion")
    return radial_order(markers, dims)


def persistent_maxima(image, config=ScaleSpaceConfig()) -> List[Coord]:
    """Locations of persistent maxima of the image magnitude spectrum."""
    image = as_image(image)
    mag = magnitude_spectrum(image)
    mag[mag < config.relative_floor * mag.max()] = 0.0
    return select_persistent(track_persistence(mag, config), image.shape, config)


def write_tracks_csv(tracks, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "l", "lifespan", "birth_value"])
        for t in tracks:
            writer.writerow([t.position[0], t.position[1], repr(t.lifespan), repr(t.birth_value)])
