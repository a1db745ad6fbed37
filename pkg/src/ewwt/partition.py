"""Watershed partition of the Fourier domain around persistent maxima."""
import heapq
from dataclasses import dataclass, field, replace
from typing import List, Optional, Set, Tuple

import numba
import numpy as np
from skimage.morphology import reconstruction

from .errors import InvalidInputError, PairingError
from .scalespace import ScaleSpaceConfig, persistent_maxima
from .spectrum import as_image, magnitude_spectrum, reflect, symmetric_index

Coord = Tuple[int, int]

_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class PairingState:
    m_p: int
    theta_sets: List[Set[int]]
    merged_regions: List[Set[int]]


@dataclass(frozen=True)
class Partition:
    """Label map over the centered frequency grid.

    ``labels`` holds region indices ``1..n_regions``; a freshly flooded
    partition also carries watershed-line bins labelled 0, flagged in
    ``boundary_mask``.
    """

    labels: np.ndarray
    n_regions: int
    markers: List[Coord]
    paired: bool = False
    boundary_mask: Optional[np.ndarray] = None
    pairing: Optional[PairingState] = field(default=None, compare=False)

    @property
    def shape(self):
        return self.labels.shape

    def region(self, n):
        return self.labels == n


def _check_markers(markers, dims):
    if len(markers) == 0:
        raise InvalidInputError("at least one marker is required")
    out = []
    for m in markers:
        k, l = int(m[0]), int(m[1])
        if not (0 <= k < dims[0] and 0 <= l < dims[1]):
            raise InvalidInputError(f"marker {(k, l)} outside a {dims[0]}x{dims[1]} grid")
        out.append((k, l))
    if len(set(out)) != len(out):
        raise InvalidInputError("duplicate markers")
    return out


def impose_minima(plane, markers):
    """Minima imposition by reconstruction-by-erosion (8-connectivity).

    Marker bins are set to ``min(plane) - 1``; every other catchment basin is
    filled up to its lowest spill level, so the result's regional minima are
    exactly the markers.
    """
    plane = np.asarray(plane, dtype=np.float64)
    markers = _check_markers(markers, plane.shape)
    sentinel = float(plane.min()) - 1.0
    rows, cols = np.array(markers).T
    mask = plane.copy()
    mask[rows, cols] = sentinel
    seed = np.full(plane.shape, float(plane.max()))
    seed[rows, cols] = sentinel
    return reconstruction(seed, mask, method="erosion", footprint=np.ones((3, 3)))


@numba.njit(cache=True)
def _push_neighbors(heap, labels, level, best_lev, best_step, i, j, lev, step):
    h, w = labels.shape
    for di in range(-1, 2):
        for dj in range(-1, 2):
            if di == 0 and dj == 0:
                continue
            a, b = i + di, j + dj
            if 0 <= a < h and 0 <= b < w and labels[a, b] < 0:
                v = level[a, b]
                if v <= lev:
                    kl, ks = lev, step + 1
                else:
                    kl, ks = v, 1
                bl, bs = best_lev[a, b], best_step[a, b]
                if kl < bl or (kl == bl and ks < bs):
                    best_lev[a, b] = kl
                    best_step[a, b] = ks
                    heapq.heappush(heap, (kl, ks, a, b))


@numba.njit(cache=True)
def _flood(level, rows, cols):
    h, w = level.shape
    labels = np.full((h, w), -1, dtype=np.int64)
    best_lev = np.full((h, w), np.inf)
    best_step = np.zeros((h, w), dtype=np.int64)
    heap = [(0.0, 0, 0, 0)]
    heap.pop()
    for n in range(rows.size):
        labels[rows[n], cols[n]] = n + 1
    sentinel = level.min()
    for n in range(rows.size):
        _push_neighbors(heap, labels, level, best_lev, best_step, rows[n], cols[n], sentinel, 0)

    batch_a = np.empty(h * w, dtype=np.int64)
    batch_b = np.empty(h * w, dtype=np.int64)
    batch_lab = np.empty(h * w, dtype=np.int64)
    while len(heap) > 0:
        lev, step, i, j = heapq.heappop(heap)
        count = 0
        cur_i, cur_j = i, j
        while True:
            if labels[cur_i, cur_j] < 0 and best_lev[cur_i, cur_j] == lev and best_step[cur_i, cur_j] == step:
                seen = 0
                many = False
                for di in range(-1, 2):
                    for dj in range(-1, 2):
                        p, q = cur_i + di, cur_j + dj
                        if (di != 0 or dj != 0) and 0 <= p < h and 0 <= q < w and labels[p, q] > 0:
                            if seen == 0:
                                seen = labels[p, q]
                            elif labels[p, q] != seen:
                                many = True
                batch_a[count] = cur_i
                batch_b[count] = cur_j
                batch_lab[count] = 0 if many else seen
                count += 1
            if len(heap) > 0 and heap[0][0] == lev and heap[0][1] == step:
                _, _, cur_i, cur_j = heapq.heappop(heap)
            else:
                break
        # a bin can sit in the heap twice with the same key; decide it once
        for t in range(count):
            if labels[batch_a[t], batch_b[t]] < 0:
                labels[batch_a[t], batch_b[t]] = batch_lab[t]
        for t in range(count):
            if batch_lab[t] > 0 and labels[batch_a[t], batch_b[t]] == batch_lab[t]:
                _push_neighbors(heap, labels, level, best_lev, best_step, batch_a[t], batch_b[t], lev, step)

    for i in range(h):
        for j in range(w):
            if labels[i, j] < 0:
                labels[i, j] = 0
    return labels


def flood(level, markers):
    """Marker-driven flooding of an already imposed landscape.

    Bins are flooded in order of ``(level, step)``, where ``step`` counts
    breadth-first rings inside a flat level. All bins sharing a key are decided
    together from the labels fixed before them: one neighboring label claims
    the bin, two or more make it a watershed line (label 0). Lines do not
    propagate; bins never reached end up as lines too.
    """
    level = np.ascontiguousarray(level, dtype=np.float64)
    markers = _check_markers(markers, level.shape)
    rows, cols = (np.array(x, dtype=np.int64) for x in zip(*markers))
    return _flood(level, rows, cols)


def watershed_from_markers(plane, markers):
    """Impose minima at ``markers`` on ``plane`` and flood it."""
    markers = _check_markers(markers, np.shape(plane))
    labels = flood(impose_minima(plane, markers), markers)
    return Partition(
        labels=labels,
        n_regions=len(markers),
        markers=list(markers),
        paired=False,
        boundary_mask=labels == 0,
    )


def marker_watershed(image, markers) -> Partition:
    """Watershed of the inverted magnitude spectrum of ``image``.

    Lines follow the paths of lowest magnitude between the markers. A single
    marker yields one region covering the grid.
    """
    image = as_image(image)
    return watershed_from_markers(-magnitude_spectrum(image), markers)


def assign_boundary_pixels(partition: Partition) -> Partition:
    """Give every watershed-line bin a region label.

    Bins are visited in raster order, pass after pass; a line bin ``c`` takes
    the smallest positive label found among the 8-neighbors of ``c`` and of
    ``sym(c)``; the same label goes to ``sym(c)`` when that is a line bin too.
    """
    labels = np.array(partition.labels, dtype=np.int64, copy=True)
    h, w = labels.shape
    dims = (h, w)
    todo = [tuple(int(x) for x in c) for c in np.argwhere(labels == 0)]
    while todo:
        remaining = []
        for c in todo:
            if labels[c] != 0:
                continue
            mate = symmetric_index(c, dims)
            found = 0
            for i, j in (c, mate):
                for di, dj in _OFFSETS:
                    a, b = i + di, j + dj
                    if 0 <= a < h and 0 <= b < w:
                        v = labels[a, b]
                        if v > 0 and (found == 0 or v < found):
                            found = int(v)
            if found:
                labels[c] = found
                if labels[mate] == 0:
                    labels[mate] = found
            else:
                remaining.append(c)
        if len(remaining) == len(todo):
            raise InvalidInputError("partition has no labelled region to grow from")
        todo = remaining
    return replace(partition, labels=labels)


def pairing_plan(labels, markers) -> PairingState:
    """Pairing bookkeeping: which flooded regions merge into which pair."""
    dims = labels.shape
    markers = [tuple(m) for m in markers]
    marker_set = set(markers)
    for m in markers:
        if symmetric_index(m, dims) not in marker_set:
            raise PairingError(f"marker {m} has no symmetric mate")
    n = len(markers)
    # Bins that are their own mirror: the DC bin, plus Nyquist bins on even grids.
    n_fixed = sum(symmetric_index(m, dims) == m for m in markers)
    if (n - n_fixed) % 2:
        raise PairingError(f"{n} markers with {n_fixed} self-symmetric ones cannot be paired")
    m_p = (n + n_fixed) // 2

    consumed = set()
    thetas, merged = [], []
    for idx, mu in enumerate(markers):
        if idx in consumed:
            continue
        theta = {int(labels[mu]), int(labels[symmetric_index(mu, dims)])}
        thetas.append(theta)
        merged.append(set(theta))
        consumed.update(m - 1 for m in theta)
    if len(merged) != m_p:
        raise PairingError(f"pairing produced {len(merged)} regions, expected {m_p}")
    return PairingState(m_p=m_p, theta_sets=thetas, merged_regions=merged)


def symmetrize_regions(partition: Partition, markers=None) -> Partition:
    """Merge each region with the one holding its marker's mirror image.

    The result is relabelled ``1..m_P`` in marker order. On even-sized grids
    the flooded cells need not mirror each other exactly; any bin whose label
    differs from its mirror's takes the smaller of the two.
    """
    markers = partition.markers if markers is None else [tuple(m) for m in markers]
    labels = np.asarray(partition.labels)
    if np.any(labels <= 0):
        raise InvalidInputError("assign boundary pixels before pairing")
    plan = pairing_plan(labels, markers)
    lut = np.zeros(int(labels.max()) + 1, dtype=np.int64)
    for new, group in enumerate(plan.merged_regions, start=1):
        for old in group:
            lut[old] = new
    paired = lut[labels]
    paired = np.minimum(paired, reflect(paired))
    return Partition(
        labels=paired,
        n_regions=plan.m_p,
        markers=list(markers),
        paired=True,
        boundary_mask=partition.boundary_mask,
        pairing=plan,
    )


def build_partition(image, config=ScaleSpaceConfig()) -> Partition:
    """Detect, flood, fill and pair: the full partition pipeline."""
    image = as_image(image)
    markers = persistent_maxima(image, config)
    flooded = marker_watershed(image, markers)
    return symmetrize_regions(assign_boundary_pixels(flooded), markers)
