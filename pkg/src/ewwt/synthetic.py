"""Deterministic synthetic test images."""
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError

# carriers in cycles per image side (vertical, horizontal) for a 128 grid;
# scaled with the image size
TOY_CARRIERS = ((22.0, 6.0), (-9.0, 30.0), (30.0, -30.0), (6.0, -44.0))


@dataclass(frozen=True, eq=False)
class ToyImage:
    image: np.ndarray
    modes: List[np.ndarray]
    cartoon: np.ndarray
    carriers: List[Tuple[float, float]]
    seed: int

    def manifest(self):
        return {
            "height": int(self.image.shape[0]),
            "width": int(self.image.shape[1]),
            "seed": int(self.seed),
            "carriers_cycles_per_side": [list(c) for c in self.carriers],
        }


def _grid(shape):
    h, w = shape
    return np.meshgrid(np.arange(h) / h, np.arange(w) / w, indexing="ij")


def make_toy_image(shape=(128, 128), seed=0) -> ToyImage:
    """Four AM/FM harmonic modes over a blurred two-level piecewise-constant
    layout. Carriers are fixed (scaled to the grid); the seed perturbs phases,
    modulation and the cartoon layout."""
    h, w = shape
    if h < 64 or w < 64:
        raise InvalidInputError("toy image needs at least 64x64 pixels")
    rng = np.random.default_rng(seed)
    y, x = _grid(shape)
    scale = np.array([h, w]) / 128.0

    modes = []
    carriers = []
    for ky, kx in TOY_CARRIERS:
        ky, kx = round(ky * scale[0]), round(kx * scale[1])
        carriers.append((float(ky), float(kx)))
        phase = rng.uniform(0, 2 * np.pi)
        # slow amplitude and phase modulation keep each lobe compact
        am = 1.0 + 0.3 * np.cos(2 * np.pi * (x + rng.uniform()) ) * np.cos(2 * np.pi * (y + rng.uniform()))
        fm = 0.4 * np.sin(2 * np.pi * (y * rng.integers(1, 3) + x * rng.integers(1, 3)) + rng.uniform(0, 2 * np.pi))
        modes.append(0.06 * am * np.cos(2 * np.pi * (ky * y + kx * x) + phase + fm))

    cy, cx = rng.uniform(0.35, 0.65, size=2)
    r = rng.uniform(0.18, 0.28)
    disk = ((y - cy) ** 2 + (x - cx) ** 2) < r**2
    top, left = rng.uniform(0.05, 0.2, size=2)
    rect = (y > top) & (y < top + 0.3) & (x > left) & (x < left + 0.5)
    layout = 0.35 + 0.2 * disk + 0.15 * rect
    cartoon = ndimage.gaussian_filter(layout, 2.0, mode="wrap")

    image = cartoon + sum(modes)
    return ToyImage(image=image, modes=modes, cartoon=cartoon, carriers=carriers, seed=seed)


def make_texture(shape=(128, 128), seed=0):
    """Random oriented-grating texture scaled into [0.1, 0.9]."""
    rng = np.random.default_rng(seed)
    y, x = _grid(shape)
    h, w = shape
    img = np.zeros(shape)
    for _ in range(rng.integers(3, 6)):
        radius = rng.uniform(0.06, 0.3) * min(h, w)
        angle = rng.uniform(0, np.pi)
        ky, kx = np.round(radius * np.sin(angle)), np.round(radius * np.cos(angle))
        env = ndimage.gaussian_filter(rng.standard_normal(shape), 10.0, mode="wrap")
        env = 1.0 + env / (np.abs(env).max() + 1e-12)
        img += rng.uniform(0.5, 1.0) * env * np.cos(2 * np.pi * (ky * y + kx * x) + rng.uniform(0, 2 * np.pi))
    img += 1.5 * ndimage.gaussian_filter(rng.standard_normal(shape), 3.0, mode="wrap") / 0.1
    img -= img.min()
    img /= img.max()
    return 0.1 + 0.8 * img
