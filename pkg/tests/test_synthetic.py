import numpy as np
import pytest

from ewwt.errors import InvalidInputError
from ewwt.scalespace import detect_local_maxima, persistent_maxima
from ewwt.spectrum import magnitude_spectrum, symmetric_index
from ewwt.synthetic import make_texture, make_toy_image


def test_toy_is_deterministic():
    a, b = make_toy_image(seed=3), make_toy_image(seed=3)
    assert np.array_equal(a.image, b.image)
    assert not np.array_equal(a.image, make_toy_image(seed=4).image)
    assert a.manifest()["carriers_cycles_per_side"] == [list(c) for c in a.carriers]


def test_toy_needs_64():
    with pytest.raises(InvalidInputError):
        make_toy_image((32, 32))


def test_toy_spectrum_has_nine_lobes():
    toy = make_toy_image()
    mag = magnitude_spectrum(toy.image)
    peaks = set(detect_local_maxima(mag))
    h, w = toy.image.shape
    for ky, kx in toy.carriers:
        c = (h // 2 + int(ky), w // 2 + int(kx))
        # each lobe peaks within a couple of bins of its carrier, on both sides
        for p in (c, symmetric_index(c, (h, w))):
            assert any(max(abs(p[0] - q[0]), abs(p[1] - q[1])) <= 2 for q in peaks)
    assert (h // 2, w // 2) in peaks


def test_toy_carriers_are_persistent():
    toy = make_toy_image()
    markers = persistent_maxima(toy.image)
    h, w = toy.image.shape
    for ky, kx in toy.carriers:
        c = (h // 2 + int(ky), w // 2 + int(kx))
        assert any(max(abs(c[0] - m[0]), abs(c[1] - m[1])) <= 2 for m in markers)


def test_texture_range_and_determinism():
    t = make_texture((64, 48), 7)
    assert t.shape == (64, 48)
    assert t.min() >= 0.1 - 1e-12 and t.max() <= 0.9 + 1e-12
    assert np.array_equal(t, make_texture((64, 48), 7))
