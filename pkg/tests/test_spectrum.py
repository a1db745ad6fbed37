import numpy as np
import pytest
from hypothesis import given, strategies as st

from ewwt.errors import InvalidInputError, SymmetryViolationError
from ewwt.spectrum import (
    as_image,
    forward_fft,
    inverse_fft,
    magnitude_spectrum,
    reflect,
    symmetric_index,
    symmetric_map,
)
from oracles import direct_dft_centered


@pytest.mark.parametrize("shape", [(8, 8), (9, 9), (8, 11), (12, 9)])
def test_forward_matches_direct_dft(rng, shape):
    f = rng.standard_normal(shape)
    np.testing.assert_allclose(forward_fft(f), direct_dft_centered(f), atol=1e-12)


def test_unitary_energy(rng):
    f = rng.standard_normal((17, 24))
    assert np.isclose(np.sum(f**2), np.sum(np.abs(forward_fft(f)) ** 2), rtol=1e-12)


@pytest.mark.parametrize("shape", [(8, 8), (9, 9), (10, 13)])
def test_roundtrip(rng, shape):
    f = rng.standard_normal(shape)
    np.testing.assert_allclose(inverse_fft(forward_fft(f)), f, atol=1e-13)


def test_inverse_rejects_non_hermitian(rng):
    spec = forward_fft(rng.standard_normal((8, 8)))
    spec[1, 2] += 0.5j
    with pytest.raises(SymmetryViolationError):
        inverse_fft(spec)
    assert np.iscomplexobj(inverse_fft(spec, real=False))


def test_dc_holds_mean():
    f = np.full((9, 9), 2.0)
    spec = forward_fft(f)
    assert spec[4, 4] == pytest.approx(2.0 * 9)
    assert np.count_nonzero(np.abs(spec) > 1e-12) == 1


def test_symmetric_index_examples():
    assert symmetric_index((3, 5), (9, 9)) == (5, 3)
    assert symmetric_index((4, 4), (9, 9)) == (4, 4)
    assert symmetric_index((0, 3), (8, 8)) == (0, 5)
    with pytest.raises(InvalidInputError):
        symmetric_index((9, 0), (9, 9))


@given(st.integers(8, 20), st.integers(8, 20), st.data())
def test_symmetric_index_involution(h, w, data):
    k = data.draw(st.integers(0, h - 1))
    l = data.draw(st.integers(0, w - 1))
    mk, ml = symmetric_index((k, l), (h, w))
    assert symmetric_index((mk, ml), (h, w)) == (k, l)
    plane = np.arange(h * w).reshape(h, w)
    assert plane[symmetric_map((h, w))][k, l] == plane[mk, ml]


@pytest.mark.parametrize("shape", [(8, 8), (9, 9), (10, 9)])
def test_real_image_spectrum_is_hermitian(rng, shape):
    spec = forward_fft(rng.standard_normal(shape))
    # holds on even sides too: the Nyquist row/column mirrors onto itself
    np.testing.assert_allclose(reflect(spec), np.conj(spec), atol=1e-12)


def test_magnitude_spectrum_symmetric_and_nonnegative(rng):
    mag = magnitude_spectrum(rng.standard_normal((16, 16)))
    assert np.all(mag >= 0)
    assert np.array_equal(mag, reflect(mag))


@pytest.mark.parametrize(
    "bad",
    [np.zeros((4, 4)), np.zeros(10), np.zeros((9, 9)) + 1j, np.full((9, 9), np.nan)],
)
def test_as_image_rejects(bad):
    with pytest.raises(InvalidInputError):
        as_image(bad)
