import math

import numpy as np
import pytest

from ewwt.deconv import (
    DeconvConfig,
    deconv_adaptive,
    deconv_fixed,
    deconvolve,
    gaussian_blur_kernel,
    kernel_from_taps,
    objective_value,
    prox_data,
    prox_linf_dual,
    ssim,
)
from ewwt.errors import DimensionMismatchError, DivergenceError, InvalidInputError
from ewwt.filterbank import FilterBank
from ewwt.synthetic import make_texture
from oracles import prox_data_dense, ssim_loops


def test_gaussian_kernel_properties():
    k = gaussian_blur_kernel(1.0, (32, 32))
    assert abs(k.spatial.sum() - 1) < 1e-12
    assert k.spatial[0, 0] == k.spatial.max()
    assert k.spectrum[16, 16] == pytest.approx(1.0, abs=1e-14)
    # radius ceil(4 sigma) = 4
    assert k.spatial[4, 0] > 0 and k.spatial[5, 0] == 0 and k.spatial[-4, 0] > 0
    assert np.allclose(k.apply(np.full((32, 32), 0.3)), 0.3, atol=1e-10)
    with pytest.raises(InvalidInputError):
        gaussian_blur_kernel(0.0, (32, 32))


def test_kernel_from_taps_validation():
    with pytest.raises(InvalidInputError):
        kernel_from_taps(np.ones((2, 3)), (16, 16))
    with pytest.raises(InvalidInputError):
        kernel_from_taps(np.ones((17, 17)), (16, 16))
    with pytest.raises(InvalidInputError):
        kernel_from_taps(-np.ones((3, 3)), (16, 16))


def test_blur_is_circular_convolution(rng):
    img = rng.random((16, 16))
    taps = rng.random((3, 5))
    k = kernel_from_taps(taps, (16, 16))
    taps = taps / taps.sum()
    want = np.zeros_like(img)
    for a in range(-1, 2):
        for b in range(-2, 3):
            want += taps[a + 1, b + 2] * np.roll(img, (a, b), axis=(0, 1))
    np.testing.assert_allclose(k.apply(img), want, atol=1e-13)


def test_prox_linf_examples():
    out = prox_linf_dual(np.array([0.5, 2.0, -3.0]), np.zeros(3), 0.1)
    np.testing.assert_array_equal(out, [0.5, 1.0, -1.0])
    y = np.random.default_rng(2).standard_normal((3, 8, 8)) * 3
    z = prox_linf_dual(y, y, 0.5)
    assert np.all(np.abs(z) <= 1)


@pytest.mark.parametrize("seed", range(3))
def test_prox_data_matches_dense_solve(seed):
    rng = np.random.default_rng(seed)
    k = kernel_from_taps(rng.random((5, 5)), (16, 16))
    z, f = rng.random((16, 16)), rng.random((16, 16))
    got = prox_data(z, f, k, 0.1, 50.0)
    np.testing.assert_allclose(got, prox_data_dense(z, f, k.spatial, 0.1, 50.0), atol=1e-8)


def test_prox_data_delta_kernel(rng):
    k = kernel_from_taps(np.ones((1, 1)), (16, 16))
    z, f = rng.random((16, 16)), rng.random((16, 16))
    np.testing.assert_allclose(prox_data(z, f, k, 0.2, 10.0), (2.0 * f + z) / 3.0, atol=1e-14)
    with pytest.raises(DimensionMismatchError):
        prox_data(z, f[:8], k, 0.1, 1.0)


def test_ssim_matches_loops(rng):
    x, y = rng.random((20, 17)), rng.random((20, 17))
    assert ssim(x, y) == pytest.approx(ssim_loops(x, y), abs=1e-12)
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)


def test_ssim_anticorrelated_checkerboard():
    f = (np.indices((16, 16)).sum(axis=0) % 2).astype(float)
    assert ssim(f, 1 - f) < 0


def test_ssim_prefers_less_blur():
    f = make_texture((64, 64), 3)
    s1 = ssim(gaussian_blur_kernel(1.0, f.shape).apply(f), f)
    s3 = ssim(gaussian_blur_kernel(3.0, f.shape).apply(f), f)
    assert s1 > s3
    with pytest.raises(DimensionMismatchError):
        ssim(f, f[:32])


def test_config_validation():
    with pytest.raises(InvalidInputError):
        DeconvConfig(lam=0)
    with pytest.raises(InvalidInputError):
        DeconvConfig(theta=0.5)
    with pytest.raises(InvalidInputError):
        DeconvConfig(mode="other")
    with pytest.raises(InvalidInputError):
        DeconvConfig(refresh_period=0)
    DeconvConfig(refresh_period=math.inf)


def test_delta_kernel_returns_input():
    f = make_texture((64, 64), 0)
    k = kernel_from_taps(np.ones((1, 1)), f.shape)
    res = deconv_fixed(f, k)
    assert np.linalg.norm(res.u - f) / np.linalg.norm(f) < 1e-2


def test_fixed_improves_and_lowers_objective():
    u0 = make_texture((64, 64), 2)
    k = gaussian_blur_kernel(2.0, u0.shape)
    f = k.apply(u0)
    res = deconv_fixed(f, k, DeconvConfig(max_iter=60))
    assert ssim(res.u, u0) > ssim(f, u0)
    lam = DeconvConfig().lam
    assert objective_value(res.u, f, k, res.bank, lam) <= objective_value(f, f, k, res.bank, lam)


def test_identity_bank_residual_decreases():
    u0 = make_texture((32, 32), 5)
    k = gaussian_blur_kernel(1.0, u0.shape)
    f = k.apply(u0)
    bank = FilterBank.from_filters(np.ones((1, 32, 32)), 0.1)
    res = deconv_fixed(f, k, bank=bank)
    assert np.all(np.isfinite(res.u))
    assert np.linalg.norm(k.apply(res.u) - f) <= np.linalg.norm(k.apply(f) - f)


def test_adaptive_infinite_refresh_equals_fixed():
    u0 = make_texture((64, 64), 4)
    k = gaussian_blur_kernel(2.0, u0.shape)
    f = k.apply(u0)
    fixed = deconv_fixed(f, k)
    adaptive = deconv_adaptive(f, k, DeconvConfig(mode="adaptive", refresh_period=math.inf))
    assert np.array_equal(fixed.u, adaptive.u)
    assert adaptive.bank_updates == 0


def test_adaptive_refreshes_bank():
    u0 = make_texture((64, 64), 1)
    k = gaussian_blur_kernel(2.0, u0.shape)
    f = k.apply(u0)
    res = deconvolve(f, k, DeconvConfig(mode="adaptive", max_iter=5, tol=1e-12))
    assert res.iterations == 5 and res.bank_updates == 5


def test_divergence_is_reported():
    f = make_texture((32, 32), 0)
    k = gaussian_blur_kernel(1.0, f.shape)
    f = f.copy()
    with pytest.raises(DivergenceError) as info, np.errstate(all="ignore"):
        deconv_fixed(f, k, DeconvConfig(lam=1e308, nu=1e10))
    assert info.value.iteration == 1


def test_objective_examples(rng):
    f = rng.random((16, 16))
    k = kernel_from_taps(np.ones((1, 1)), f.shape)
    bank = FilterBank.from_filters(np.ones((1, 16, 16)), 0.1)
    assert objective_value(f, f, k, bank, 10.0) == pytest.approx(np.abs(f).sum())
    z = np.zeros((16, 16))
    assert objective_value(z, z, k, bank, 10.0) == 0.0
