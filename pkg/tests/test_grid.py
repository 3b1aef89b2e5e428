import numpy as np
import pytest

from muskatlab.grid import (
    GridSpec,
    InterfaceField,
    fourier_multiplier,
    gradient,
    laplacian,
    shift,
)


@pytest.fixture
def g1():
    return GridSpec(d=1, N=128, L=2.0 * np.pi)


@pytest.fixture
def g2():
    return GridSpec(d=2, N=32, L=2.0 * np.pi)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(d=3, N=16, L=1.0)
    with pytest.raises(ValueError):
        GridSpec(d=1, N=12, L=1.0)  # not a power of two
    with pytest.raises(ValueError):
        GridSpec(d=1, N=4, L=1.0)  # too small
    with pytest.raises(ValueError):
        GridSpec(d=1, N=16, L=0.0)
    with pytest.raises(ValueError):
        GridSpec(d=1, N=16, L=float("nan"))


def test_grid_geometry(g1, g2):
    assert g1.h == g1.L / g1.N
    assert g1.shape == (128,)
    assert g2.shape == (32, 32)
    assert g2.npoints == 1024
    assert g2.cell_volume == pytest.approx(g2.h**2)
    x = g1.axis()
    assert x[0] == 0.0 and x[-1] == pytest.approx(g1.L - g1.h)
    xs = g2.meshgrid()
    assert xs[0].shape == (32, 1) and xs[1].shape == (1, 32)


def test_wavenumber_layout(g1):
    (k,) = g1.wavenumbers()
    (m,) = g1.mode_indices()
    assert m[0] == 0 and m[1] == 1 and m[-1] == -1 and m[g1.N // 2] == -g1.N // 2
    np.testing.assert_allclose(k, 2.0 * np.pi / g1.L * m, rtol=0, atol=0)


def test_field_validation(g1):
    with pytest.raises(ValueError):
        InterfaceField(g1, np.zeros(64))
    bad = np.zeros(g1.shape)
    bad[3] = np.inf
    with pytest.raises(ValueError):
        InterfaceField(g1, bad)
    with pytest.raises(ValueError):
        InterfaceField(g1, np.zeros(g1.shape), affine_slope=(1.0, 2.0))
    # zero tilt normalizes to no tilt
    f = InterfaceField(g1, np.zeros(g1.shape), affine_slope=(0.0,))
    assert f.is_affine_free


def test_values_read_only(g1):
    f = InterfaceField.from_function(g1, np.cos)
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_spectral_roundtrip(g1):
    rng = np.random.default_rng(0)
    f = InterfaceField(g1, rng.standard_normal(g1.shape))
    back = np.fft.ifft(f.spectral).real
    np.testing.assert_allclose(back, f.values, atol=1e-12)


def test_gradient_closed_form(g1):
    f = InterfaceField.from_function(g1, lambda x: np.cos(3.0 * x))
    (gx,) = gradient(f)
    x = g1.axis()
    np.testing.assert_allclose(gx.values, -3.0 * np.sin(3.0 * x), atol=1e-12)


def test_gradient_includes_tilt(g1):
    f = InterfaceField.from_function(g1, np.sin, affine_slope=(0.25,))
    (gx,) = gradient(f)
    x = g1.axis()
    np.testing.assert_allclose(gx.values, np.cos(x) + 0.25, atol=1e-12)
    (full,) = f.full_slope()
    np.testing.assert_allclose(full, np.cos(x) + 0.25, atol=1e-12)


def test_gradient_2d(g2):
    f = InterfaceField.from_function(
        g2, lambda x, y: np.sin(2.0 * x) * np.cos(y)
    )
    gx, gy = gradient(f)
    xs, ys = g2.meshgrid()
    np.testing.assert_allclose(
        gx.values, 2.0 * np.cos(2.0 * xs) * np.cos(ys), atol=1e-12
    )
    np.testing.assert_allclose(
        gy.values, -np.sin(2.0 * xs) * np.sin(ys), atol=1e-12
    )


def test_laplacian_closed_form(g1):
    f = InterfaceField.from_function(g1, lambda x: np.cos(5.0 * x))
    lap = laplacian(f)
    np.testing.assert_allclose(lap.values, -25.0 * f.values, atol=1e-10)


def test_shift_identity_and_period(g1):
    rng = np.random.default_rng(1)
    f = InterfaceField(g1, rng.standard_normal(g1.shape))
    assert np.array_equal(shift(f, (0,)).values, f.values)
    assert np.array_equal(shift(f, (g1.N,)).values, f.values)
    assert np.array_equal(shift(f, (-g1.N,)).values, f.values)


def test_shift_transports_samples(g1):
    f = InterfaceField.from_function(g1, np.sin)
    s = shift(f, (3,))
    # result(x_i) = f(x_{i-3})
    np.testing.assert_array_equal(s.values, np.roll(f.values, 3))


def test_shift_roundtrip_bitexact(g1):
    rng = np.random.default_rng(2)
    f = InterfaceField(g1, rng.standard_normal(g1.shape))
    s = shift(shift(f, (7,)), (-7,))
    assert np.array_equal(s.values, f.values)
    # caches transported, not recomputed: gradients agree bitwise too
    assert np.array_equal(s.grad_arrays()[0], f.grad_arrays()[0])


def test_shift_affine_constant(g1):
    f = InterfaceField.from_function(g1, np.sin, affine_slope=(2.0,))
    s = shift(f, (4,))
    # the tilt contributes the exact constant -a * (offset h)
    expect = np.roll(f.values, 4) - 2.0 * 4.0 * g1.h
    np.testing.assert_array_equal(s.values, expect)
    assert s.affine_slope == (2.0,)


def test_shift_validation(g1):
    f = InterfaceField.from_function(g1, np.sin)
    with pytest.raises(ValueError):
        shift(f, (g1.N + 1,))
    with pytest.raises(ValueError):
        shift(f, (1, 1))


def test_shift_2d(g2):
    rng = np.random.default_rng(3)
    f = InterfaceField(g2, rng.standard_normal(g2.shape))
    s = shift(f, (5, -2))
    np.testing.assert_array_equal(s.values, np.roll(f.values, (5, -2), axis=(0, 1)))


def test_multiplier_halfderivative(g1):
    f = InterfaceField.from_function(g1, lambda x: np.cos(4.0 * x))
    out = fourier_multiplier(f, lambda k: np.abs(k))
    np.testing.assert_allclose(out.values, 4.0 * f.values, atol=1e-10)


def test_multiplier_rejects_affine(g1):
    f = InterfaceField.from_function(g1, np.sin, affine_slope=(1.0,))
    with pytest.raises(ValueError):
        fourier_multiplier(f, lambda k: np.abs(k))


def test_multiplier_rejects_nonfinite_symbol(g1):
    f = InterfaceField.from_function(g1, np.sin)
    with np.errstate(divide="ignore"), pytest.raises(ValueError):
        fourier_multiplier(f, lambda k: 1.0 / k)


def test_multiplier_adopts_hermitian_spectrum(g1):
    # Hermitian symbols (even real here) hand the exact product spectrum to
    # the result, so exactly-zero modes stay exactly zero.
    f = InterfaceField.from_function(g1, lambda x: np.cos(2.0 * x))
    band = fourier_multiplier(f, lambda k: (np.abs(k) <= 3.0).astype(float))
    sp = band.spectral
    (m,) = g1.mode_indices()
    assert np.all(sp[np.abs(m) > 3] == 0.0)


def test_multiplier_onesided_symbol_not_adopted(g1):
    # A one-sided symbol is not Hermitian; the result must re-derive its
    # spectrum from the (real) samples rather than adopt the product.
    f = InterfaceField.from_function(g1, lambda x: np.cos(2.0 * x))
    out = fourier_multiplier(f, lambda k: (k > 0.0).astype(float))
    sp = out.spectral
    # real samples force Hermitian symmetry in the derived spectrum
    assert abs(sp[-2] - np.conj(sp[2])) < 1e-9


def test_with_values_keep_affine(g1):
    f = InterfaceField.from_function(g1, np.sin, affine_slope=(1.5,))
    kept = f.with_values(2.0 * f.values)
    dropped = f.with_values(2.0 * f.values, keep_affine=False)
    assert kept.affine_slope == (1.5,)
    assert dropped.affine_slope is None
