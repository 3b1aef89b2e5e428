import numpy as np
import pytest

from muskatlab.cutoff import RegParams
from muskatlab.grid import GridSpec, InterfaceField, shift
from muskatlab.singular import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    annulus_contribution,
    discrete_mode_symbol,
    e_alpha,
    finite_difference_slope,
    linear_constant,
    linear_decay_rate,
    rhs_exact,
    rhs_general,
    rhs_regularized,
    truncated_mode_symbol,
)


@pytest.fixture
def g1():
    return GridSpec(d=1, N=128, L=2.0 * np.pi)


@pytest.fixture
def g2():
    return GridSpec(d=2, N=16, L=2.0 * np.pi)


def _random_field(grid, seed=0, scale=0.3):
    rng = np.random.default_rng(seed)
    x = grid.axis()
    if grid.d == 1:
        v = scale * (np.cos(x) + 0.5 * np.sin(2 * x) + 0.2 * np.cos(5 * x + 1.0))
    else:
        xs, ys = grid.meshgrid()
        v = scale * (np.cos(xs) * np.cos(ys) + 0.4 * np.sin(2 * xs + ys))
    return InterfaceField(grid, v)


# -- node table -------------------------------------------------------------


def test_node_table_1d(g1):
    offsets, radii, weights = DEFAULT_QUADRATURE.nodes(g1)
    assert offsets.shape == (g1.N // 2, 1)
    np.testing.assert_array_equal(offsets[:, 0], np.arange(1, g1.N // 2 + 1))
    np.testing.assert_allclose(radii, g1.h * np.arange(1, g1.N // 2 + 1))
    # plain h weights, boundary pair halved once
    np.testing.assert_array_equal(weights[:-1], np.full(g1.N // 2 - 1, g1.h))
    assert weights[-1] == g1.h / 2.0


def test_node_table_2d(g2):
    offsets, radii, weights = DEFAULT_QUADRATURE.nodes(g2)
    half = g2.N // 2
    # one representative per fused pair tiling the truncation square
    assert offsets.shape == (g2.N * (g2.N + 2) // 2, 2)
    # representative convention: first nonzero component positive
    first = offsets[:, 0]
    assert np.all((first > 0) | ((first == 0) & (offsets[:, 1] > 0)))
    assert np.all(np.diff(radii) >= -1e-15)  # sorted by |alpha|
    # weights: cell area halved per saturated axis
    nsat = np.sum(np.abs(offsets) == half, axis=1)
    np.testing.assert_allclose(weights, g2.cell_volume * 0.5**nsat)
    corner = (np.abs(offsets[:, 0]) == half) & (np.abs(offsets[:, 1]) == half)
    assert np.all(weights[corner] == g2.cell_volume / 4.0)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(tail_mode="quadratic")


# -- pointwise operators ----------------------------------------------------


def test_slope_closed_form(g1):
    f = InterfaceField.from_function(g1, np.cos)
    x = g1.axis()
    for j in (1, 5, -3):
        s = finite_difference_slope(f, (j,))
        r = abs(j) * g1.h
        np.testing.assert_allclose(
            s.values, (np.cos(x) - np.cos(x - j * g1.h)) / r, atol=1e-14
        )


def test_slope_affine_component(g1):
    f = InterfaceField(g1, np.zeros(g1.shape), affine_slope=(0.75,))
    s = finite_difference_slope(f, (4,))
    np.testing.assert_array_equal(s.values, np.full(g1.shape, 0.75))
    s = finite_difference_slope(f, (-4,))
    np.testing.assert_array_equal(s.values, np.full(g1.shape, -0.75))


def test_e_alpha_vanishes_on_affine(g1):
    f = InterfaceField(g1, np.zeros(g1.shape), affine_slope=(1.5,))
    e = e_alpha(f, (7,))
    assert np.all(e.values == 0.0)


def test_e_alpha_taylor_decay(g1):
    # E_alpha f = (|alpha|/2) f'' + O(|alpha|^2): first differences in
    # |alpha| must shrink proportionally (here f'' sup = 1).
    f = InterfaceField.from_function(g1, np.cos)
    sups = []
    for j in (1, 2, 4):
        sups.append(float(np.max(np.abs(e_alpha(f, (j,)).values))))
    assert sups[0] <= 0.6 * g1.h
    assert sups[1] / sups[0] == pytest.approx(2.0, rel=0.05)
    assert sups[2] / sups[1] == pytest.approx(2.0, rel=0.1)


def test_e_alpha_rejects_zero_offset(g1):
    f = InterfaceField.from_function(g1, np.cos)
    with pytest.raises(ValueError):
        e_alpha(f, (0,))


# -- exact symmetries of the velocity ---------------------------------------


def test_rhs_zero_data(g1, g2):
    for g in (g1, g2):
        f = InterfaceField(g, np.zeros(g.shape))
        assert np.all(rhs_exact(f).values == 0.0)


def test_rhs_affine_data_exact_zero(g1, g2):
    for g in (g1, g2):
        tilt = (0.7,) if g.d == 1 else (0.7, -0.3)
        f = InterfaceField(g, np.zeros(g.shape), affine_slope=tilt)
        assert np.all(rhs_exact(f).values == 0.0)
        assert np.all(
            rhs_regularized(f, RegParams(mu1=0.1, mu2=0.05)).values == 0.0
        )


def test_rhs_translation_commutes_bitwise(g1):
    f = _random_field(g1)
    params = RegParams(mu1=0.1, mu2=0.05)
    for off in ((1,), (17,), (-40,)):
        a = rhs_regularized(shift(f, off), params).values
        b = shift(rhs_regularized(f, params), off).values
        assert np.array_equal(a, b)


def test_rhs_translation_commutes_bitwise_2d(g2):
    f = _random_field(g2)
    a = rhs_exact(shift(f, (3, -5))).values
    b = shift(rhs_exact(f), (3, -5)).values
    assert np.array_equal(a, b)


def test_rhs_negation_bitwise(g1):
    f = _random_field(g1)
    a = rhs_exact(f.with_values(-f.values)).values
    b = -rhs_exact(f).values
    assert np.array_equal(a, b)


def test_rhs_reflection(g1):
    # r(x) = f(-x) reflects the velocity: indices reverse around 0.
    f = _random_field(g1)
    refl = InterfaceField(g1, np.roll(f.values[::-1], 1))
    a = rhs_exact(refl).values
    b = np.roll(rhs_exact(f).values[::-1], 1)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_rhs_vertical_translation(g1):
    # the equation sees only differences of f; adding a constant moves
    # nothing but roundoff
    f = _random_field(g1)
    lifted = f.with_values(f.values + 5.0)
    np.testing.assert_allclose(
        rhs_exact(lifted).values, rhs_exact(f).values, atol=1e-10
    )


def test_rhs_general_copy_matches_same_field(g1):
    f = _random_field(g1)
    twin = InterfaceField(g1, f.values.copy())
    a = rhs_general(f, f).values
    b = rhs_general(f, twin).values
    assert np.array_equal(a, b)


def test_rhs_regularized_mu2_zero_is_exact(g1):
    f = _random_field(g1)
    a = rhs_regularized(f, RegParams(mu1=0.5, mu2=0.0)).values
    b = rhs_exact(f).values
    assert np.array_equal(a, b)


def test_rhs_grid_mismatch(g1):
    f = _random_field(g1)
    other = InterfaceField(GridSpec(d=1, N=64, L=2.0 * np.pi), np.zeros(64))
    with pytest.raises(ValueError, match="grid"):
        rhs_general(f, other)


def test_rhs_nonfinite_diagnostic(g1):
    # values are finite but the spectral gradient overflows; the failure
    # surfaces as a named quadrature error
    vals = 1e308 * (-1.0) ** np.arange(g1.N)
    f = InterfaceField(g1, vals)
    with np.errstate(all="ignore"), pytest.raises(
        FloatingPointError, match="offset"
    ):
        rhs_exact(f)


# -- single-mode oracle ------------------------------------------------------


def test_single_mode_against_symbol_oracle(g1):
    # the scalar symbol replays the node sum independently of the field path
    eps = 1e-5
    for k in (1, 3, 8):
        f = InterfaceField.from_function(g1, lambda x: eps * np.cos(k * x))
        sym = discrete_mode_symbol(g1, float(k))
        expect = -sym * f.values
        got = rhs_exact(f).values
        np.testing.assert_allclose(got, expect, atol=eps * sym * 1e-9)


def test_single_mode_regularized_symbol(g1):
    eps = 1e-5
    params = RegParams(mu1=0.3, mu2=0.3)
    f = InterfaceField.from_function(g1, lambda x: eps * np.cos(2.0 * x))
    sym = discrete_mode_symbol(g1, 2.0, params=params)
    got = rhs_regularized(f, params).values
    np.testing.assert_allclose(got, -sym * f.values, atol=eps * sym * 1e-9)
    # the cutoff removes positive kernel mass
    assert sym < discrete_mode_symbol(g1, 2.0)


def test_discrete_symbol_converges_to_truncated_continuum():
    L = 2.0 * np.pi
    target = truncated_mode_symbol(3.0, L)
    vals = [
        discrete_mode_symbol(GridSpec(d=1, N=n, L=L), 3.0) for n in (128, 256, 512)
    ]
    errs = [abs(v - target) for v in vals]
    assert errs[-1] < 1e-4 * target
    # second-order convergence in h
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.3)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.3)


def test_linear_constant_matches_normalization():
    assert linear_constant(1) == pytest.approx(np.pi, rel=1e-3)
    assert linear_constant(2) == pytest.approx(2.0 * np.pi, rel=1e-3)
    with pytest.raises(ValueError):
        linear_constant(3)


def test_linear_decay_rate_formula():
    c1 = linear_constant(1)
    assert linear_decay_rate(1, 2.0, 0.25) == c1 * 2.0 + 0.25 * 4.0
    assert linear_decay_rate(1, -2.0) == c1 * 2.0


# -- convergence order -------------------------------------------------------


def _richardson_ratio_1d(quad, params=None):
    L = 2.0 * np.pi

    def fn(x):
        return 0.4 * np.cos(x) + 0.12 * np.sin(2.0 * x)

    outs = {}
    for n in (128, 256, 512):
        g = GridSpec(d=1, N=n, L=L)
        f = InterfaceField.from_function(g, fn)
        if params is None:
            outs[n] = rhs_general(f, f, quad).values
        else:
            outs[n] = rhs_general(f, f, quad, params).values
    e_coarse = np.max(np.abs(outs[128] - outs[256][::2]))
    e_fine = np.max(np.abs(outs[256] - outs[512][::2]))
    return e_coarse / e_fine


def test_richardson_order_two_1d():
    ratio = _richardson_ratio_1d(DEFAULT_QUADRATURE)
    assert 3.5 <= ratio <= 4.5


def test_richardson_order_two_1d_regularized():
    ratio = _richardson_ratio_1d(
        DEFAULT_QUADRATURE, RegParams(mu1=0.1, mu2=np.pi / 4.0)
    )
    assert 3.5 <= ratio <= 4.5


def test_richardson_drops_to_first_order_without_correction():
    ratio = _richardson_ratio_1d(QuadratureSpec(singular_correction=False))
    assert 1.7 <= ratio <= 2.3


def test_richardson_2d():
    L = 2.0 * np.pi

    def fn(x, y):
        return 0.3 * np.cos(x) * np.cos(y) + 0.1 * np.sin(2.0 * x)

    outs = {}
    for n in (16, 32, 64):
        g = GridSpec(d=2, N=n, L=L)
        f = InterfaceField.from_function(g, fn)
        outs[n] = rhs_exact(f).values
    e_coarse = np.max(np.abs(outs[16] - outs[32][::2, ::2]))
    e_fine = np.max(np.abs(outs[32] - outs[64][::2, ::2]))
    # the model subtraction restores at least second order; superconvergence
    # above ratio 4 is fine
    assert e_coarse / e_fine >= 3.5


# -- shell decomposition -----------------------------------------------------


def test_annulus_additivity(g1):
    f = _random_field(g1)
    lo = annulus_contribution(f, 0.0, 1.0)
    hi = annulus_contribution(f, np.nextafter(1.0, 2.0), g1.L)
    full = annulus_contribution(f, 0.0, g1.L)
    np.testing.assert_allclose(lo.values + hi.values, full.values, atol=1e-13)


def test_annulus_far_field_decay():
    g = GridSpec(d=1, N=512, L=64.0)
    rng = np.random.default_rng(5)
    x = g.axis()
    f = InterfaceField(g, np.exp(-((x - 32.0) ** 2)))  # localized bump
    s1 = float(np.max(np.abs(annulus_contribution(f, 4.0, 8.0).values)))
    s2 = float(np.max(np.abs(annulus_contribution(f, 8.0, 16.0).values)))
    # paired far field integrates to ~ C / r per dyadic shell
    assert s1 / s2 == pytest.approx(2.0, rel=0.5)


def test_annulus_full_range_matches_pair_sum(g1):
    # without singularity/tail terms the full annulus equals the plain
    # node sum (same order, same compensation)
    f = _random_field(g1)
    plain = rhs_general(f, f, QuadratureSpec(singular_correction=False))
    ann = annulus_contribution(f, 0.0, g1.L)
    assert np.array_equal(plain.values, ann.values)
