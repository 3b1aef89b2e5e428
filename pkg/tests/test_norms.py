import math

import numpy as np
import pytest

from muskatlab.cutoff import RegParams
from muskatlab.grid import GridSpec, InterfaceField, shift
from muskatlab.norms import (
    NormReport,
    bj_diagnostic,
    gradient_holder,
    grad_sup_norm,
    holder_seminorm,
    l2_norm,
    lemma_cm_bound,
    lemma_cm_check,
    linf_norm,
    lip_extrema,
    lip_norms,
    log_interpolation_check,
    norm_report,
    parseval_l2_norm,
    sobolev_seminorm,
    triebel_seminorm,
)

SQRT_PI = math.sqrt(math.pi)


@pytest.fixture
def g1():
    return GridSpec(d=1, N=128, L=2.0 * np.pi)


def _mode(g, k, amp=1.0):
    return InterfaceField.from_function(g, lambda x: amp * np.cos(k * x))


def _random_field(g, seed=3, scale=0.4):
    rng = np.random.default_rng(seed)
    x = g.axis()
    v = scale * (np.cos(x) + 0.6 * np.sin(2 * x) + 0.25 * np.cos(5 * x + 0.7))
    return InterfaceField(g, v)


# -- L2 and Sobolev ----------------------------------------------------------


def test_l2_constant(g1):
    f = InterfaceField(g1, np.full(g1.shape, 2.5))
    assert l2_norm(f) == pytest.approx(2.5 * math.sqrt(g1.L), rel=1e-14)


def test_parseval_agrees(g1):
    f = _random_field(g1)
    assert parseval_l2_norm(f) == pytest.approx(l2_norm(f), rel=1e-13)


def test_sobolev_single_mode_closed_form(g1):
    # |e^{ikx}| modes give k^s sqrt(pi) per unit cosine amplitude on [0, 2pi)
    for s in (0.0, 0.5, 1.0, 1.5):
        for k, amp in ((3, 1.0), (7, 0.4)):
            f = _mode(g1, k, amp)
            expect = amp * k**s * SQRT_PI
            assert sobolev_seminorm(f, s) == pytest.approx(expect, rel=1e-12)


def test_sobolev_zero_order_is_l2(g1):
    f = _random_field(g1)
    assert sobolev_seminorm(f, 0.0) == pytest.approx(l2_norm(f), rel=1e-13)


def test_sobolev_positive_order_drops_mean(g1):
    f = _mode(g1, 3)
    lifted = f.with_values(f.values + 4.0)
    assert sobolev_seminorm(lifted, 0.5) == pytest.approx(
        sobolev_seminorm(f, 0.5), rel=1e-12
    )


def test_sobolev_validation(g1):
    f = _mode(g1, 3)
    with pytest.raises(ValueError):
        sobolev_seminorm(f, -0.5)
    tilted = InterfaceField(g1, f.values, affine_slope=(0.1,))
    with pytest.raises(ValueError):
        sobolev_seminorm(tilted, 0.5)


# -- sup norms and slope extrema ----------------------------------------------


def test_lip_single_mode(g1):
    # d/dx cos(3x) = -3 sin(3x); the grid hits sin = +/-1 at i = 32 and 96
    f = _mode(g1, 3)
    per, agg = lip_norms(f)
    assert agg == pytest.approx(3.0, rel=1e-12)
    assert per == (agg,)
    tilted = InterfaceField(g1, f.values, affine_slope=(0.5,))
    assert grad_sup_norm(tilted) == pytest.approx(3.5, rel=1e-12)


def test_lip_extrema_locations(g1):
    f = _mode(g1, 3)
    ext = lip_extrema(f)
    assert ext.argmax == ((32,),)
    assert ext.argmin == ((96,),)
    assert ext.maxima[0] == pytest.approx(3.0, rel=1e-12)
    assert ext.minima[0] == pytest.approx(-3.0, rel=1e-12)
    assert ext.total_variation_bound == pytest.approx(6.0, rel=1e-12)
    assert ext.total_variation_bound <= 2 * g1.d * grad_sup_norm(f) + 1e-12


def test_linf_ignores_tilt(g1):
    f = InterfaceField(g1, np.zeros(g1.shape), affine_slope=(2.0,))
    assert linf_norm(f) == 0.0


# -- Holder ------------------------------------------------------------------


def test_holder_single_spike(g1):
    # one unit spike: every difference is at most 1 and the nearest
    # neighbour attains it, so the sup sits at |alpha| = h
    v = np.zeros(g1.shape)
    v[0] = 1.0
    f = InterfaceField(g1, v)
    assert holder_seminorm(f, 0.5) == 1.0 / g1.h**0.5
    assert holder_seminorm(f, 0.25) == 1.0 / g1.h**0.25


def test_holder_homogeneity_exact(g1):
    f = _random_field(g1)
    doubled = f.with_values(2.0 * f.values)
    assert holder_seminorm(doubled, 0.5) == 2.0 * holder_seminorm(f, 0.5)


def test_holder_validation(g1):
    f = _random_field(g1)
    for s in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(ValueError):
            holder_seminorm(f, s)


def test_gradient_holder_plain_float(g1):
    v = gradient_holder(_random_field(g1), 0.5)
    assert type(v) is float and v > 0.0


# -- Triebel -----------------------------------------------------------------


def _triebel_mode_oracle(g, k, amp, s_frac):
    # independent replay for F^s_{2,2} of amp*cos(kx), 0 < s < 1:
    # sum_x sin^2(kx - phi) = N/2 exactly whenever 2k is not a multiple
    # of N, which collapses the double sum to a radial one
    js = np.arange(1, g.N // 2 + 1)
    r = js * g.h
    radial = np.sum(np.sin(0.5 * k * r) ** 2 / r ** (1.0 + 2.0 * s_frac))
    return math.sqrt(g.h**2 * 4.0 * amp**2 * (g.N / 2.0) * 2.0 * radial)


def test_triebel_single_mode_oracle(g1):
    f = _mode(g1, 3)
    got = triebel_seminorm(f, 0.5, 2.0, 2.0)
    assert got == pytest.approx(_triebel_mode_oracle(g1, 3, 1.0, 0.5), rel=1e-12)


def test_triebel_derivative_order(g1):
    # F^{3/2}_{2,2} differentiates once and measures F^{1/2}_{2,2} of the
    # result; for cos(3x) that is an exact factor 3
    f = _mode(g1, 3)
    lo = triebel_seminorm(f, 0.5, 2.0, 2.0)
    hi = triebel_seminorm(f, 1.5, 2.0, 2.0)
    assert hi / lo == pytest.approx(3.0, rel=1e-12)
    assert hi == pytest.approx(_triebel_mode_oracle(g1, 3, 3.0, 0.5), rel=1e-12)


def test_triebel_sup_q_bounded_by_holder(g1):
    f = _random_field(g1)
    sup_in_x = triebel_seminorm(f, 0.5, 2.0, math.inf)
    cap = holder_seminorm(f, 0.5) * math.sqrt(g1.L)
    assert sup_in_x <= cap * (1.0 + 1e-12)


def test_triebel_constant_is_zero(g1):
    f = InterfaceField(g1, np.full(g1.shape, 3.0))
    assert triebel_seminorm(f, 0.5, 2.0, 2.0) == 0.0


def test_triebel_validation(g1):
    f = _random_field(g1)
    for bad in ((1.0, 2.0, 2.0), (0.0, 2.0, 2.0), (-0.5, 2.0, 2.0)):
        with pytest.raises(ValueError):
            triebel_seminorm(f, *bad)
    with pytest.raises(ValueError):
        triebel_seminorm(f, 0.5, 0.5, 2.0)  # p < 1
    with pytest.raises(ValueError):
        triebel_seminorm(f, 0.5, 2.0, 0.5)  # q < 1
    g2 = GridSpec(d=2, N=16, L=2.0 * np.pi)
    f2 = InterfaceField(g2, np.zeros(g2.shape))
    with pytest.raises(ValueError):
        triebel_seminorm(f2, 1.5, 2.0, 2.0)  # m >= 1 is 1d only


# -- translation invariance ---------------------------------------------------


def test_norms_translation_bitexact(g1):
    f = _random_field(g1)
    moved = shift(f, (37,))
    assert l2_norm(moved) == l2_norm(f)
    assert linf_norm(moved) == linf_norm(f)
    assert holder_seminorm(moved, 0.5) == holder_seminorm(f, 0.5)
    assert triebel_seminorm(moved, 0.5, 2.0, 2.0) == triebel_seminorm(
        f, 0.5, 2.0, 2.0
    )
    # the spectral path picks up phase roundoff, nothing more
    assert sobolev_seminorm(moved, 0.5) == pytest.approx(
        sobolev_seminorm(f, 0.5), rel=1e-13
    )


# -- Lipschitz envelope lemma --------------------------------------------------


def test_lemma_bound_matches_grid_maximization():
    # independent check: maximize |h1'| + |h2'| on a dense grid
    z = np.linspace(-60.0, 60.0, 2_000_001)
    t = 1.0 + z * z
    for m in range(1, 6):
        h1p = np.abs(-m * z * t ** (-0.5 * m - 1.0))
        h2p = np.abs(t ** (-0.5 * (m + 3)) * (1.0 - (m + 2) * z * z) / t)
        grid_bound = float(np.max(h1p)) + float(np.max(h2p))
        assert lemma_cm_bound(m) == pytest.approx(grid_bound, rel=1e-6)


def test_lemma_bound_validation():
    with pytest.raises(ValueError):
        lemma_cm_bound(0)


def test_lemma_empirical_stays_below_bound():
    for m in (1, 3, 5):
        rep = lemma_cm_check(m, n_pairs=100_000, seed=7)
        assert rep.empirical <= rep.bound
        # the sweep should actually probe the envelope, not sample noise
        assert rep.empirical >= 0.5 * rep.bound
        assert rep.pairs <= 100_000
        a, b = rep.argmax_pair
        assert a != b


# -- log-interpolation and dissipation ------------------------------------------


def test_log_interpolation_report(g1):
    rep = log_interpolation_check(_random_field(g1))
    assert rep.lhs > 0.0 and rep.rhs > 1.0
    assert rep.ratio == rep.lhs / rep.rhs


def test_log_interpolation_needs_room():
    g = GridSpec(d=1, N=32, L=1.5)
    f = InterfaceField(g, np.zeros(g.shape))
    with pytest.raises(ValueError):
        log_interpolation_check(f)


def test_bj_nonnegative_at_argmax(g1):
    f = _random_field(g1, seed=11)
    params = RegParams(mu1=0.1, mu2=0.05)
    assert bj_diagnostic(f, f, params, 0) >= 0.0


def test_bj_validation(g1):
    f = _random_field(g1)
    other = InterfaceField(GridSpec(d=1, N=64, L=2.0 * np.pi), np.zeros(64))
    with pytest.raises(ValueError):
        bj_diagnostic(f, other, RegParams(0.0, 0.0), 0)
    with pytest.raises(ValueError):
        bj_diagnostic(f, f, RegParams(0.0, 0.0), 1)


# -- reports -------------------------------------------------------------------


def test_norm_report_contents(g1):
    f = _random_field(g1)
    rep = norm_report(
        f,
        t=0.25,
        sobolev_orders=(0.5,),
        holder_orders=(0.5,),
        holder_grad_orders=(0.5,),
        triebel_orders=((0.5, 2.0, 2.0),),
    )
    assert rep.t == 0.25
    assert rep.l2 == l2_norm(f)
    assert rep.lip == grad_sup_norm(f)
    assert rep.sobolev[0.5] == sobolev_seminorm(f, 0.5)
    assert rep.holder_grad[0.5] == gradient_holder(f, 0.5)
    assert rep.triebel[(0.5, 2.0, 2.0)] == triebel_seminorm(f, 0.5, 2.0, 2.0)


def test_norm_report_rejects_bad_entries():
    with pytest.raises(ValueError):
        NormReport(
            t=0.0, l2=-1.0, linf=0.0, lip_components=(0.0,), lip=0.0
        )
    with pytest.raises(ValueError):
        NormReport(
            t=0.0,
            l2=0.0,
            linf=math.nan,
            lip_components=(0.0,),
            lip=0.0,
        )
