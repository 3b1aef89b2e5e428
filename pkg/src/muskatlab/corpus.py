"""Reproducible initial-data families for tests and experiment batteries.

All generators are pure functions of (grid, seed, knobs) through
``numpy.random.default_rng``, so a battery rerun sees identical fields.
"""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, InterfaceField, fourier_multiplier
from .norms import grad_sup_norm

__all__ = [
    "random_smooth",
    "smooth_corpus",
    "random_c1",
    "kink",
    "monotone_profiles",
    "small_slope_profiles",
    "bump",
]


def _random_trig(
    grid: GridSpec, rng: np.random.Generator, kmax: int, decay: float
) -> np.ndarray:
    """Random real trig polynomial with |m|^-decay coefficient falloff."""
    vals = np.zeros(grid.shape)
    xs = grid.meshgrid()
    if grid.d == 1:
        for k in range(1, kmax + 1):
            amp = rng.normal() / k**decay
            ph = rng.uniform(0.0, 2.0 * np.pi)
            vals += amp * np.cos(2.0 * np.pi * k * xs[0] / grid.L + ph)
    else:
        for kx in range(0, kmax + 1):
            for ky in range(-kmax, kmax + 1):
                if kx == 0 and ky <= 0:
                    continue
                r = np.hypot(kx, ky)
                if r > kmax:
                    continue
                amp = rng.normal() / r**decay
                ph = rng.uniform(0.0, 2.0 * np.pi)
                vals += amp * np.cos(
                    2.0 * np.pi * (kx * xs[0] + ky * xs[1]) / grid.L + ph
                )
    return vals


def random_smooth(
    grid: GridSpec,
    seed: int,
    amplitude: float = 1.0,
    kmax: int = 12,
) -> InterfaceField:
    """Band-limited random field normalized to the requested sup amplitude."""
    rng = np.random.default_rng(seed)
    vals = _random_trig(grid, rng, kmax, decay=2.0)
    peak = np.max(np.abs(vals))
    if peak > 0.0:
        vals *= amplitude / peak
    return InterfaceField(grid, vals)


def smooth_corpus(
    grid: GridSpec, seed: int, count: int, amplitude: float = 1.0
) -> list[InterfaceField]:
    """A family of independent random smooth fields (one derived seed each)."""
    return [
        random_smooth(grid, seed * 1009 + i, amplitude) for i in range(count)
    ]


def random_c1(grid: GridSpec, seed: int, amplitude: float = 1.0) -> InterfaceField:
    """Once-differentiable-type data: slow m^-2.2 spectral falloff.

    The slope content decays like m^-1.2 per mode, so the Lipschitz norm
    converges while curvature-level quantities stay rough; the dyadic
    projection sweep has to walk far out to shed slope.
    """
    rng = np.random.default_rng(seed)
    kmax = grid.N // 3
    vals = _random_trig(grid, rng, kmax, decay=2.2)
    peak = np.max(np.abs(vals))
    if peak > 0.0:
        vals *= amplitude / peak
    return InterfaceField(grid, vals)


def kink(
    grid: GridSpec, amplitude: float = 1.0, width_cells: float = 2.0
) -> InterfaceField:
    """Mean-zero triangle wave, mollified over a couple of cells.

    The corner singularities (Lipschitz but not C^1) are smeared by a
    spectral Gaussian of standard deviation ``width_cells * h``, keeping
    the data resolvable at finite N while staying close to a genuine kink.
    d = 1 only.
    """
    if grid.d != 1:
        raise ValueError("kink data is one-dimensional")
    x = grid.axis()
    tri = amplitude * (1.0 - 4.0 * np.abs(x / grid.L - 0.5))
    sigma = width_cells * grid.h

    def gauss(k: np.ndarray) -> np.ndarray:
        return np.exp(-0.5 * (sigma * k) ** 2)

    return fourier_multiplier(InterfaceField(grid, tri), gauss)


def monotone_profiles(
    grid: GridSpec, seed: int, count: int = 5
) -> list[InterfaceField]:
    """Strictly increasing tilted profiles: slope 1 tilt plus |p'| <= 0.9.

    d = 1 only; the full slope stays in [0.1, 1.9], hence positive.
    """
    if grid.d != 1:
        raise ValueError("monotone profiles are one-dimensional")
    out = []
    for i in range(count):
        p = random_smooth(grid, seed * 2027 + i)
        cap = grad_sup_norm(p)
        scale = 0.9 / cap if cap > 0.9 else 1.0
        out.append(
            InterfaceField(grid, scale * p.values, affine_slope=(1.0,))
        )
    return out


def small_slope_profiles(
    grid: GridSpec, seed: int, count: int = 5, slope: float = 0.1
) -> list[InterfaceField]:
    """Periodic profiles rescaled to sup |f'| = 0.99 * slope."""
    out = []
    for i in range(count):
        p = random_smooth(grid, seed * 3011 + i)
        cap = grad_sup_norm(p)
        out.append(InterfaceField(grid, (0.99 * slope / cap) * p.values))
    return out


def bump(grid: GridSpec, center: float = 0.5, width: float = 0.1) -> InterfaceField:
    """Periodized Gaussian bump with unit peak.

    ``center`` and ``width`` are fractions of the period; used as the
    stability perturbation profile.
    """
    if not 0.0 < width < 0.5:
        raise ValueError(f"width fraction must be in (0, 0.5), got {width}")
    xs = grid.meshgrid()
    r2 = np.zeros(grid.shape)
    for x in xs:
        dx = np.abs(x / grid.L - center)
        dx = np.minimum(dx, 1.0 - dx)
        r2 = r2 + dx**2
    return InterfaceField(grid, np.exp(-r2 / (2.0 * width**2)))
