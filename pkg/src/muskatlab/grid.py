"""Periodic interface fields and spectral calculus.

The computational domain is the torus [0, L)^d with d in {1, 2} and N
uniformly spaced samples per axis.  An interface height function is stored
as an :class:`InterfaceField`: a real sample array plus an optional affine
part ``a . x`` that is carried analytically (the torus cannot represent a
non-periodic tilt, but differences and gradients of the tilt are exact
closed forms).

Derivatives are spectral.  First-derivative multipliers zero the Nyquist
mode so real fields stay real; even-symbol multipliers (Laplacian) keep it.
Fields cache their FFT, gradient, and second derivatives lazily, and
:func:`shift` transports those caches by index rolls.  Rolling a cached
derivative is exact on the lattice, which is what makes shift-then-evaluate
versus evaluate-then-shift bit-identical downstream in the quadrature code.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "GridSpec",
    "InterfaceField",
    "gradient",
    "shift",
    "fourier_multiplier",
    "laplacian",
]


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [0, L)^d.

    Attributes:
        d: interface dimension, 1 or 2.
        N: samples per axis, a power of two >= 8.
        L: period, > 0.
    """

    d: int
    N: int
    L: float

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise ValueError(f"d must be 1 or 2, got {self.d}")
        if not isinstance(self.N, int) or not _is_pow2(self.N) or self.N < 8:
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"L must be positive and finite, got {self.L}")

    @property
    def h(self) -> float:
        """Grid spacing L / N."""
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def npoints(self) -> int:
        return self.N**self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    def axis(self) -> np.ndarray:
        """Sample coordinates of one axis: i * h, i = 0..N-1."""
        return np.arange(self.N) * self.h

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcastable to ``shape`` (sparse for d=2)."""
        x = self.axis()
        if self.d == 1:
            return (x,)
        return (x[:, None], x[None, :])

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Signed angular wavenumbers per axis, broadcastable to ``shape``.

        Uses the FFT ordering (0, 1, ..., N/2-1, -N/2, ..., -1) * 2 pi / L.
        """
        return _wavenumbers(self.d, self.N, self.L)

    def mode_indices(self) -> tuple[np.ndarray, ...]:
        """Integer mode indices per axis, same layout as ``wavenumbers``."""
        return _mode_indices(self.d, self.N)


@lru_cache(maxsize=64)
def _mode_indices(d: int, N: int) -> tuple[np.ndarray, ...]:
    m = np.fft.fftfreq(N, d=1.0 / N)  # 0, 1, ..., -1 as floats
    m = m.astype(np.int64)
    m.setflags(write=False)
    if d == 1:
        return (m,)
    m0 = m[:, None]
    m1 = m[None, :]
    return (m0, m1)


@lru_cache(maxsize=64)
def _wavenumbers(d: int, N: int, L: float) -> tuple[np.ndarray, ...]:
    out = []
    for m in _mode_indices(d, N):
        k = (2.0 * np.pi / L) * m
        k.setflags(write=False)
        out.append(k)
    return tuple(out)


@lru_cache(maxsize=64)
def _deriv_wavenumbers(d: int, N: int, L: float) -> tuple[np.ndarray, ...]:
    """Wavenumbers with the Nyquist entry zeroed (odd-order derivatives)."""
    out = []
    for ax, k in enumerate(_wavenumbers(d, N, L)):
        kd = k.copy()
        idx = [slice(None)] * d
        idx[ax] = N // 2
        kd[tuple(idx)] = 0.0
        kd.setflags(write=False)
        out.append(kd)
    return tuple(out)


class InterfaceField:
    """Real height samples on a :class:`GridSpec`, plus an optional tilt.

    ``values`` holds the periodic part p; the represented function is
    f(x) = p(x) + a . x when ``affine_slope`` a is set.  Values are frozen
    (read-only) so cached spectral data cannot go stale.
    """

    __slots__ = ("grid", "values", "affine_slope", "_spectral", "_grad", "_second")

    def __init__(
        self,
        grid: GridSpec,
        values: np.ndarray,
        affine_slope: Sequence[float] | None = None,
    ) -> None:
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if arr.shape != grid.shape:
            raise ValueError(f"values shape {arr.shape} != grid shape {grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr
        if affine_slope is not None:
            slope = tuple(float(a) for a in affine_slope)
            if len(slope) != grid.d:
                raise ValueError(f"affine_slope needs {grid.d} components")
            if not all(np.isfinite(a) for a in slope):
                raise ValueError("affine_slope must be finite")
            if all(a == 0.0 for a in slope):
                slope = None  # type: ignore[assignment]
            self.affine_slope = slope
        else:
            self.affine_slope = None
        self._spectral = None
        self._grad = None
        self._second = None

    # -- constructors -------------------------------------------------

    @classmethod
    def from_function(
        cls,
        grid: GridSpec,
        fn: Callable[..., np.ndarray],
        affine_slope: Sequence[float] | None = None,
    ) -> "InterfaceField":
        vals = np.asarray(fn(*grid.meshgrid()), dtype=np.float64)
        return cls(grid, np.broadcast_to(vals, grid.shape).copy(), affine_slope)

    def with_values(self, values: np.ndarray, keep_affine: bool = True) -> "InterfaceField":
        return InterfaceField(
            self.grid, values, self.affine_slope if keep_affine else None
        )

    # -- cached spectral data ------------------------------------------

    @property
    def spectral(self) -> np.ndarray:
        """FFT of the periodic part; ifft(spectral) recovers values to 1e-12."""
        if self._spectral is None:
            sp = np.fft.fftn(self.values)
            sp.setflags(write=False)
            self._spectral = sp
        return self._spectral

    def grad_arrays(self) -> tuple[np.ndarray, ...]:
        """Spectral gradient of the periodic part (no affine term)."""
        if self._grad is None:
            kd = _deriv_wavenumbers(self.grid.d, self.grid.N, self.grid.L)
            sp = self.spectral
            out = []
            for k in kd:
                g = np.fft.ifftn(1j * k * sp).real
                g.setflags(write=False)
                out.append(g)
            self._grad = tuple(out)
        return self._grad

    def second_arrays(self) -> tuple[np.ndarray, ...]:
        """Second derivatives of the periodic part.

        d=1: (f_xx,).  d=2: (f_xx, f_xy, f_yy); the mixed term uses
        Nyquist-zeroed factors on both axes.
        """
        if self._second is None:
            g = self.grid
            k = _wavenumbers(g.d, g.N, g.L)
            kd = _deriv_wavenumbers(g.d, g.N, g.L)
            sp = self.spectral
            if g.d == 1:
                fxx = np.fft.ifftn(-(k[0] ** 2) * sp).real
                fxx.setflags(write=False)
                self._second = (fxx,)
            else:
                fxx = np.fft.ifftn(-(k[0] ** 2) * sp).real
                fyy = np.fft.ifftn(-(k[1] ** 2) * sp).real
                fxy = np.fft.ifftn(-(kd[0] * kd[1]) * sp).real
                for a in (fxx, fxy, fyy):
                    a.setflags(write=False)
                self._second = (fxx, fxy, fyy)
        return self._second

    def _materialize(self) -> None:
        self.grad_arrays()
        self.second_arrays()

    def _adopt(self, grad, second) -> None:
        self._grad = grad
        self._second = second

    def _adopt_spectral(self, spectral: np.ndarray) -> None:
        # Lets spectral constructions (projections, multipliers) hand over
        # their exact coefficients instead of re-deriving them by FFT, which
        # would reintroduce roundoff at modes that are exactly zero.
        spectral = np.asarray(spectral, dtype=np.complex128)
        spectral.setflags(write=False)
        self._spectral = spectral

    # -- conveniences ---------------------------------------------------

    @property
    def is_affine_free(self) -> bool:
        return self.affine_slope is None

    def full_slope(self) -> tuple[np.ndarray, ...]:
        """Gradient including the affine tilt."""
        per = self.grad_arrays()
        if self.affine_slope is None:
            return per
        return tuple(p + a for p, a in zip(per, self.affine_slope))

    def __repr__(self) -> str:  # pragma: no cover
        aff = "" if self.affine_slope is None else f", affine={self.affine_slope}"
        return f"InterfaceField(d={self.grid.d}, N={self.grid.N}, L={self.grid.L}{aff})"


# -- free operations ------------------------------------------------------


def gradient(f: InterfaceField) -> tuple[InterfaceField, ...]:
    """Spectral gradient, one field per axis (affine tilt included)."""
    per = f.grad_arrays()
    if f.affine_slope is None:
        comps = per
    else:
        comps = tuple(p + a for p, a in zip(per, f.affine_slope))
    return tuple(InterfaceField(f.grid, c) for c in comps)


def _canonical_offset(offset: Sequence[int], N: int, d: int) -> tuple[int, ...]:
    off = tuple(int(o) for o in np.atleast_1d(np.asarray(offset)))
    if len(off) != d:
        raise ValueError(f"offset needs {d} components, got {len(off)}")
    for o, raw in zip(off, np.atleast_1d(np.asarray(offset))):
        if o != raw:
            raise ValueError("offset components must be integers")
        if abs(o) > N:
            raise ValueError(f"offset component {o} out of range [-{N}, {N}]")
    return off


def shift(f: InterfaceField, offset: Sequence[int] | int) -> InterfaceField:
    """Exact periodic index shift: result(x) = f(x - offset * h).

    Components may range over [-N, N]; shift by 0 or by +-N is the
    identity on the periodic part.  Derivative caches are materialized
    and rolled along, so downstream evaluations commute with the shift
    bit-for-bit.  An affine tilt contributes the exact constant
    -a . (offset * h) to the periodic values.
    """
    g = f.grid
    off = _canonical_offset(offset, g.N, g.d)
    axes = tuple(range(g.d))
    f._materialize()
    vals = np.roll(f.values, off, axis=axes)
    if f.affine_slope is not None:
        c = sum(a * (o * g.h) for a, o in zip(f.affine_slope, off))
        vals = vals - c
    out = InterfaceField(g, vals, f.affine_slope)
    out._adopt(
        tuple(np.roll(a, off, axis=axes) for a in f.grad_arrays()),
        tuple(np.roll(a, off, axis=axes) for a in f.second_arrays()),
    )
    return out


def fourier_multiplier(
    f: InterfaceField, symbol: Callable[..., np.ndarray]
) -> InterfaceField:
    """Apply a Fourier multiplier m(xi): ifft(m(xi) * fft(f)).

    ``symbol`` receives one signed-wavenumber array per axis (FFT layout,
    broadcastable) and must return the multiplier values.  Realness of the
    output is guaranteed only for real even symbols.  Affine fields are
    rejected: a tilt has no Fourier representation on the torus.
    """
    if f.affine_slope is not None:
        raise ValueError("fourier_multiplier is undefined for affine fields")
    k = f.grid.wavenumbers()
    sym = np.asarray(symbol(*k), dtype=np.complex128)
    if not np.all(np.isfinite(sym)):
        raise ValueError("symbol produced non-finite values")
    symb = np.broadcast_to(sym, f.grid.shape)
    sp = symb * f.spectral
    out = InterfaceField(f.grid, np.fft.ifftn(sp).real)
    # The product spectrum can be handed to the result only when taking the
    # real part loses nothing; that is guaranteed when the symbol itself is
    # Hermitian-symmetric (m(-xi) = conj(m(xi)), exact for even real or
    # odd imaginary expressions of the wavenumbers).
    rev = symb
    for ax in range(f.grid.d):
        rev = np.roll(np.flip(rev, axis=ax), 1, axis=ax)
    if np.array_equal(np.conj(rev), symb):
        out._adopt_spectral(sp)
    return out


def laplacian(f: InterfaceField) -> InterfaceField:
    """Spectral Laplacian of the periodic part (tilt has none)."""
    k = f.grid.wavenumbers()
    sym = -sum(ki**2 for ki in k)
    out = np.fft.ifftn(sym * f.spectral).real
    return InterfaceField(f.grid, out)
