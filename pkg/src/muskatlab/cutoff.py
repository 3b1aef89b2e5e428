"""Near-field cutoff profile and regularization parameters.

The regularized velocity multiplies the integrand by 1 - chi(|alpha| / mu2)
where chi is a fixed radial bump: identically 1 on [0, 1], identically 0 on
[2, inf), joined on (1, 2) by the quintic smoothstep so chi and its first
two derivatives are continuous.  The slope of that join never exceeds 15/8
in magnitude, keeping chi' within [-2, 0].  The antiderivative of chi is
needed in closed form by the origin-cell correction of the quadrature, so
it lives here next to the profile itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["CutoffProfile", "RegParams", "QUINTIC"]


def _smoothstep5(u: np.ndarray) -> np.ndarray:
    # 6u^5 - 15u^4 + 10u^3: S(0)=0, S(1)=1, S'=S''=0 at both ends.
    return u**3 * (10.0 + u * (-15.0 + 6.0 * u))


def _smoothstep5_deriv(u: np.ndarray) -> np.ndarray:
    # 30u^2(1-u)^2, peaks at 15/8 for u = 1/2.
    return 30.0 * u**2 * (1.0 - u) ** 2


def _smoothstep5_antider(u: np.ndarray) -> np.ndarray:
    # integral of S from 0 to u; equals 1/2 at u=1.
    return u**4 * (2.5 + u * (-3.0 + u))


@dataclass(frozen=True)
class CutoffProfile:
    """C^2 radial bump: 1 on [0,1], quintic descent on (1,2), 0 past 2."""

    id: str = "quintic"

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if np.any(r < 0):
            raise ValueError("cutoff profile argument must be >= 0")
        out = np.ones_like(r)
        mid = (r > 1.0) & (r < 2.0)
        out[mid] = 1.0 - _smoothstep5(r[mid] - 1.0)
        out[r >= 2.0] = 0.0
        return out

    evaluate = __call__

    def derivative(self, r) -> np.ndarray:
        """chi'(r); zero outside (1, 2), in [-15/8, 0] inside."""
        r = np.asarray(r, dtype=np.float64)
        if np.any(r < 0):
            raise ValueError("cutoff profile argument must be >= 0")
        out = np.zeros_like(r)
        mid = (r > 1.0) & (r < 2.0)
        out[mid] = -_smoothstep5_deriv(r[mid] - 1.0)
        return out

    def antiderivative(self, r) -> np.ndarray:
        """Integral of the profile from 0 to r; saturates at 3/2."""
        r = np.asarray(r, dtype=np.float64)
        out = r.copy()
        mid = (r > 1.0) & (r < 2.0)
        out[mid] = r[mid] - _smoothstep5_antider(r[mid] - 1.0)
        out[r >= 2.0] = 1.5
        return out

    @property
    def support_radius(self) -> float:
        return 2.0

    @property
    def max_slope(self) -> float:
        return 15.0 / 8.0


QUINTIC = CutoffProfile()


@dataclass(frozen=True)
class RegParams:
    """Regularization knobs: viscosity mu1 and cutoff length mu2.

    mu2 scales the profile argument, so the integrand is untouched for
    |alpha| >= 2 * mu2 and fully suppressed for |alpha| <= mu2.  Either
    knob may be zero (that limb of the regularization switched off).
    The L2 growth bound is only guaranteed when mu2 is well separated
    below mu1; :meth:`l2_bound_armed` reports whether the separation
    mu2 <= (mu1/2)^(3/2) holds.
    """

    mu1: float = 0.0
    mu2: float = 0.0
    cutoff: CutoffProfile = field(default=QUINTIC)

    def __post_init__(self) -> None:
        if not np.isfinite(self.mu1) or self.mu1 < 0 or self.mu1 > 1:
            raise ValueError(f"mu1 must lie in [0, 1], got {self.mu1}")
        if not np.isfinite(self.mu2) or self.mu2 < 0 or self.mu2 > 1:
            raise ValueError(f"mu2 must lie in [0, 1], got {self.mu2}")

    def l2_bound_armed(self) -> bool:
        """True when mu2 <= (mu1/2)^(3/2), arming the L2 growth assertion."""
        return self.mu1 > 0 and self.mu2 <= (self.mu1 / 2.0) ** 1.5

    def keep_factor(self, r) -> np.ndarray:
        """1 - chi(r / mu2); identically 1 when mu2 == 0."""
        r = np.asarray(r, dtype=np.float64)
        if self.mu2 == 0.0:
            return np.ones_like(r)
        return 1.0 - self.cutoff(r / self.mu2)

    def suppressed_mass_1d(self, half_width: float) -> float:
        """integral_0^w chi(r / mu2) dr, the cutoff mass inside [0, w]."""
        if self.mu2 == 0.0:
            return 0.0
        return float(self.mu2 * self.cutoff.antiderivative(half_width / self.mu2))
