"""Time integration of the regularized and exact evolutions.

Two schemes are provided.  ``imex1`` treats the singular integral
explicitly and the viscosity implicitly (a diagonal spectral solve), so it
is unconditionally stable in the stiff linear part; the implicit solve also
applies the standard 2/3 dealiasing mask.  ``rk4`` is the fully explicit
classical reference integrator over the complete right side, subject to the
usual parabolic step restriction.

Runs record probe values on a geometric time cadence (dense near t = 0,
where the smoothing statistics vary fastest) and are deterministic given
their configuration.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .cutoff import RegParams
from .diagnostics import DiagnosticsSeries, resolve_probes
from .grid import GridSpec, InterfaceField, gradient, laplacian
from .norms import bj_diagnostic, grad_sup_norm, lip_extrema
from .singular import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    linear_constant,
    rhs_exact,
    rhs_regularized,
)

__all__ = [
    "SolverConfig",
    "SolverState",
    "SolverAbort",
    "RunRecord",
    "DecomposedRunRecord",
    "ContinuationReport",
    "step_imex",
    "step_rk4",
    "run",
    "run_decomposed",
    "continuation",
    "semigroup_oracle",
]

_SCHEMES = ("imex1", "rk4")
_RHS_KINDS = ("regularized", "exact", "none")

DEFAULT_PROBES = ("max", "min", "linf", "l2", "grad_sup")


@dataclass(frozen=True)
class SolverConfig:
    """Scheme, step size, horizon, and physics parameters for a run.

    ``rhs_kind`` selects the explicit part: the regularized kernel (needs
    ``params``), the exact kernel, or nothing at all (pure viscosity, used
    by the linear sanity checks).  ``cfl_safety`` scales the parabolic step
    bound enforced for rk4.
    """

    dt: float
    T: float
    scheme: str = "imex1"
    rhs_kind: str = "regularized"
    params: RegParams | None = None
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    cfl_safety: float = 0.5
    probe_count: int = 25

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (math.isfinite(self.T) and self.T >= 0.0):
            raise ValueError(f"T must be nonnegative, got {self.T}")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.rhs_kind not in _RHS_KINDS:
            raise ValueError(f"unknown rhs_kind {self.rhs_kind!r}")
        if self.rhs_kind == "regularized" and self.params is None:
            raise ValueError("regularized runs need params")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if self.probe_count < 2:
            raise ValueError(f"probe_count must be >= 2, got {self.probe_count}")

    @property
    def mu1(self) -> float:
        return self.params.mu1 if self.params is not None else 0.0

    def cfl_limit(self, grid: GridSpec) -> float:
        """Largest rk4 step the viscosity admits on this grid."""
        if self.mu1 == 0.0:
            return math.inf
        return self.cfl_safety * grid.h**2 / (2.0 * grid.d * self.mu1)

    def to_dict(self) -> dict:
        out = {
            "scheme": self.scheme,
            "rhs_kind": self.rhs_kind,
            "dt": self.dt,
            "T": self.T,
            "cfl_safety": self.cfl_safety,
            "probe_count": self.probe_count,
            "quad": {
                "tail_mode": self.quad.tail_mode,
                "singular_correction": self.quad.singular_correction,
                "boundary_half_weight": self.quad.boundary_half_weight,
            },
        }
        if self.params is None:
            out["params"] = None
        else:
            out["params"] = {
                "mu1": self.params.mu1,
                "mu2": self.params.mu2,
                "cutoff": self.params.cutoff.id,
            }
        return out


@dataclass(frozen=True)
class SolverState:
    """One point of a trajectory: time, field, and step count."""

    t: float
    field: InterfaceField
    step: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t) and self.t >= 0.0):
            raise ValueError(f"state time must be nonnegative, got {self.t}")


class SolverAbort(RuntimeError):
    """Blow-up of the discrete solution; carries whatever was recorded."""

    def __init__(self, message: str, series: DiagnosticsSeries, state: SolverState):
        super().__init__(message)
        self.series = series
        self.state = state


def _explicit_rhs(f: InterfaceField, cfg: SolverConfig) -> InterfaceField | None:
    if cfg.rhs_kind == "regularized":
        return rhs_regularized(f, cfg.params, cfg.quad)
    if cfg.rhs_kind == "exact":
        return rhs_exact(f, cfg.quad)
    return None


@lru_cache(maxsize=8)
def _dealias_keep(d: int, N: int) -> np.ndarray:
    """2/3-rule mask: keep per-axis integer modes with |m| <= floor(N/3)."""
    m = np.fft.fftfreq(N, 1.0 / N).astype(np.int64)
    keep1 = np.abs(m) <= N // 3
    if d == 1:
        out = keep1
    else:
        out = keep1[:, None] & keep1[None, :]
    out.setflags(write=False)
    return out


def step_imex(
    state: SolverState, cfg: SolverConfig, dt: float | None = None
) -> SolverState:
    """First-order IMEX step: explicit kernel, implicit diagonal viscosity.

    The update is ``u = f + dt * RHS`` followed by the spectral solve
    ``u_hat -> mask * u_hat / (1 + dt mu1 |xi|^2)``; the 2/3 mask lives only
    inside this solve.  Unconditionally stable in the viscous part.
    """
    if dt is None:
        dt = cfg.dt
    if dt <= 0.0:
        raise ValueError(f"imex1 requires a positive step, got {dt}")
    f = state.field
    g = f.grid
    rhs = _explicit_rhs(f, cfg)
    u = f.values if rhs is None else f.values + dt * rhs.values
    uh = np.fft.fftn(u) * _dealias_keep(g.d, g.N)
    xi2 = sum(np.square(k) for k in g.wavenumbers())
    uh /= 1.0 + dt * cfg.mu1 * xi2
    new = InterfaceField(g, np.fft.ifftn(uh).real, f.affine_slope)
    return SolverState(state.t + dt, new, state.step + 1)


def step_rk4(
    state: SolverState, cfg: SolverConfig, dt: float | None = None
) -> SolverState:
    """Classical four-stage step over the full right side.

    The viscous term is evaluated spectrally inside each stage, so the step
    obeys the parabolic restriction ``|dt| <= cfl_safety h^2/(2 d mu1)``,
    checked before any work.  Negative dt is accepted (time reversal of the
    linear flow); the returned state time must stay nonnegative.
    """
    if dt is None:
        dt = cfg.dt
    limit = cfg.cfl_limit(state.field.grid)
    if abs(dt) > limit:
        raise ValueError(
            f"rk4 step {abs(dt):g} exceeds the viscous CFL limit {limit:g}"
        )

    mu1 = cfg.mu1

    def rate(f: InterfaceField) -> np.ndarray:
        rhs = _explicit_rhs(f, cfg)
        out = np.zeros_like(f.values) if rhs is None else rhs.values.copy()
        if mu1 != 0.0:
            out += mu1 * laplacian(f).values
        return out

    f = state.field
    k1 = rate(f)
    k2 = rate(f.with_values(f.values + 0.5 * dt * k1))
    k3 = rate(f.with_values(f.values + 0.5 * dt * k2))
    k4 = rate(f.with_values(f.values + dt * k3))
    vals = f.values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    new = InterfaceField(f.grid, vals, f.affine_slope)
    return SolverState(state.t + dt, new, state.step + 1)


_STEPPERS = {"imex1": step_imex, "rk4": step_rk4}


def _probe_steps(n_steps: int, probe_count: int) -> list[int]:
    """Geometric probe schedule in step index, always containing 0 and the end."""
    if n_steps == 0:
        return [0]
    picks = {0, n_steps}
    m = probe_count - 1
    for j in range(m):
        picks.add(max(1, round(n_steps ** (j / max(m - 1, 1)))))
    return sorted(picks)


@dataclass(frozen=True)
class RunRecord:
    """Everything a finished run hands back to the caller."""

    series: DiagnosticsSeries
    final: InterfaceField
    config: SolverConfig
    stats: dict
    snapshots: tuple[tuple[float, InterfaceField], ...] = ()

    def manifest(self, series_ref: str = "", snapshot_refs: tuple[str, ...] = ()) -> dict:
        """JSON-ready run summary with artifact references."""
        return {
            "config": self.config.to_dict(),
            "series": series_ref,
            "snapshots": list(snapshot_refs),
            "stats": dict(self.stats),
        }


def run(
    f0: InterfaceField,
    cfg: SolverConfig,
    probes=DEFAULT_PROBES,
    keep_snapshots: bool = False,
) -> RunRecord:
    """March f0 to time T, sampling probes on the geometric cadence.

    T is divided into ``round(T/dt)`` equal steps (at least one), so the
    realized step can differ slightly from ``cfg.dt``.  A non-finite field
    aborts the run with the partial series attached to the exception.
    T = 0 returns the initial probe row only.
    """
    probe_fns = resolve_probes(probes)
    g = f0.grid
    if cfg.T == 0.0:
        n_steps, dt = 0, 0.0
    else:
        n_steps = max(1, round(cfg.T / cfg.dt))
        dt = cfg.T / n_steps
    if cfg.scheme == "rk4" and dt > cfg.cfl_limit(g):
        raise ValueError(
            f"rk4 step {dt:g} exceeds the viscous CFL limit {cfg.cfl_limit(g):g}"
        )
    stepper = _STEPPERS[cfg.scheme]

    meta = {
        "d": str(g.d),
        "N": str(g.N),
        "L": repr(g.L),
        "scheme": cfg.scheme,
        "rhs_kind": cfg.rhs_kind,
        "dt": repr(dt),
        "T": repr(cfg.T),
        "mu1": repr(cfg.mu1),
        "mu2": repr(cfg.params.mu2 if cfg.params else 0.0),
    }
    series = DiagnosticsSeries(columns=tuple(probe_fns), metadata=meta)
    probe_at = set(_probe_steps(n_steps, cfg.probe_count))

    state = SolverState(0.0, f0)
    series.evaluate(f0, 0.0, probe_fns)
    snapshots = [(0.0, f0)] if keep_snapshots else []
    max_vel = 0.0
    max_grad_vel = 0.0
    t_wall = time.perf_counter()
    for i in range(1, n_steps + 1):
        prev = state.field
        try:
            state = stepper(state, cfg, dt)
            # Exact probe times, not accumulated roundoff.
            state = SolverState(i * dt, state.field, state.step)
        except (ValueError, FloatingPointError) as exc:
            # Blow-up surfaces either as a non-finite field (ValueError) or,
            # one step earlier, as a non-finite quadrature term.
            raise SolverAbort(
                f"solver aborted at step {i} (t={state.t:g}): {exc}",
                series,
                state,
            ) from exc
        diff = state.field.values - prev.values
        max_vel = max(max_vel, float(np.max(np.abs(diff))) / dt)
        dgrad = InterfaceField(g, diff).grad_arrays()
        max_grad_vel = max(
            max_grad_vel, max(float(np.max(np.abs(a))) for a in dgrad) / dt
        )
        if i in probe_at:
            series.evaluate(state.field, state.t, probe_fns)
            if keep_snapshots:
                snapshots.append((state.t, state.field))
    stats = {
        "n_steps": n_steps,
        "dt": dt,
        "max_velocity_inf": max_vel,
        "max_grad_velocity_inf": max_grad_vel,
        "quad_nodes": int(cfg.quad.nodes(g)[0].shape[0]),
        "wall_seconds": time.perf_counter() - t_wall,
    }
    return RunRecord(series, state.field, cfg, stats, tuple(snapshots))


def _difference_field(a: InterfaceField, b: InterfaceField) -> InterfaceField:
    """a - b with tilts subtracted."""
    slope = None
    if a.affine_slope is not None or b.affine_slope is not None:
        sa = a.affine_slope or (0.0,) * a.grid.d
        sb = b.affine_slope or (0.0,) * b.grid.d
        slope = tuple(x - y for x, y in zip(sa, sb))
    return InterfaceField(a.grid, a.values - b.values, slope)


@dataclass(frozen=True)
class DecomposedRunRecord:
    """Paired evolution of a field and its smooth component.

    ``series`` has one row per time step with the slope extrema M_j, m_j of
    every direction of the rough remainder F1 = f - F2, their absolute sum
    A, the dissipation diagnostics B_j at the running argmax points, and
    the aggregate slope of F1 (A never exceeds 2 d times it).
    """

    series: DiagnosticsSeries
    final_total: InterfaceField
    final_smooth: InterfaceField
    final_rough: InterfaceField
    config: SolverConfig
    stats: dict


def run_decomposed(
    f0_1: InterfaceField, f0_2: InterfaceField, cfg: SolverConfig
) -> DecomposedRunRecord:
    """Evolve f = f0_1 + f0_2 and F2 = f0_2 under one flow; track F1 = f - F2.

    Both trajectories use the same scheme and step; the rough remainder is
    never stepped itself, only reconstructed, so its diagnostics reflect the
    coupled dynamics.  Diagnostics are recorded at every step.
    """
    if f0_1.grid != f0_2.grid:
        raise ValueError("decomposed run needs both fields on one grid")
    if cfg.params is None:
        raise ValueError("decomposed runs need params (the flow of F2 uses them)")
    g = f0_1.grid
    # Plain sum, tilts included.
    slope = None
    if f0_1.affine_slope is not None or f0_2.affine_slope is not None:
        s1 = f0_1.affine_slope or (0.0,) * g.d
        s2 = f0_2.affine_slope or (0.0,) * g.d
        slope = tuple(a + b for a, b in zip(s1, s2))
    total0 = InterfaceField(g, f0_1.values + f0_2.values, slope)

    if cfg.T == 0.0:
        n_steps, dt = 0, 0.0
    else:
        n_steps = max(1, round(cfg.T / cfg.dt))
        dt = cfg.T / n_steps
    if cfg.scheme == "rk4" and dt > cfg.cfl_limit(g):
        raise ValueError(
            f"rk4 step {dt:g} exceeds the viscous CFL limit {cfg.cfl_limit(g):g}"
        )
    stepper = _STEPPERS[cfg.scheme]

    cols: list[str] = []
    for j in range(g.d):
        cols += [f"M_{j}", f"m_{j}"]
    cols += ["A", "grad_sup_F1"]
    cols += [f"B_{j}" for j in range(g.d)]
    meta = {
        "d": str(g.d),
        "N": str(g.N),
        "L": repr(g.L),
        "scheme": cfg.scheme,
        "dt": repr(dt),
        "T": repr(cfg.T),
        "mu1": repr(cfg.mu1),
        "mu2": repr(cfg.params.mu2),
    }
    series = DiagnosticsSeries(columns=tuple(cols), metadata=meta)

    def record(t: float, total: InterfaceField, smooth: InterfaceField) -> None:
        f1 = _difference_field(total, smooth)
        ex = lip_extrema(f1)
        row: dict[str, float] = {}
        for j in range(g.d):
            row[f"M_{j}"] = ex.maxima[j]
            row[f"m_{j}"] = ex.minima[j]
            row[f"B_{j}"] = bj_diagnostic(
                f1, total, cfg.params, j, cfg.quad, ex.argmax[j]
            )
        row["A"] = ex.total_variation_bound
        row["grad_sup_F1"] = grad_sup_norm(f1)
        series.append(t, row)

    st_total = SolverState(0.0, total0)
    st_smooth = SolverState(0.0, f0_2)
    record(0.0, total0, f0_2)
    t_wall = time.perf_counter()
    for i in range(1, n_steps + 1):
        try:
            st_total = stepper(st_total, cfg, dt)
            st_smooth = stepper(st_smooth, cfg, dt)
        except (ValueError, FloatingPointError) as exc:
            raise SolverAbort(
                f"decomposed run aborted at step {i}: {exc}", series, st_total
            ) from exc
        st_total = SolverState(i * dt, st_total.field, st_total.step)
        st_smooth = SolverState(i * dt, st_smooth.field, st_smooth.step)
        record(st_total.t, st_total.field, st_smooth.field)
    stats = {
        "n_steps": n_steps,
        "dt": dt,
        "wall_seconds": time.perf_counter() - t_wall,
    }
    return DecomposedRunRecord(
        series=series,
        final_total=st_total.field,
        final_smooth=st_smooth.field,
        final_rough=_difference_field(st_total.field, st_smooth.field),
        config=cfg,
        stats=stats,
    )


@dataclass(frozen=True)
class ContinuationReport:
    """Cauchy record of a (mu1, mu2) -> 0 parameter sweep."""

    schedule: tuple[tuple[float, float], ...]
    finals: tuple[InterfaceField, ...]
    diffs: tuple[float, ...]
    monotone: bool
    exact_final: InterfaceField | None = None
    exact_diff: float | None = None


def _validate_schedule(schedule: list[tuple[float, float]]) -> None:
    for mu1, mu2 in schedule:
        RegParams(mu1=mu1, mu2=mu2)
    for (a1, a2), (b1, b2) in zip(schedule, schedule[1:]):
        if b1 > a1:
            raise ValueError("schedule must not increase mu1")
        if b1 == a1 and not b2 < a2:
            raise ValueError("schedule must decrease mu2 at fixed mu1")


def continuation(
    f0: InterfaceField,
    cfg: SolverConfig,
    schedule,
    include_exact: bool = True,
) -> ContinuationReport:
    """Run one initial datum across a decreasing (mu1, mu2) schedule.

    The schedule must lower mu2 first at fixed mu1, then lower mu1.  Each
    stage runs from the same f0; the report lists sup-norm differences of
    consecutive final snapshots, whether they shrink monotonically (flagged,
    not fatal), and optionally the distance from the smallest-parameter run
    to a cutoff-free run, which Cauchy behavior bounds by twice the last
    increment.
    """
    schedule = [(float(a), float(b)) for a, b in schedule]
    if not schedule:
        raise ValueError("schedule must not be empty")
    _validate_schedule(schedule)
    base_cutoff = cfg.params.cutoff if cfg.params is not None else None

    finals = []
    for mu1, mu2 in schedule:
        kwargs = {"mu1": mu1, "mu2": mu2}
        if base_cutoff is not None:
            kwargs["cutoff"] = base_cutoff
        stage = replace(cfg, rhs_kind="regularized", params=RegParams(**kwargs))
        finals.append(run(f0, stage, probes=("linf",)).final)

    diffs = tuple(
        float(np.max(np.abs(a.values - b.values)))
        for a, b in zip(finals, finals[1:])
    )
    monotone = all(y <= x for x, y in zip(diffs, diffs[1:]))

    exact_final = None
    exact_diff = None
    if include_exact:
        # The cutoff-free reference keeps the last stage's viscosity: the
        # schedule's limit point is mu2 -> 0 at the final mu1.
        last_mu1 = schedule[-1][0]
        kwargs = {"mu1": last_mu1, "mu2": 0.0}
        if base_cutoff is not None:
            kwargs["cutoff"] = base_cutoff
        stage = replace(cfg, rhs_kind="exact", params=RegParams(**kwargs))
        exact_final = run(f0, stage, probes=("linf",)).final
        exact_diff = float(np.max(np.abs(exact_final.values - finals[-1].values)))
    return ContinuationReport(
        schedule=tuple(schedule),
        finals=tuple(finals),
        diffs=diffs,
        monotone=monotone,
        exact_final=exact_final,
        exact_diff=exact_diff,
    )


def semigroup_oracle(f0: InterfaceField, t: float, mu1: float) -> InterfaceField:
    """Exact linear-level solution operator.

    Applies the Fourier multiplier ``exp(-(c_d |xi| + mu1 |xi|^2) t)`` where
    c_d is the verified kernel constant, solving the linearization of the
    evolution about the flat interface.
    """
    c = linear_constant(f0.grid.d)

    def symbol(*ks):
        xi = np.sqrt(sum(np.square(k) for k in ks))
        return np.exp(-(c * xi + mu1 * xi**2) * t)

    from .grid import fourier_multiplier

    return fourier_multiplier(f0, symbol)
