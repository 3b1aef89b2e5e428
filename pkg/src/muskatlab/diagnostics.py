"""Time-series bookkeeping for solver runs.

A :class:`DiagnosticsSeries` is a small column store: probe times plus one
float column per requested probe.  Serialization is plain CSV with a
deterministic header so identical runs produce byte-identical files, which
is what the reproducibility checks compare.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import norms
from .grid import InterfaceField

__all__ = ["DiagnosticsSeries", "PROBES", "resolve_probes"]


#: Named field functionals available to the run loop.  Values on tilted
#: fields refer to the periodic part except for the slope probes, which
#: include the tilt.
PROBES = {
    "max": lambda f: float(np.max(f.values)),
    "min": lambda f: float(np.min(f.values)),
    "mean": lambda f: float(np.mean(f.values)),
    "linf": norms.linf_norm,
    "l2": norms.l2_norm,
    "grad_sup": norms.grad_sup_norm,
    "grad_min": lambda f: min(float(np.min(s)) for s in f.full_slope()),
    "holder_grad_half": lambda f: norms.gradient_holder(f, 0.5),
    "sobolev_half": lambda f: norms.sobolev_seminorm(f, 0.5),
}


def resolve_probes(names) -> dict:
    """Map probe names to callables, rejecting unknown names up front."""
    out = {}
    for name in names:
        if name not in PROBES:
            known = ", ".join(sorted(PROBES))
            raise ValueError(f"unknown probe {name!r}; available: {known}")
        out[name] = PROBES[name]
    return out


@dataclass
class DiagnosticsSeries:
    """Probe values sampled along a run, one row per probe time."""

    columns: tuple[str, ...]
    metadata: dict[str, str] = field(default_factory=dict)
    times: list[float] = field(default_factory=list)
    rows: list[tuple[float, ...]] = field(default_factory=list)

    def append(self, t: float, values: dict[str, float]) -> None:
        self.times.append(float(t))
        self.rows.append(tuple(float(values[c]) for c in self.columns))

    def __len__(self) -> int:
        return len(self.times)

    def column(self, name: str) -> np.ndarray:
        if name == "t":
            return np.asarray(self.times)
        i = self.columns.index(name)
        return np.asarray([r[i] for r in self.rows])

    def evaluate(self, f: InterfaceField, t: float, probes: dict) -> None:
        """Apply resolved probe callables to a field and append the row."""
        self.append(t, {name: fn(f) for name, fn in probes.items()})

    # -- CSV round trip ---------------------------------------------------

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        for k, v in self.metadata.items():
            buf.write(f"# {k}={v}\n")
        buf.write(",".join(("t",) + self.columns) + "\n")
        for t, row in zip(self.times, self.rows):
            buf.write(",".join(repr(v) for v in (t, *row)) + "\n")
        return buf.getvalue()

    def to_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text())

    @classmethod
    def from_csv(cls, path) -> "DiagnosticsSeries":
        metadata: dict[str, str] = {}
        header: tuple[str, ...] | None = None
        times: list[float] = []
        rows: list[tuple[float, ...]] = []
        for line in Path(path).read_text().splitlines():
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                metadata[key] = value
                continue
            parts = line.split(",")
            if header is None:
                if parts[0] != "t":
                    raise ValueError(f"malformed series header: {line!r}")
                header = tuple(parts[1:])
                continue
            values = [float(p) for p in parts]
            times.append(values[0])
            rows.append(tuple(values[1:]))
        if header is None:
            raise ValueError("series file has no header row")
        out = cls(columns=header, metadata=metadata)
        out.times = times
        out.rows = rows
        return out
