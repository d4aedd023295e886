"""Structured pass/fail reports with deterministic text and CSV renderings."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional


@dataclass
class Probe:
    probe_id: str
    residual: float
    ok: bool
    extra: dict = field(default_factory=dict)


@dataclass
class Stage:
    name: str
    description: str
    tol: float
    probes: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def add(self, probe_id, residual: float, ok: Optional[bool] = None, **extra) -> Probe:
        residual = float(residual)
        if ok is None:
            ok = residual <= self.tol
        probe = Probe(str(probe_id), residual, bool(ok), extra)
        self.probes.append(probe)
        return probe

    @property
    def passed(self) -> bool:
        return bool(self.probes) and all(p.ok for p in self.probes)

    @property
    def max_residual(self) -> float:
        finite = [p.residual for p in self.probes]
        return max(finite) if finite else math.nan


@dataclass
class StructuredReport:
    title: str
    stages: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def stage(self, name: str, description: str, tol: float) -> Stage:
        s = Stage(name, description, tol)
        self.stages.append(s)
        return s

    def __getitem__(self, name: str) -> Stage:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.stages)

    def to_text(self) -> str:
        lines = [self.title, "=" * len(self.title)]
        for s in self.stages:
            status = "PASS" if s.passed else "FAIL"
            lines.append(f"[{status}] {s.name}: {s.description}")
            lines.append(f"    probes={len(s.probes)} max_residual={s.max_residual:.6e} tol={s.tol:.1e}")
            for key in sorted(s.diagnostics):
                lines.append(f"    {key} = {s.diagnostics[key]}")
            bad = [p for p in s.probes if not p.ok]
            for p in bad[:5]:
                lines.append(f"    failed probe {p.probe_id}: residual {p.residual:.6e}")
        for note in self.notes:
            lines.append(f"note: {note}")
        lines.append(f"verdict: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stage", "probe_id", "residual", "pass"])
        for s in self.stages:
            for p in s.probes:
                w.writerow([s.name, p.probe_id, repr(p.residual), int(p.ok)])
        return buf.getvalue()
