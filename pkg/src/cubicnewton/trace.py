"""Per-iteration records shared by every solver, and their CSV form."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from .errors import FormatError

CSV_COLUMNS = ("iter", "time_s", "f", "grad_norm", "eta", "step_norm", "mu_t", "train_err", "test_err")

NAN = float("nan")


@dataclass
class TraceRow:
    """State at iterate ``t``; ``eta``, ``step_norm``, ``mu_t`` describe the step taken from it
    and are NaN on the final row."""

    t: int
    f: float
    grad_norm: float
    eta: float = NAN
    step_norm: float = NAN
    mu_t: float = NAN
    time_s: float = 0.0
    train_err: float = NAN
    test_err: float = NAN
    stage: Optional[int] = None


@dataclass
class IterateTrace:
    solver: str = ""
    rows: List[TraceRow] = field(default_factory=list)
    iterates: Optional[List[np.ndarray]] = None
    stage_ends: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    x_final: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def f(self):
        return self.column("f")

    @property
    def grad_norm(self):
        return self.column("grad_norm")

    def to_csv(self, target=None):
        """Write the trace; returns the text when ``target`` is None."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(
                [r.t, _fmt(r.time_s), _fmt(r.f), _fmt(r.grad_norm), _fmt(r.eta),
                 _fmt(r.step_norm), _fmt(r.mu_t), _fmt(r.train_err), _fmt(r.test_err)]
            )
        text = buf.getvalue()
        if target is None:
            return text
        Path(target).write_text(text)
        return None

    @classmethod
    def read_csv(cls, source, solver=None):
        path = Path(source)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
                raise FormatError(f"{path}: expected header {','.join(CSV_COLUMNS)}")
            rows = []
            for line in reader:
                if not line:
                    continue
                if len(line) != len(CSV_COLUMNS):
                    raise FormatError(f"{path}: row with {len(line)} fields")
                vals = [_parse(v) for v in line[1:]]
                rows.append(TraceRow(int(line[0]), time_s=vals[0], f=vals[1], grad_norm=vals[2],
                                     eta=vals[3], step_norm=vals[4], mu_t=vals[5],
                                     train_err=vals[6], test_err=vals[7]))
        return cls(solver=solver or path.stem, rows=rows)


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def _parse(s):
    s = s.strip()
    return NAN if s == "" else float(s)


class Recorder:
    """Builds a trace while a solver runs (timing, optional iterates, monitor)."""

    def __init__(self, solver: str, keep_iterates=False, monitor: Optional[Callable] = None):
        self.trace = IterateTrace(solver=solver, iterates=[] if keep_iterates else None)
        self.monitor = monitor
        self.start = time.perf_counter()
        self.excluded = 0.0

    def add(self, t, x, f, grad_norm, stage=None, **step):
        now = time.perf_counter()
        row = TraceRow(t=t, f=float(f), grad_norm=float(grad_norm),
                       time_s=now - self.start - self.excluded, stage=stage, **step)
        if self.monitor is not None:
            # error evaluation is bookkeeping, not solver work
            row.train_err, row.test_err = self.monitor(x)
            self.excluded += time.perf_counter() - now
        self.trace.rows.append(row)
        if self.trace.iterates is not None:
            self.trace.iterates.append(np.array(x, dtype=float))
        return row

    def finish(self, x):
        self.trace.x_final = np.array(x, dtype=float)
        return self.trace
