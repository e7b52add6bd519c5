"""Certificate records and their serialization (JSON, CSV)."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any


@dataclass
class CertificateReport:
    """Outcome of checking one inequality over a finite set of instances.

    ``max_slack_violation`` is the largest slack seen (left side minus right
    side); positive values are violations.  ``witness`` is the instance
    attaining it, the first one in evaluation order on ties.
    """

    condition_id: str
    passed: bool
    max_slack_violation: float
    witness: tuple | None
    samples_checked: int
    detail: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        rec = {
            "condition_id": self.condition_id,
            "pass": bool(self.passed),
            "max_slack_violation": jsonable(self.max_slack_violation),
            "witness": jsonable(self.witness),
            "samples_checked": int(self.samples_checked),
        }
        if self.detail:
            rec["detail"] = jsonable(self.detail)
        return rec


def jsonable(value: Any) -> Any:
    """Convert points, numpy scalars and nested containers to JSON values.

    Non-finite floats become strings so the output stays strict JSON.
    """
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, int):
        return value
    if isinstance(value, float) or hasattr(value, "dtype"):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "to_json"):
        return value.to_json()
    return str(value)


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def trajectory_csv(traj, envelope: list[float] | None = None) -> str:
    """Columns ``n, x[..], c_n, d_n, envelope_n``; blanks where undefined."""
    first = traj.iterates[0]
    if isinstance(first, tuple):
        coords = [f"x_{i}" for i in range(len(first))]
    else:
        coords = ["x"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", *coords, "c_n", "d_n", "envelope_n"])
    for n, x in enumerate(traj.iterates):
        xs = list(x) if isinstance(x, tuple) else [x]
        d = traj.step_distances[n] if n < len(traj.step_distances) else ""
        env = envelope[n] if envelope is not None and n < len(envelope) else ""
        w.writerow([n, *[_cell(v) for v in xs], _cell(traj.norms[n]), _cell(d), _cell(env)])
    return buf.getvalue()


def _cell(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class SuiteReport:
    """Everything one CLI run produced.

    JSON field order is fixed: toolkit, version, command, pass, config,
    reports, solves, criteria.
    """

    command: str
    config: dict[str, Any]
    reports: list[CertificateReport] = field(default_factory=list)
    solves: list[dict[str, Any]] = field(default_factory=list)
    criteria: list[dict[str, Any]] = field(default_factory=list)
    passed: bool = True

    def to_json(self) -> dict[str, Any]:
        from . import __version__

        return {
            "toolkit": "fixpoint-lab",
            "version": __version__,
            "command": self.command,
            "pass": bool(self.passed),
            "config": jsonable(self.config),
            "reports": [r.to_json() for r in self.reports],
            "solves": jsonable(self.solves),
            "criteria": jsonable(self.criteria),
        }
