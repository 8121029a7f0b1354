"""Structured results of checks: the two sides of an (in)equality plus a verdict."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np


@dataclass
class VerificationReport:
    name: str
    lhs: Any
    rhs: Any
    relation: str  # "<=", ">=", "==", "report"
    passed: bool | None
    tolerance: float = 0.0
    details: dict = field(default_factory=dict)
    instance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return jsonable(asdict(self))

    def line(self) -> str:
        verdict = {True: "PASS", False: "FAIL", None: "INFO"}[self.passed]
        return f"[{verdict}] {self.name}: {_fmt(self.lhs)} {self.relation} {_fmt(self.rhs)}"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def inequality(name: str, lhs, rhs, relation: str, tol: float = 0.0, **kw) -> VerificationReport:
    if relation == "<=":
        ok = lhs <= rhs + tol
    elif relation == ">=":
        ok = lhs + tol >= rhs
    elif relation == "==":
        ok = abs(lhs - rhs) <= tol
    else:
        raise ValueError(f"unknown relation {relation!r}")
    return VerificationReport(name, lhs, rhs, relation, bool(ok), tol, **kw)


def jsonable(obj):
    """Convert numpy scalars/arrays and tuples into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return obj
