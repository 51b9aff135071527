"""Deterministic serialisation of reports (JSON with 17 significant digits, CSV)."""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import InvalidArgument
from .flow import Trajectory
from .functionals import FIELDS, ELReport
from .identities import SuiteReport


def dumps(obj) -> str:
    """Compact JSON with insertion-ordered keys and floats at 17 significant digits."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def el_report_dict(report: ELReport) -> dict:
    points = []
    for p, rec in report.points:
        entry = {"point": list(p), "scalar": rec.scalar}
        for name in FIELDS:
            entry[name] = getattr(rec, name)
        entry["scaled"] = {name: rec.scaled(name) for name in FIELDS}
        points.append(entry)
    return {"metric": report.metric_name, "t": report.t, "points": points, "summary": report.summary()}


def write_report(report, fmt: str = "json") -> bytes:
    if isinstance(report, Trajectory):
        if fmt != "csv":
            raise InvalidArgument("trajectories serialise to csv only")
        return report.to_csv().encode("utf-8")
    if fmt != "json":
        raise InvalidArgument(f"format {fmt!r} is not supported for {type(report).__name__}")
    if isinstance(report, ELReport):
        payload = el_report_dict(report)
    elif isinstance(report, SuiteReport):
        payload = report.as_dict()
    elif isinstance(report, dict):
        payload = report
    else:
        raise InvalidArgument(f"unknown report type {type(report).__name__}")
    return (dumps(payload) + "\n").encode("utf-8")
