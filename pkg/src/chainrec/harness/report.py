"""Report assembly and emission.

The canonical text report is byte-stable for a given config + seed +
version: timing lives in a separate file, floats are serialized with repr,
and mapping keys are emitted in sorted order.  Alongside the text report the
emitter writes a per-check CSV, plot-ready series CSVs (any detail key ending
in ``_series``), and a machine-readable JSON copy.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass, field, asdict

import numpy as np
import yaml

from .. import __version__


@dataclass
class Check:
    suite: str
    name: str
    verdict: str            # pass | fail | hypotheses-not-met | resolution-insufficient
    details: dict
    witness: object = None
    seconds: float = 0.0


@dataclass
class Report:
    scenario_name: str
    seed: int
    config_hash: str
    version: str
    checks: list
    total_seconds: float = 0.0

    @classmethod
    def build(cls, scn, checks: list, total_seconds: float) -> "Report":
        canon = yaml.safe_dump(scn.raw or {}, sort_keys=True)
        h = hashlib.sha256(canon.encode()).hexdigest()[:16]
        return cls(scn.name, scn.seed, h, __version__, checks, total_seconds)

    @property
    def verdicts(self) -> list:
        return [c.verdict for c in self.checks]

    def exit_code(self) -> int:
        if any(v == "fail" for v in self.verdicts):
            return 1
        if any(v == "resolution-insufficient" for v in self.verdicts):
            return 3
        return 0


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    if isinstance(x, float):
        return x
    return repr(x)


def _fmt(x, indent: int) -> str:
    pad = "  " * indent
    if isinstance(x, dict):
        if not x:
            return pad + "{}"
        lines = []
        for k in sorted(x):
            v = x[k]
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(_fmt(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
        return "\n".join(lines)
    if isinstance(x, list):
        if not x:
            return pad + "[]"
        return "\n".join(f"{pad}- {_scalar(v)}" if not isinstance(v, (dict, list))
                         else f"{pad}-\n{_fmt(v, indent + 1)}" for v in x)
    return pad + _scalar(x)


def _scalar(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def render_text(report: Report) -> str:
    """Canonical hierarchical text form; excludes all timing fields."""
    out = io.StringIO()
    out.write("chainrec report\n")
    out.write(f"scenario: {report.scenario_name}\n")
    out.write(f"seed: {report.seed}\n")
    out.write(f"config_hash: {report.config_hash}\n")
    out.write(f"version: {report.version}\n")
    out.write(f"checks: {len(report.checks)}\n")
    counts = {}
    for v in report.verdicts:
        counts[v] = counts.get(v, 0) + 1
    for v in sorted(counts):
        out.write(f"  {v}: {counts[v]}\n")
    for c in report.checks:
        out.write(f"\n[{c.suite}] {c.name}\n")
        out.write(f"  verdict: {c.verdict}\n")
        det = _jsonable(c.details)
        if det:
            out.write("  details:\n")
            out.write(_fmt(det, 2) + "\n")
        if c.witness is not None:
            out.write("  witness:\n")
            out.write(_fmt(_jsonable(c.witness), 2) + "\n")
    return out.getvalue()


def render_timings(report: Report) -> str:
    out = io.StringIO()
    out.write(f"total_seconds: {report.total_seconds:.3f}\n")
    for c in report.checks:
        out.write(f"[{c.suite}] {c.name}: {c.seconds:.3f}s\n")
    return out.getvalue()


def emit_report(report: Report, formats=("text", "csv"), out_dir: str = "out"):
    """Write report artifacts; returns the list of file paths written."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out_dir!r}: {e}") from e
    written = []

    def _write(name, text):
        path = os.path.join(out_dir, name)
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as e:
            raise OSError(f"cannot write {path!r}: {e}") from e
        written.append(path)

    if "text" in formats:
        _write("report.txt", render_text(report))
        _write("timings.txt", render_timings(report))
    if "csv" in formats:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["suite", "check", "verdict", "details"])
        for c in report.checks:
            w.writerow([c.suite, c.name, c.verdict,
                        json.dumps(_jsonable(c.details), sort_keys=True)])
        _write("checks.csv", buf.getvalue())
        for c in report.checks:
            for key, val in (c.details or {}).items():
                if not key.endswith("_series") or not isinstance(val, (list, tuple)):
                    continue
                buf = io.StringIO()
                w = csv.writer(buf, lineterminator="\n")
                for row in val:
                    w.writerow(_jsonable(list(row) if isinstance(row, (list, tuple, np.ndarray))
                                         else [row]))
                safe = "".join(ch if ch.isalnum() or ch in "-_." else "_"
                               for ch in f"{c.suite}.{c.name}.{key}")
                _write(f"{safe}.csv", buf.getvalue())
    # machine-readable copy (includes timing; used by the `report` subcommand)
    payload = {
        "scenario_name": report.scenario_name,
        "seed": report.seed,
        "config_hash": report.config_hash,
        "version": report.version,
        "total_seconds": report.total_seconds,
        "checks": [{**asdict(c), "details": _jsonable(c.details),
                    "witness": _jsonable(c.witness)} for c in report.checks],
    }
    _write("report.json", json.dumps(payload, sort_keys=True, indent=1))
    return written


def load_report(path: str) -> Report:
    with open(path) as fh:
        doc = json.load(fh)
    checks = [Check(c["suite"], c["name"], c["verdict"], c["details"],
                    c.get("witness"), c.get("seconds", 0.0))
              for c in doc["checks"]]
    return Report(doc["scenario_name"], doc["seed"], doc["config_hash"],
                  doc["version"], checks, doc.get("total_seconds", 0.0))
