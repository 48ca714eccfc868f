"""Reading and writing curves, specs, perturbation reports and SVG drawings."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .curves import SampledCurve
from .errors import InputError
from .flatcore import FlatCoreSpec
from .perturbations import REPORT_COLUMNS, PerturbationReport

SVG_SCALE = 100.0
SVG_MARGIN = 20.0


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {path}") from exc
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_json(path):
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _fmt(x: float) -> str:
    return repr(float(x))


# --------------------------------------------------------------------------
# curves
# --------------------------------------------------------------------------

def curve_to_json(c: SampledCurve) -> str:
    samples = [
        {"s": float(c.s[i]), "x": c.pos[i].tolist(), "t": c.tan[i].tolist(), "k": c.curv[i].tolist()}
        for i in range(c.n)
    ]
    return json.dumps({"p": c.p, "d": c.d, "samples": samples})


def curve_from_json(data: dict) -> SampledCurve:
    if not isinstance(data, dict) or "samples" not in data or "d" not in data:
        raise InputError("curve JSON needs fields 'd' and 'samples'")
    d = data["d"]
    samples = data["samples"]
    if not isinstance(samples, list) or not samples:
        raise InputError("curve JSON has no samples")
    try:
        s = [float(row["s"]) for row in samples]
        pos = [row["x"] for row in samples]
        tan = [row["t"] for row in samples]
        curv = [row["k"] for row in samples]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed curve sample: {exc}") from exc
    c = SampledCurve(s, pos, tan, curv, p=data.get("p"))
    if c.d != d:
        raise InputError(f"curve JSON declares d={d} but samples have {c.d} components")
    return c


def curve_to_csv(c: SampledCurve) -> str:
    d = c.d
    header = ["s"] + [f"x{i + 1}" for i in range(d)] + [f"t{i + 1}" for i in range(d)] + [f"k{i + 1}" for i in range(d)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for i in range(c.n):
        w.writerow([_fmt(c.s[i])] + [_fmt(v) for v in c.pos[i]] + [_fmt(v) for v in c.tan[i]] + [_fmt(v) for v in c.curv[i]])
    return buf.getvalue()


def curve_from_csv(text: str, p: float | None = None) -> SampledCurve:
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 2:
        raise InputError("curve CSV has no samples")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "s" or (len(header) - 1) % 3:
        raise InputError("curve CSV header must be s,x1..xd,t1..td,k1..kd")
    d = (len(header) - 1) // 3
    expected = ["s"] + [f"{c}{i + 1}" for c in "xtk" for i in range(d)]
    if header != expected:
        raise InputError(f"curve CSV header must be {','.join(expected)}")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    except ValueError as exc:
        raise InputError(f"non-numeric curve CSV entry: {exc}") from exc
    if data.shape[1] != len(header):
        raise InputError("curve CSV rows have the wrong number of columns")
    return SampledCurve(data[:, 0], data[:, 1 : 1 + d], data[:, 1 + d : 1 + 2 * d], data[:, 1 + 2 * d :], p=p)


def write_curve(c: SampledCurve, path) -> None:
    if str(path).lower().endswith(".csv"):
        atomic_write(path, curve_to_csv(c))
    else:
        atomic_write(path, curve_to_json(c))


def read_curve(path) -> SampledCurve:
    if str(path).lower().endswith(".csv"):
        return curve_from_csv(_read_text(path))
    return curve_from_json(_load_json(path))


# --------------------------------------------------------------------------
# specs and reports
# --------------------------------------------------------------------------

def read_spec(path) -> FlatCoreSpec:
    try:
        return FlatCoreSpec.from_dict(_load_json(path))
    except InputError as exc:
        raise type(exc)(f"{path}: {exc}") from exc


def write_spec(spec: FlatCoreSpec, path) -> None:
    atomic_write(path, json.dumps(spec.as_dict(), indent=2) + "\n")


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(REPORT_COLUMNS), lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow({k: (v if k == "n" else _fmt(v)) for k, v in r.row().items()})
    return buf.getvalue()


def reports_from_csv(text: str) -> list[PerturbationReport]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise InputError("report CSV is empty")
    missing = [c for c in REPORT_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise InputError(f"report CSV lacks columns: {', '.join(missing)}")
    out = []
    for line, row in enumerate(reader, start=2):
        try:
            out.append(PerturbationReport.from_row(row))
        except InputError as exc:
            raise InputError(f"report CSV line {line}: {exc}") from exc
    return out


def read_reports(path) -> list[PerturbationReport]:
    return reports_from_csv(_read_text(path))


# --------------------------------------------------------------------------
# SVG
# --------------------------------------------------------------------------

def svg_document(paths, scale: float = SVG_SCALE, labels=(), margin: float = SVG_MARGIN) -> str:
    """SVG with one polyline per entry of ``paths`` (arrays of shape (n, 2)).

    The y axis points up, as in the usual plane picture.
    """
    paths = [np.asarray(P, dtype=float) for P in paths]
    if not paths:
        raise InputError("nothing to draw")
    allpts = np.vstack(paths)
    lo = allpts.min(axis=0)
    hi = allpts.max(axis=0)
    text_h = 16.0 * len(labels)
    width = (hi[0] - lo[0]) * scale + 2 * margin
    height = (hi[1] - lo[1]) * scale + 2 * margin + text_h
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2f}" height="{height:.2f}" viewBox="0 0 {width:.2f} {height:.2f}">'
    ]
    for k, label in enumerate(labels):
        out.append(f'<text x="{margin:.2f}" y="{margin + 12 + 16 * k:.2f}" font-family="sans-serif" font-size="12">{_escape(label)}</text>')
    for P in paths:
        X = (P[:, 0] - lo[0]) * scale + margin
        Y = (hi[1] - P[:, 1]) * scale + margin + text_h
        pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(X, Y))
        out.append(f'<polyline fill="none" stroke="black" stroke-width="1.5" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def curve_svg(c: SampledCurve, scale: float = SVG_SCALE, labels=(), plane=None) -> str:
    """SVG drawing of a curve; ``d > 2`` curves need an explicit coordinate ``plane``
    unless they lie in the first two coordinates."""
    if plane is None:
        if c.d > 2 and np.any(c.pos[:, 2:] != 0):
            raise InputError("SVG output needs a planar curve or a projection plane")
        plane = (0, 1)
    i, j = plane
    return svg_document([c.pos[:, [i, j]]], scale=scale, labels=labels)


def write_svg(c: SampledCurve, path, scale: float = SVG_SCALE, labels=(), plane=None) -> None:
    atomic_write(path, curve_svg(c, scale, labels, plane))


def json_dumps(obj) -> str:
    """JSON text with NaN/inf mapped to null so the output stays standard."""
    return json.dumps(_clean(obj), sort_keys=False)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj
