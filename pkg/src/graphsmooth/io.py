"""Graph, signal, filter-spec and report formats.

All writers are atomic: output goes to a temporary file in the target
directory which is then renamed over the destination, so a failure never
leaves a partial file behind. Floats are written with 17 significant digits
so that a write/read cycle is lossless.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .exceptions import ColumnCountMismatch, GraphSmoothError, ParseError
from .graph import SignalBatch, WeightedGraph

GRAPH_HEADER = ["src", "dst", "weight"]


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and ``os.replace``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _rows(path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            yield lineno, [c.strip() for c in row]


# ---------------------------------------------------------------------------
# graphs


def parse_graph_csv(path, n_nodes: int | None = None) -> WeightedGraph:
    """Read an edge list with header ``src,dst,weight``.

    Node ids are 0-based integers; the node count is ``max id + 1`` unless
    ``n_nodes`` is given. Each undirected edge appears once.
    """
    rows = _rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise ParseError("empty graph file", 1)
    if [h.lower() for h in header] != GRAPH_HEADER:
        raise ParseError(f"expected header 'src,dst,weight', got {','.join(header)!r}", lineno)
    edges, max_id = [], -1
    for lineno, row in rows:
        if len(row) != 3:
            raise ColumnCountMismatch(f"expected 3 columns, got {len(row)}", lineno)
        try:
            src, dst = int(row[0]), int(row[1])
            weight = float(row[2])
        except ValueError:
            raise ParseError(f"cannot parse edge {','.join(row)!r}", lineno)
        edges.append((lineno, (src, dst, weight)))
        max_id = max(max_id, src, dst)
    n = max_id + 1 if n_nodes is None else n_nodes
    try:
        return WeightedGraph(n, tuple(e for _, e in edges))
    except GraphSmoothError as exc:
        # re-validate edge by edge to point at the offending line
        seen = []
        for lineno, e in edges:
            seen.append(e)
            try:
                WeightedGraph(n, tuple(seen))
            except GraphSmoothError as inner:
                inner.args = (f"line {lineno}: {inner.args[0]}",)
                inner.line = lineno
                raise inner from None
        raise exc


def format_graph_csv(g: WeightedGraph) -> str:
    buf = _io.StringIO()
    buf.write(",".join(GRAPH_HEADER) + "\n")
    for s, d, w in g.edges:
        buf.write(f"{s},{d},{fmt_float(w)}\n")
    return buf.getvalue()


def write_graph_csv(path, g: WeightedGraph) -> None:
    atomic_write(path, format_graph_csv(g))


# ---------------------------------------------------------------------------
# signals


def parse_signals_csv(path, n_nodes: int | None = None) -> SignalBatch:
    """Read an ``M x N`` numeric matrix, one signal per row.

    A first row that is not numeric is treated as a header.
    """
    data = []
    width = n_nodes
    for i, (lineno, row) in enumerate(_rows(path)):
        try:
            vals = [float(c) for c in row]
        except ValueError:
            if i == 0 and not data:
                continue
            raise ParseError(f"non-numeric value in {','.join(row)!r}", lineno)
        if width is None:
            width = len(vals)
        if len(vals) != width:
            raise ColumnCountMismatch(f"expected {width} columns, got {len(vals)}", lineno)
        data.append(vals)
    if not data:
        raise ParseError("no signal rows", None)
    return SignalBatch(np.array(data))


def format_signals_csv(X) -> str:
    X = X.values if isinstance(X, SignalBatch) else np.atleast_2d(np.asarray(X, dtype=float))
    return "".join(",".join(fmt_float(v) for v in row) + "\n" for row in X)


def write_signals_csv(path, X) -> None:
    atomic_write(path, format_signals_csv(X))


# ---------------------------------------------------------------------------
# filter specs


def _number(text):
    try:
        v = float(text)
    except ValueError:
        return text
    return v


def parse_filterspec(text: str) -> dict:
    """Parse ``kind[:key=val,...]`` into a filter config.

    A value may itself be a comma-separated list, e.g.
    ``poly:coeffs=1,0.5``; a token without ``=`` continues the previous key.
    """
    text = text.strip()
    if not text:
        raise ParseError("empty filter spec")
    kind, _, rest = text.partition(":")
    params: dict = {}
    key = None
    for tok in filter(None, (t.strip() for t in rest.split(","))):
        if "=" in tok:
            key, _, val = tok.partition("=")
            key = key.strip()
            params[key] = [_number(val.strip())]
        elif key is None:
            raise ParseError(f"expected key=value in filter spec {text!r}")
        else:
            params[key].append(_number(tok))
    config: dict = {"kind": kind.strip().lower()}
    for k, v in params.items():
        if k == "normalize":
            config["normalize"] = str(v[0]).lower() in ("1", "1.0", "true", "yes")
        elif k in ("coeffs", "values"):
            config.setdefault("params", {})[k] = [float(x) for x in v]
        else:
            config.setdefault("params", {})[k] = v[0] if len(v) == 1 else v
    config.setdefault("params", {})
    return config


def format_filterspec(config: dict) -> str:
    parts = []
    for k, v in config.get("params", {}).items():
        if isinstance(v, (list, tuple)):
            parts.append(f"{k}=" + ",".join(fmt_float(x) for x in v))
        else:
            parts.append(f"{k}={fmt_float(v) if isinstance(v, float) else v}")
    if "normalize" in config:
        parts.append(f"normalize={'true' if config['normalize'] else 'false'}")
    return config["kind"] + (":" + ",".join(parts) if parts else "")


# ---------------------------------------------------------------------------
# JSON and tables


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt_float(x)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def write_json(path, obj) -> None:
    atomic_write(path, dumps_json(obj))


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def format_roc_csv(curve) -> str:
    lines = ["threshold,pfa,pd"]
    lines += [f"{fmt_float(t)},{fmt_float(a)},{fmt_float(b)}" for t, a, b in curve.points]
    return "\n".join(lines) + "\n"


def format_sweep_csv(rows) -> str:
    lines = ["param,detector,pd"]
    lines += [f"{fmt_float(r['value'])},{r['detector']},{fmt_float(r['pd'])}" for r in rows]
    return "\n".join(lines) + "\n"
