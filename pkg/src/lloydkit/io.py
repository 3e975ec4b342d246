"""Plain-text formats for datasets, labels and traces.

All ids and labels on disk are 1-based; in memory they are 0-based, except
crowd answers, which stay 1..k with 0 reserved for missing entries.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

TRACE_HEADER = ["preset", "replicate", "iteration", "A", "G", "Lambda", "objective", "elapsed_ms"]


class FormatError(ValueError):
    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.line = line


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for number, raw in enumerate(fh, start=1):
            text = raw.strip()
            if text and not text.startswith("#"):
                yield number, text


def _int(path, line, token, what):
    try:
        return int(token)
    except ValueError:
        raise FormatError(path, line, f"{what} {token!r} is not an integer") from None


def format_float(x: float) -> str:
    return repr(float(x))


def save_dense_csv(path, matrix) -> None:
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{m.shape[0]},{m.shape[1]}\n")
        for row in m:
            fh.write(",".join(format_float(v) for v in row) + "\n")


def load_dense_csv(path) -> np.ndarray:
    """First line ``n,d`` then n rows of d comma-separated floats."""
    lines = list(_lines(path))
    if not lines:
        raise FormatError(path, None, "empty file")
    line, head = lines[0]
    parts = head.split(",")
    if len(parts) != 2:
        raise FormatError(path, line, "header must be 'n,d'")
    n, d = (_int(path, line, p, "dimension") for p in parts)
    if n < 1 or d < 1:
        raise FormatError(path, line, "dimensions must be positive")
    if len(lines) - 1 != n:
        raise FormatError(path, None, f"expected {n} rows, found {len(lines) - 1}")
    out = np.empty((n, d))
    for i, (line, text) in enumerate(lines[1:]):
        cells = text.split(",")
        if len(cells) != d:
            raise FormatError(path, line, f"expected {d} values, found {len(cells)}")
        try:
            out[i] = [float(c) for c in cells]
        except ValueError:
            raise FormatError(path, line, "non-numeric value") from None
        if not np.all(np.isfinite(out[i])):
            raise FormatError(path, line, "non-finite value")
    return out


def save_labels(path, labels) -> None:
    """Write 0-based labels as 1-based integers, one per line."""
    z = np.asarray(labels).astype(np.int64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{v + 1}\n" for v in z)


def load_labels(path, k: int | None = None) -> np.ndarray:
    """Read 1-based labels and return them 0-based."""
    values = []
    for line, text in _lines(path):
        v = _int(path, line, text, "label")
        if v < 1 or (k is not None and v > k):
            raise FormatError(path, line, f"label {v} out of range 1..{k if k is not None else 'k'}")
        values.append(v - 1)
    if not values:
        raise FormatError(path, None, "no labels")
    return np.array(values, dtype=np.int64)


def save_sign_labels(path, labels) -> None:
    """+1 is written as 1 and -1 as 2."""
    z = np.asarray(labels)
    save_labels(path, (1 - z) // 2)


def load_edge_list(path, n: int | None = None) -> np.ndarray:
    """Undirected graph from whitespace-separated 1-based ``u v`` pairs."""
    edges = []
    seen = set()
    for line, text in _lines(path):
        parts = text.split()
        if len(parts) != 2:
            raise FormatError(path, line, "expected two node ids")
        u, v = (_int(path, line, p, "node id") for p in parts)
        if u < 1 or v < 1:
            raise FormatError(path, line, "node ids are 1-based")
        if u == v:
            raise FormatError(path, line, f"self-loop at node {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise FormatError(path, line, f"duplicate edge {u} {v}")
        seen.add(key)
        edges.append(key)
    top = max((v for _, v in edges), default=0)
    if n is None:
        n = top
    elif top > n:
        raise FormatError(path, None, f"node id {top} exceeds n={n}")
    if n < 1:
        raise FormatError(path, None, "graph has no nodes")
    adj = np.zeros((n, n), dtype=np.int8)
    if edges:
        e = np.array(edges) - 1
        adj[e[:, 0], e[:, 1]] = 1
        adj[e[:, 1], e[:, 0]] = 1
    return adj


def save_edge_list(path, adjacency) -> None:
    a = np.asarray(adjacency)
    rows, cols = np.nonzero(np.triu(a, k=1))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{u + 1} {v + 1}\n" for u, v in zip(rows, cols))


def load_crowd_csv(path, m: int | None = None, n: int | None = None, k: int | None = None) -> np.ndarray:
    """Answer table from ``worker,item,label`` rows; absent pairs are missing."""
    rows = []
    seen = set()
    lines = list(_lines(path))
    if not lines or [c.strip() for c in lines[0][1].split(",")] != ["worker", "item", "label"]:
        raise FormatError(path, lines[0][0] if lines else None, "header must be 'worker,item,label'")
    for line, text in lines[1:]:
        cells = text.split(",")
        if len(cells) != 3:
            raise FormatError(path, line, "expected worker,item,label")
        w, j, h = (_int(path, line, c.strip(), name) for c, name in zip(cells, ("worker", "item", "label")))
        if w < 1 or j < 1:
            raise FormatError(path, line, "worker and item ids are 1-based")
        if h < 1:
            raise FormatError(path, line, "labels are 1-based; omit the row for a missing answer")
        if k is not None and h > k:
            raise FormatError(path, line, f"label {h} exceeds k={k}")
        if (w, j) in seen:
            raise FormatError(path, line, f"duplicate answer for worker {w}, item {j}")
        seen.add((w, j))
        rows.append((w, j, h))
    if not rows:
        raise FormatError(path, None, "no answers")
    arr = np.array(rows)
    m = m or int(arr[:, 0].max())
    n = n or int(arr[:, 1].max())
    if arr[:, 0].max() > m or arr[:, 1].max() > n:
        raise FormatError(path, None, "ids exceed the declared table size")
    table = np.zeros((m, n), dtype=np.int64)
    table[arr[:, 0] - 1, arr[:, 1] - 1] = arr[:, 2]
    return table


def save_crowd_csv(path, table) -> None:
    x = np.asarray(table)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("worker,item,label\n")
        for i, j in zip(*np.nonzero(x)):
            fh.write(f"{i + 1},{j + 1},{x[i, j]}\n")


def save_confusion_csv(path, pi) -> None:
    pi = np.asarray(pi)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("worker,truth,label,prob\n")
        for (i, g, h), p in np.ndenumerate(pi):
            fh.write(f"{i + 1},{g + 1},{h + 1},{format_float(p)}\n")


def _cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else format_float(x)
    return str(x)


def trace_rows(preset: str, replicate: int, trace, timing: bool = True):
    for e in trace.entries:
        m = e.metrics
        yield [
            preset,
            replicate,
            e.iteration,
            m.misclustering,
            m.groupwise,
            m.center_error,
            m.objective,
            round(e.elapsed_ms, 3) if timing else 0.0,
        ]


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(x) for x in row])


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
