"""File ingestion and emission: feature matrices, labels, tasks, assignments.

Feature matrices travel either as headerless CSV or as ``slkbin``, a fixed
little-endian binary layout (magic ``SLKB``, u32 version, u64 n_points,
u64 n_dims, row-major f64 payload) used for bit-exact round trips.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    DataError,
    IndexOutOfRangeError,
    MalformedHeaderError,
    MissingSupportClassError,
    NonFiniteValueError,
    NonRectangularRowError,
    OverlappingIndicesError,
)

SLKBIN_MAGIC = b"SLKB"
SLKBIN_VERSION = 1


def validate_features(X) -> np.ndarray:
    """Coerce to a valid feature matrix: 2-D float64, finite, non-empty."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DataError(f"feature matrix must be 2-D and non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        row, col = np.argwhere(~np.isfinite(X))[0]
        raise NonFiniteValueError(int(row), int(col))
    return X


@dataclass(frozen=True)
class TaskSpec:
    """One few-shot episode: K-way support pairs plus query indices."""

    k_way: int
    support: tuple  # of (point_index, class_index)
    queries: tuple  # of point_index

    def __post_init__(self):
        object.__setattr__(self, "support", tuple((int(p), int(c)) for p, c in self.support))
        object.__setattr__(self, "queries", tuple(int(q) for q in self.queries))
        if self.k_way < 1:
            raise DataError(f"k_way must be >= 1, got {self.k_way}")
        seen = set()
        for p, c in self.support:
            if not 0 <= c < self.k_way:
                raise DataError(f"support class {c} outside [0, {self.k_way})")
            seen.add(c)
        for c in range(self.k_way):
            if c not in seen:
                raise MissingSupportClassError(c)
        overlap = set(p for p, _ in self.support) & set(self.queries)
        if overlap:
            raise OverlappingIndicesError(overlap)

    @property
    def support_indices(self):
        return tuple(p for p, _ in self.support)

    def validate_indices(self, n_points: int) -> None:
        for idx in (*self.support_indices, *self.queries):
            if not 0 <= idx < n_points:
                raise IndexOutOfRangeError(idx, n_points)


def load_features(path, format="csv", header=False) -> np.ndarray:
    """Read a feature matrix from ``csv`` or ``slkbin``."""
    if format == "csv":
        return _load_csv(path, header=header)
    if format == "slkbin":
        return _load_slkbin(path)
    raise DataError(f"unknown feature format: {format!r}")


def save_features(X, path, format="csv", header=False) -> None:
    X = validate_features(X)
    if format == "csv":
        with open(path, "w", encoding="utf-8") as fh:
            if header:
                fh.write(",".join(f"f{j}" for j in range(X.shape[1])) + "\n")
            for row in X:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    elif format == "slkbin":
        n, d = X.shape
        with open(path, "wb") as fh:
            fh.write(SLKBIN_MAGIC)
            fh.write(struct.pack("<IQQ", SLKBIN_VERSION, n, d))
            fh.write(np.ascontiguousarray(X, dtype="<f8").tobytes())
    else:
        raise DataError(f"unknown feature format: {format!r}")


def _load_csv(path, header=False) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if header:
        if not lines:
            raise MalformedHeaderError(f"{path}: empty file, expected header row")
        lines = lines[1:]
    for r, line in enumerate(lines):
        if not line.strip():
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise NonRectangularRowError(r, width, len(cells))
        parsed = []
        for c, cell in enumerate(cells):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"row {r}, col {c}: cannot parse {cell!r}") from None
            if not np.isfinite(v):
                raise NonFiniteValueError(r, c)
            parsed.append(v)
        rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return validate_features(np.array(rows, dtype=np.float64))


def _load_slkbin(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SLKBIN_MAGIC:
            raise MalformedHeaderError(f"{path}: bad magic {magic!r}")
        head = fh.read(20)
        if len(head) != 20:
            raise MalformedHeaderError(f"{path}: truncated header")
        version, n, d = struct.unpack("<IQQ", head)
        if version != SLKBIN_VERSION:
            raise MalformedHeaderError(f"{path}: unsupported version {version}")
        payload = fh.read()
    expected = n * d * 8
    if len(payload) != expected:
        raise DataError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    X = np.frombuffer(payload, dtype="<f8").reshape(n, d).astype(np.float64)
    return validate_features(X)


def save_assignments(S, path, include_soft=False) -> None:
    """Write hard labels (row argmax, ties to lowest index); optionally soft rows."""
    rows = np.asarray(getattr(S, "rows", S), dtype=np.float64)
    if rows.ndim != 2:
        raise DataError(f"assignment matrix must be 2-D, got shape {rows.shape}")
    k = rows.shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        if include_soft:
            fh.write("label," + ",".join(f"s{j}" for j in range(k)) + "\n")
        else:
            fh.write("label\n")
        if rows.shape[0] == 0:
            return
        hard = np.argmax(rows, axis=1)
        for lab, row in zip(hard, rows):
            if include_soft:
                fh.write(f"{lab}," + ",".join(repr(float(v)) for v in row) + "\n")
            else:
                fh.write(f"{lab}\n")


def load_labels(path) -> np.ndarray:
    """Read one integer label per line."""
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for r, line in enumerate(fh):
            line = line.strip()
            if not line or line == "label":  # tolerate assignment-file header
                continue
            cell = line.split(",")[0]
            try:
                labels.append(int(cell))
            except ValueError:
                raise DataError(f"{path}: line {r}: cannot parse label {cell!r}") from None
    if not labels:
        raise DataError(f"{path}: no labels")
    out = np.array(labels, dtype=np.int64)
    if out.min() < 0:
        raise DataError(f"{path}: negative label {out.min()}")
    return out


def save_labels(labels, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lab in np.asarray(labels, dtype=np.int64):
            fh.write(f"{int(lab)}\n")


def load_task(path, n_points=None) -> TaskSpec:
    """Parse a plain-text task file: kway=K / support=idx:class,... / query=idx,..."""
    fields = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{path}: malformed line {line!r}")
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
    for key in ("kway", "support"):
        if key not in fields:
            raise DataError(f"{path}: missing field {key!r}")
    try:
        k_way = int(fields["kway"])
    except ValueError:
        raise DataError(f"{path}: bad kway {fields['kway']!r}") from None
    support = []
    for item in filter(None, fields["support"].split(",")):
        if ":" not in item:
            raise DataError(f"{path}: bad support entry {item!r}")
        p, _, c = item.partition(":")
        support.append((int(p), int(c)))
    queries = [int(q) for q in filter(None, fields.get("query", "").split(","))]
    task = TaskSpec(k_way=k_way, support=tuple(support), queries=tuple(queries))
    if n_points is not None:
        task.validate_indices(n_points)
    return task


def save_task(task: TaskSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"kway={task.k_way}\n")
        fh.write("support=" + ",".join(f"{p}:{c}" for p, c in task.support) + "\n")
        fh.write("query=" + ",".join(str(q) for q in task.queries) + "\n")
