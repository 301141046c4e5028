"""Matrix Market coordinate files, "real general" subset only."""
from __future__ import annotations

import io
import json
import math

import numpy as np

from .ensemble import SparseMatrix

HEADER = "%%MatrixMarket matrix coordinate real general"


class MatrixMarketError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def dumps(a: SparseMatrix, manifest: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    buf.write("% " + json.dumps(manifest or {}, sort_keys=True, separators=(",", ":")) + "\n")
    buf.write(f"{a.n} {a.n} {a.nnz}\n")
    rows = (a.row_indices + 1).tolist()
    cols = (a.col_indices + 1).tolist()
    for i, j, v in zip(rows, cols, a.values.tolist()):
        # repr of a float is the shortest string that round-trips
        buf.write(f"{i} {j} {v!r}\n")
    return buf.getvalue()


def write(path, a: SparseMatrix, manifest: dict | None = None) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps(a, manifest))


def loads(text: str) -> tuple[SparseMatrix, dict | None]:
    """Parse a file body; returns the matrix and the manifest comment if present."""
    lines = text.splitlines()
    if not lines or lines[0].strip().lower() != HEADER.lower():
        got = lines[0].strip() if lines else "<empty file>"
        raise MatrixMarketError(1, f"expected header {HEADER!r}, got {got!r}")
    manifest = None
    lineno = 1
    size = None
    for lineno in range(2, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line:
            continue
        if line.startswith("%"):
            if manifest is None:
                try:
                    parsed = json.loads(line[1:])
                    manifest = parsed if isinstance(parsed, dict) else None
                except json.JSONDecodeError:
                    pass
            continue
        size = line.split()
        break
    if size is None:
        raise MatrixMarketError(lineno, "missing size line")
    try:
        nrows, ncols, nnz = (int(t) for t in size)
    except ValueError:
        raise MatrixMarketError(lineno, f"size line must be three integers, got {' '.join(size)!r}") from None
    if nrows != ncols or nrows < 1 or nnz < 0:
        raise MatrixMarketError(lineno, f"need a square matrix with n >= 1, got {nrows}x{ncols}")
    n = nrows
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    seen: dict[tuple[int, int], int] = {}
    count = 0
    for lineno in range(lineno + 1, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line or line.startswith("%"):
            continue
        if count == nnz:
            raise MatrixMarketError(lineno, f"more than the declared {nnz} entries")
        parts = line.split()
        if len(parts) != 3:
            raise MatrixMarketError(lineno, f"expected 'i j value', got {line!r}")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MatrixMarketError(lineno, f"cannot parse entry {line!r}") from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise MatrixMarketError(lineno, f"index ({i}, {j}) out of range for n={n}")
        if not math.isfinite(v):
            raise MatrixMarketError(lineno, f"non-finite value {parts[2]!r}")
        if (i, j) in seen:
            raise MatrixMarketError(lineno, f"duplicate entry ({i}, {j}), first seen on line {seen[i, j]}")
        seen[i, j] = lineno
        rows[count], cols[count], vals[count] = i - 1, j - 1, v
        count += 1
    if count != nnz:
        raise MatrixMarketError(len(lines), f"declared {nnz} entries, found {count}")
    return SparseMatrix.from_coo(n, rows, cols, vals), manifest


def read(path) -> tuple[SparseMatrix, dict | None]:
    with open(path) as fh:
        return loads(fh.read())
