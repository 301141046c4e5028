"""Seeded generation of sparse random matrices Z = X * Y.

X is a Bernoulli(p) mask on ordered pairs (i, j) and Y holds i.i.d. weights
that are never exactly zero.  Everything is a pure function of
``(params, seed)``: the mask comes from stream 0 and the weights from
stream 1 of the seed, so swapping the weight law never moves the pattern.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "GENERATOR_NAME",
    "MASK_STREAM",
    "WEIGHT_STREAM",
    "Constant",
    "EnsembleParams",
    "Rademacher",
    "SeedStream",
    "SparseMatrix",
    "StandardNormal",
    "Weibull",
    "WeightSpec",
    "derive_trial_seed",
    "parse_weight_spec",
    "sample_mask",
    "sample_matrix",
    "sample_weight",
    "sample_weights",
    "splitmix64_finalize",
    "weibull_normalizer",
]

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15

GENERATOR_NAME = f"numpy.PCG64/SeedSequence (numpy {np.__version__})"
MASK_STREAM = 0
WEIGHT_STREAM = 1


def splitmix64_finalize(z: int) -> int:
    z &= _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Per-trial 64-bit seed; depends only on the two integers, never on scheduling."""
    mixed = (master_seed & _MASK64) ^ ((trial_index * _GOLDEN_GAMMA) & _MASK64)
    return splitmix64_finalize(mixed)


@dataclass(frozen=True)
class SeedStream:
    """Independent random stream keyed by ``(master_seed, stream_index)``."""

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.master_seed & _MASK64,
            spawn_key=(self.stream_index & _MASK64,),
        )
        return np.random.Generator(np.random.PCG64(seq))


# --------------------------------------------------------------------------- weights


@dataclass(frozen=True)
class Weibull:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"Weibull shape must be positive, got {self.alpha}")

    def describe(self) -> dict:
        return {"kind": "weibull", "alpha": self.alpha}


@dataclass(frozen=True)
class StandardNormal:
    def describe(self) -> dict:
        return {"kind": "normal"}


@dataclass(frozen=True)
class Rademacher:
    def describe(self) -> dict:
        return {"kind": "rademacher"}


@dataclass(frozen=True)
class Constant:
    c: float

    def __post_init__(self):
        if self.c == 0 or not math.isfinite(self.c):
            raise ValueError(f"Constant weight must be finite and nonzero, got {self.c}")

    def describe(self) -> dict:
        return {"kind": "constant", "c": self.c}


WeightSpec = Weibull | StandardNormal | Rademacher | Constant


def parse_weight_spec(obj) -> WeightSpec:
    """Build a WeightSpec from ``"normal"``, ``"weibull:2"``, ``{"kind": ...}`` etc."""
    if isinstance(obj, (Weibull, StandardNormal, Rademacher, Constant)):
        return obj
    if isinstance(obj, str):
        kind, _, arg = obj.partition(":")
        obj = {"kind": kind}
        if arg:
            obj["alpha" if kind == "weibull" else "c"] = float(arg)
    kind = obj.get("kind")
    if kind == "weibull":
        return Weibull(float(obj["alpha"]))
    if kind == "normal":
        return StandardNormal()
    if kind == "rademacher":
        return Rademacher()
    if kind == "constant":
        return Constant(float(obj["c"]))
    raise ValueError(f"unknown weight distribution {kind!r}")


def weibull_normalizer(alpha: float) -> float:
    """Second moment Gamma(1 + 2/alpha) of an unnormalized Weibull(alpha) variable."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return math.gamma(1.0 + 2.0 / alpha)


def _open_uniform(gen: np.random.Generator, size: int) -> np.ndarray:
    # strictly inside (0, 1) so that -log(U) and Box-Muller radii are never 0
    return (gen.integers(0, 1 << 53, size=size, dtype=np.int64) + 0.5) * 2.0**-53


def _signs(gen: np.random.Generator, size: int) -> np.ndarray:
    return np.where(gen.integers(0, 2, size=size, dtype=np.int8) == 1, 1.0, -1.0)


def weibull_from_uniform(alpha: float, u, sign=1.0):
    return sign * (-np.log(u)) ** (1.0 / alpha) / math.sqrt(weibull_normalizer(alpha))


def sample_weights(spec: WeightSpec, gen: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` weights in order from ``gen``."""
    if isinstance(spec, Weibull):
        u = _open_uniform(gen, size)
        return weibull_from_uniform(spec.alpha, u, _signs(gen, size))
    if isinstance(spec, StandardNormal):
        # Box-Muller, both outputs of each pair used
        half = (size + 1) // 2
        u1 = _open_uniform(gen, half)
        u2 = _open_uniform(gen, half)
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * half)
        out[0::2] = r * np.cos(2.0 * np.pi * u2)
        out[1::2] = r * np.sin(2.0 * np.pi * u2)
        return out[:size]
    if isinstance(spec, Rademacher):
        return _signs(gen, size)
    if isinstance(spec, Constant):
        return np.full(size, float(spec.c))
    raise TypeError(f"not a weight spec: {spec!r}")


def sample_weight(spec: WeightSpec, gen: np.random.Generator) -> float:
    return float(sample_weights(spec, gen, 1)[0])


# --------------------------------------------------------------------------- matrices


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Square CSR matrix.  Entry (i, j) != 0 means the edge i -> j."""

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ro = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        ci = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        va = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "row_offsets", ro)
        object.__setattr__(self, "col_indices", ci)
        object.__setattr__(self, "values", va)
        if self.n < 1:
            raise ValueError("matrix dimension must be at least 1")
        if ro.shape != (self.n + 1,) or ro[0] != 0 or ro[-1] != ci.size:
            raise ValueError("row_offsets must have length n+1, start at 0 and end at nnz")
        if ci.shape != va.shape:
            raise ValueError("col_indices and values must have equal length")
        if np.any(np.diff(ro) < 0):
            raise ValueError("row_offsets must be nondecreasing")
        if ci.size:
            if ci.min() < 0 or ci.max() >= self.n:
                raise ValueError("column index out of range")
            # strictly increasing inside each row: a drop is only allowed at a row start
            drops = np.flatnonzero(np.diff(ci) <= 0) + 1
            if not np.all(np.isin(drops, ro[1:-1])):
                raise ValueError("column indices must be strictly increasing within rows")
        if not np.all(np.isfinite(va)):
            raise ValueError("matrix values must be finite")

    @property
    def nnz(self) -> int:
        return int(self.col_indices.size)

    @cached_property
    def row_indices(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.row_offsets))

    @cached_property
    def csr(self):
        import scipy.sparse as sp

        return sp.csr_matrix(
            (self.values, self.col_indices, self.row_offsets), shape=(self.n, self.n)
        )

    @cached_property
    def csr_transpose(self):
        return self.csr.T.tocsr()

    def has_self_loops(self) -> bool:
        return bool(np.any(self.row_indices == self.col_indices))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self.row_indices, self.col_indices] = self.values
        return out

    def entry(self, i: int, j: int) -> float:
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        pos = lo + np.searchsorted(self.col_indices[lo:hi], j)
        if pos < hi and self.col_indices[pos] == j:
            return float(self.values[pos])
        return 0.0

    def scaled(self, c: float) -> "SparseMatrix":
        return SparseMatrix(self.n, self.row_offsets, self.col_indices, self.values * c)

    def same_as(self, other: "SparseMatrix") -> bool:
        return (
            self.n == other.n
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )

    @classmethod
    def from_coo(cls, n: int, rows, cols, values=None) -> "SparseMatrix":
        """Build from coordinate triplets; duplicates are rejected."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.ones(rows.size) if values is None else np.asarray(values, dtype=np.float64)
        if rows.size and (rows.min() < 0 or rows.max() >= n):
            raise ValueError("row index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if rows.size > 1:
            dup = (np.diff(rows) == 0) & (np.diff(cols) == 0)
            if dup.any():
                k = int(np.flatnonzero(dup)[0])
                raise ValueError(f"duplicate entry ({rows[k]}, {cols[k]})")
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=offsets[1:])
        return cls(n, offsets, cols, values)

    @classmethod
    def from_edges(cls, n: int, edges, weights=None) -> "SparseMatrix":
        edges = list(edges)
        rows = [e[0] for e in edges]
        cols = [e[1] for e in edges]
        return cls.from_coo(n, rows, cols, weights)

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        a = np.asarray(a, dtype=np.float64)
        rows, cols = np.nonzero(a)
        return cls.from_coo(a.shape[0], rows, cols, a[rows, cols])


@dataclass(frozen=True)
class EnsembleParams:
    n: int
    edge_prob: float
    weights: WeightSpec = field(default_factory=StandardNormal)
    allow_self_loops: bool = False
    master_seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError(f"edge probability must lie in [0, 1], got {self.edge_prob}")

    @classmethod
    def from_degree(cls, n: int, d: float, **kwargs) -> "EnsembleParams":
        return cls(n=n, edge_prob=d / n, **kwargs)

    @property
    def mean_degree(self) -> float:
        return self.n * self.edge_prob

    @property
    def num_slots(self) -> int:
        return self.n * self.n if self.allow_self_loops else self.n * (self.n - 1)


def _skip_positions(gen: np.random.Generator, total: int, p: float) -> np.ndarray:
    """Sorted Bernoulli(p) hits in [0, total) via geometric jumps."""
    if p <= 0.0 or total == 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    mean = total * p
    batch = int(mean + 6.0 * math.sqrt(mean) + 16)
    chunks = []
    last = -1
    while last < total:
        pos = last + np.cumsum(gen.geometric(p, size=batch))
        chunks.append(pos)
        last = int(pos[-1])
        batch = max(16, batch // 4)
    hits = np.concatenate(chunks)
    return hits[hits < total]


def sample_mask(params: EnsembleParams, seed: int) -> SparseMatrix:
    """Bernoulli(p) pattern with all values 1, rows sorted.

    Expected cost is O(1 + nnz): only the gaps between hits in the linearized
    (row, col) order are drawn.
    """
    n = params.n
    gen = SeedStream(seed, MASK_STREAM).generator()
    pos = _skip_positions(gen, params.num_slots, params.edge_prob)
    if params.allow_self_loops:
        rows, cols = np.divmod(pos, n)
    else:
        rows, cols = np.divmod(pos, n - 1) if n > 1 else (pos, pos)
        cols = cols + (cols >= rows)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=offsets[1:])
    return SparseMatrix(n, offsets, cols, np.ones(pos.size))


def sample_matrix(params: EnsembleParams, seed: int) -> SparseMatrix:
    """Mask from :func:`sample_mask` with independent weights in row-major order."""
    mask = sample_mask(params, seed)
    gen = SeedStream(seed, WEIGHT_STREAM).generator()
    values = sample_weights(params.weights, gen, mask.nnz)
    return SparseMatrix(mask.n, mask.row_offsets, mask.col_indices, values)
