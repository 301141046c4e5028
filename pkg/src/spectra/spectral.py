"""Spectral-radius machinery, all in the natural-log domain.

Norms, radii and bounds are carried as logarithms and ``-inf`` stands for an
exact zero.  Powers of a matrix are never formed in linear scale: the sparse
backend renormalizes after every matvec and the dense backend after every
squaring, accumulating the discarded scale separately.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .digraph import StructureReport, structure_report
from .ensemble import SeedStream, SparseMatrix

__all__ = [
    "DENSE_LIMIT",
    "BoundEntry",
    "DenseLogSquaring",
    "NilpotentInput",
    "NormEstimate",
    "RadiusBounds",
    "SparseMatvecChain",
    "StructuralRadiusUndefined",
    "choose_backend",
    "dense_doubling_log_norms",
    "dense_power_log_norm",
    "estimate_radius",
    "gelfand_upper",
    "kostin_lower",
    "matvec",
    "operator_norm",
    "power_norm",
    "rmatvec",
    "structural_radius",
]

NEG_INF = -math.inf
DENSE_LIMIT = 4096
DENSE_PREFERRED_N = 512
DENSE_PREFERRED_K = 1 << 16


class NilpotentInput(ValueError):
    """Raised when a bound needs ||A^n|| != 0 but A^n vanishes."""


class StructuralRadiusUndefined(ValueError):
    """Raised when a component other than a simple cycle is present."""


@dataclass
class NormEstimate:
    log_value: float
    iterations: int
    converged: bool
    rel_tol_used: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


@dataclass(frozen=True)
class SparseMatvecChain:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("power must be at least 1")


@dataclass(frozen=True)
class DenseLogSquaring:
    k: int

    def __post_init__(self):
        if self.k < 1 or self.k & (self.k - 1):
            raise ValueError(f"DenseLogSquaring needs a power of two, got k={self.k}")

    @property
    def squarings(self) -> int:
        return self.k.bit_length() - 1


def _is_pow2(k: int) -> bool:
    return k >= 1 and not k & (k - 1)


def choose_backend(n: int, k: int):
    if _is_pow2(k) and n <= DENSE_LIMIT and (n <= DENSE_PREFERRED_N or k > DENSE_PREFERRED_K):
        return DenseLogSquaring(k)
    return SparseMatvecChain(k)


# --------------------------------------------------------------------------- kernels


def matvec(a: SparseMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.n,):
        raise ValueError(f"dimension mismatch: matrix is {a.n}x{a.n}, vector has shape {x.shape}")
    return a.csr @ x


def rmatvec(a: SparseMatrix, x) -> np.ndarray:
    """Transpose product A^T x."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.n,):
        raise ValueError(f"dimension mismatch: matrix is {a.n}x{a.n}, vector has shape {x.shape}")
    return a.csr_transpose @ x


def _as_scaled(result):
    if isinstance(result, tuple):
        return result
    return result, 0.0


def operator_norm(
    apply: Callable,
    adjoint: Callable,
    n: int,
    rel_tol: float = 1e-10,
    max_iter: int = 2000,
    seed: int = 0,
) -> NormEstimate:
    """Spectral norm of a black-box operator by power iteration on adjoint(apply(.)).

    ``apply`` and ``adjoint`` map a vector either to a vector or to a pair
    ``(vector, log_scale)`` meaning ``vector * exp(log_scale)``.  The returned
    estimate is ||A x|| for a unit vector x, hence never above the true norm.
    """
    if n < 1:
        raise ValueError("operator dimension must be positive")
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    gen = SeedStream(seed, 0).generator()
    r = gen.standard_normal(n)
    x = np.full(n, 1.0 / math.sqrt(n)) + 1e-3 * r / np.linalg.norm(r)
    x /= np.linalg.norm(x)
    prev = None
    est = NEG_INF
    for it in range(1, max_iter + 1):
        y, ly = _as_scaled(apply(x))
        ny = float(np.linalg.norm(y))
        if ny == 0.0 or ly == NEG_INF:
            return NormEstimate(NEG_INF, it, True, rel_tol)
        est = ly + math.log(ny)
        if prev is not None and abs(est - prev) <= rel_tol:
            return NormEstimate(est, it, True, rel_tol)
        prev = est
        z, _ = _as_scaled(adjoint(y / ny))
        nz = float(np.linalg.norm(z))
        if nz == 0.0:
            return NormEstimate(est, it, True, rel_tol)
        x = z / nz
    return NormEstimate(est, max_iter, False, rel_tol)


def _chain(step: Callable, k: int):
    def run(x):
        log_scale = 0.0
        for _ in range(k):
            x = step(x)
            s = float(np.linalg.norm(x))
            if s == 0.0:
                return np.zeros_like(x), NEG_INF
            x = x / s
            log_scale += math.log(s)
        return x, log_scale

    return run


def _renormalize(m: np.ndarray) -> float:
    s = float(np.max(np.abs(m))) if m.size else 0.0
    if s == 0.0:
        return NEG_INF
    m /= s
    return math.log(s)


def _log_norm2(m: np.ndarray) -> float:
    s = float(np.linalg.norm(m, 2))
    return math.log(s) if s > 0 else NEG_INF


def dense_doubling_log_norms(a, squarings: int) -> list[float]:
    """log ||A^(2^j)|| for j = 0..squarings by repeated max-abs-scaled squaring."""
    m = np.array(a.to_dense() if isinstance(a, SparseMatrix) else a, dtype=np.float64)
    log_scale = _renormalize(m)
    out = []
    for j in range(squarings + 1):
        if j:
            if log_scale == NEG_INF:
                out.append(NEG_INF)
                continue
            m = m @ m
            step = _renormalize(m)
            log_scale = NEG_INF if step == NEG_INF else 2.0 * log_scale + step
        out.append(NEG_INF if log_scale == NEG_INF else log_scale + _log_norm2(m))
    return out


def dense_power_log_norm(a, k: int) -> float:
    """log ||A^k|| for any k >= 1 via binary decomposition of k."""
    if k < 1:
        raise ValueError("power must be at least 1")
    base = np.array(a.to_dense() if isinstance(a, SparseMatrix) else a, dtype=np.float64)
    lb = _renormalize(base)
    if lb == NEG_INF:
        return NEG_INF
    acc = None
    la = 0.0
    while True:
        if k & 1:
            if acc is None:
                acc, la = base.copy(), lb
            else:
                acc = acc @ base
                step = _renormalize(acc)
                if step == NEG_INF:
                    return NEG_INF
                la += lb + step
        k >>= 1
        if not k:
            break
        base = base @ base
        step = _renormalize(base)
        if step == NEG_INF:
            return NEG_INF
        lb = 2.0 * lb + step
    return la + _log_norm2(acc)


def power_norm(
    a: SparseMatrix,
    k: int,
    backend=None,
    rel_tol: float = 1e-10,
    max_iter: int = 2000,
    seed: int = 0,
) -> NormEstimate:
    """Estimate ||A^k||."""
    backend = choose_backend(a.n, k) if backend is None else backend
    if backend.k != k:
        raise ValueError(f"backend is set up for k={backend.k}, asked for k={k}")
    if isinstance(backend, DenseLogSquaring):
        if a.n > DENSE_LIMIT:
            raise ValueError(f"dense powering limited to n <= {DENSE_LIMIT}, got n={a.n}")
        val = dense_doubling_log_norms(a, backend.squarings)[-1]
        return NormEstimate(val, backend.squarings, True, 0.0)
    if isinstance(backend, SparseMatvecChain):
        return operator_norm(
            _chain(a.csr.__matmul__, k),
            _chain(a.csr_transpose.__matmul__, k),
            a.n,
            rel_tol=rel_tol,
            max_iter=max_iter,
            seed=seed,
        )
    raise TypeError(f"unknown backend {backend!r}")


def gelfand_upper(a: SparseMatrix, k: int, backend=None, **kwargs) -> float:
    """log of ||A^k||^(1/k), an upper bound for log rho(A)."""
    return power_norm(a, k, backend, **kwargs).log_value / k


def kostin_lower(log_norm_a: float, log_norm_an: float, log_uk: float, n: int, k) -> float:
    """Log of the explicit finite-k lower bound on rho(A).

    rho(A) >= C_n^(-s/k) * (||A||^n / ||A^n||)^(-v/k) * ||A^k||^(1/k) with
    C_n = n^(3n/2), s = (n-1)^3/(n-2)^2 * k^e, v = (n-1)^2/(n-2) * k^e and
    e = log(n-1)/log(n).
    """
    if n <= 2:
        raise ValueError("Kostin bound requires n > 2")
    if log_norm_an == NEG_INF:
        raise NilpotentInput("||A^n|| = 0: the matrix is nilpotent, use the exact path")
    if k < 1:
        raise ValueError("power must be at least 1")
    e = math.log(n - 1) / math.log(n)
    # k^e / k, kept in log form so k may be astronomically large
    shrink = math.exp((e - 1.0) * math.log(k))
    sigma_over_k = (n - 1) ** 3 / (n - 2) ** 2 * shrink
    nu_over_k = (n - 1) ** 2 / (n - 2) * shrink
    log_cn = 1.5 * n * math.log(n)
    ratio = n * log_norm_a - log_norm_an
    return -sigma_over_k * log_cn - nu_over_k * ratio + log_uk


def structural_radius(a: SparseMatrix, report: StructureReport | None = None) -> float:
    """Exact log rho(A) when every nontrivial component is a simple cycle.

    The matrix is block triangular in component order, so the spectrum is the
    union over cycles C of the |C|-th roots of the product of weights on C.
    """
    report = structure_report(a) if report is None else report
    if not report.cycles_only:
        raise StructuralRadiusUndefined(
            "structural radius undefined: a component is neither trivial nor a simple cycle"
        )
    if report.acyclic:
        return NEG_INF
    best = NEG_INF
    with np.errstate(divide="ignore"):
        for cyc in report.cycle_inventory:
            verts = cyc.vertices
            w = [a.entry(verts[i], verts[(i + 1) % cyc.length]) for i in range(cyc.length)]
            best = max(best, float(np.sum(np.log(np.abs(w)))) / cyc.length)
        for v in report.self_loops:
            best = max(best, float(np.log(abs(a.entry(v, v)))))
    return best


# --------------------------------------------------------------------------- dispatcher


@dataclass
class BoundEntry:
    k: int
    log_upper: float
    log_lower: float | None = None
    converged: bool = True


@dataclass
class RadiusBounds:
    method: str
    entries: list[BoundEntry] = field(default_factory=list)
    exact_log_radius: float | None = None
    log_norm: float | None = None
    log_norm_n: float | None = None

    @property
    def final_log_upper(self) -> float | None:
        return self.entries[-1].log_upper if self.entries else None

    @property
    def final_log_lower(self) -> float | None:
        return self.entries[-1].log_lower if self.entries else None

    @property
    def point_log_radius(self) -> float | None:
        """Exact log radius when known, otherwise the tightest upper bound."""
        if self.exact_log_radius is not None:
            return self.exact_log_radius
        return self.final_log_upper


def _upper_entries(a: SparseMatrix, ks: Sequence[int], rel_tol, max_iter, seed) -> list[BoundEntry]:
    entries = {}
    dense_ks = [k for k in ks if isinstance(choose_backend(a.n, k), DenseLogSquaring)]
    if dense_ks:
        logs = dense_doubling_log_norms(a, max(dense_ks).bit_length() - 1)
        for k in dense_ks:
            entries[k] = BoundEntry(k, logs[k.bit_length() - 1] / k)
    for k in ks:
        if k not in entries:
            est = power_norm(a, k, SparseMatvecChain(k), rel_tol, max_iter, seed)
            entries[k] = BoundEntry(k, est.log_value / k, converged=est.converged)
    return [entries[k] for k in ks]


def _norm_logs(a: SparseMatrix, rel_tol, max_iter, seed) -> tuple[float, float]:
    if a.n <= DENSE_LIMIT:
        dense = a.to_dense()
        return _log_norm2(dense), dense_power_log_norm(dense, a.n)
    log_a = power_norm(a, 1, SparseMatvecChain(1), rel_tol, max_iter, seed).log_value
    log_an = power_norm(a, a.n, SparseMatvecChain(a.n), rel_tol, max_iter, seed).log_value
    return log_a, log_an


def estimate_radius(
    a: SparseMatrix,
    k_schedule: Sequence[int] = tuple(1 << j for j in range(1, 21)),
    tol: float = 1e-10,
    *,
    report: StructureReport | None = None,
    cross_check: bool = False,
    lower: bool | None = None,
    max_iter: int = 2000,
    seed: int = 0,
) -> RadiusBounds:
    """Radius of ``a`` by structure first, bounds second.

    Acyclic pattern: exactly 0.  Only simple cycles: exact, from the cycle
    weights, with bounds added only if ``cross_check``.  Anything else: upper
    bounds ||A^k||^(1/k) for each k, and explicit lower bounds when ``lower``
    (default: when n is in 3..512, where they are cheap).
    """
    report = structure_report(a) if report is None else report
    ks = sorted(set(int(k) for k in k_schedule))
    if not ks or ks[0] < 1:
        raise ValueError("k_schedule must hold positive integers")
    if report.acyclic:
        return RadiusBounds("ExactAcyclic", exact_log_radius=NEG_INF)
    if report.cycles_only:
        out = RadiusBounds("ExactCycles", exact_log_radius=structural_radius(a, report))
        if not cross_check:
            return out
    else:
        out = RadiusBounds("Sandwich")
    if lower is None:
        lower = 2 < a.n <= DENSE_PREFERRED_N
    elif lower and a.n <= 2:
        raise ValueError("Kostin bound requires n > 2")
    out.entries = _upper_entries(a, ks, tol, max_iter, seed)
    if lower:
        log_a, log_an = _norm_logs(a, tol, max_iter, seed)
        if log_an == NEG_INF:
            raise RuntimeError("||A^n|| vanished on a pattern that has a cycle")
        out.log_norm, out.log_norm_n = log_a, log_an
        for e in out.entries:
            e.log_lower = kostin_lower(log_a, log_an, e.log_upper, a.n, e.k)
    return out
