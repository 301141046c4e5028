"""Seeded Monte Carlo harness.

Every trial draws its randomness from ``derive_trial_seed(master_seed,
trial_index)`` alone, so the records do not depend on how trials are spread
over workers.  With several d (or p) values, trial indices run
consecutively: point ``a`` owns indices ``a*trials .. (a+1)*trials - 1``.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Iterator

import numpy as np

from .digraph import cycle_count_ge, structure_report
from .ensemble import (
    EnsembleParams,
    StandardNormal,
    WeightSpec,
    derive_trial_seed,
    parse_weight_spec,
    sample_matrix,
)
from .spectral import NEG_INF, estimate_radius
from .stats import mean_and_stderr, quantiles, wilson_interval

__all__ = [
    "REGIMES",
    "ExperimentConfig",
    "Tolerances",
    "TrialRecord",
    "acyclic_limit_formula",
    "cycle_free_limit",
    "iter_experiment",
    "run_experiment",
    "run_trial",
    "summarize",
]

REGIMES = ("Critical", "Subcritical", "Supercritical", "PhaseScan")


def acyclic_limit_formula(d: float) -> float:
    """Limiting probability (1 - d) exp(d + d^2/2) that G_d(n, d/n) has no cycle."""
    if not 0.0 < d < 1.0:
        raise ValueError(f"acyclicity limit needs 0 < d < 1, got {d}")
    return (1.0 - d) * math.exp(d + d * d / 2.0)


def cycle_free_limit(d: float, min_length: int = 2) -> float:
    """Limit of P(no directed cycle of length >= min_length) in G_d(n, d/n), 0 < d < 1.

    Cycle counts are asymptotically Poisson with means d^m / m, so the limit is
    exp(-sum_{m >= min_length} d^m / m).  With min_length=3 this equals
    :func:`acyclic_limit_formula`; with min_length=2 it is the limiting
    acyclicity probability when both arcs i->j and j->i may be present.
    """
    if not 0.0 < d < 1.0:
        raise ValueError(f"cycle-free limit needs 0 < d < 1, got {d}")
    head = sum(d**m / m for m in range(1, min_length))
    return math.exp(math.log1p(-d) + head)


@dataclass(frozen=True)
class Tolerances:
    acyclic_abs: float = 0.02
    complex_max: float = 0.02
    q01_min: float = 0.01
    q99_max: float = 100.0
    scaled_low: float = 0.85
    scaled_high: float = 1.35
    subcritical_min_acyclic: float = 0.95


@dataclass(frozen=True)
class ExperimentConfig:
    regime: str
    n: int
    trials: int
    d_values: tuple[float, ...] = ()
    p_rule: str | float | None = None
    weights: WeightSpec = field(default_factory=StandardNormal)
    k_schedule: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64)
    master_seed: int = 0
    threads: int = 1
    output_path: str | None = None
    structure_only: bool = False
    allow_self_loops: bool = False
    norm_rel_tol: float = 1e-10
    norm_max_iter: int = 2000
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        object.__setattr__(self, "d_values", tuple(float(d) for d in self.d_values))
        object.__setattr__(self, "k_schedule", tuple(int(k) for k in self.k_schedule))
        object.__setattr__(self, "weights", parse_weight_spec(self.weights))
        errors = self.problems()
        if errors:
            raise ValueError("invalid experiment config:\n  " + "\n  ".join(errors))

    def problems(self) -> list[str]:
        errs = []
        if self.regime not in REGIMES:
            errs.append(f"regime must be one of {', '.join(REGIMES)}, got {self.regime!r}")
        if self.n < 1:
            errs.append("n must be at least 1")
        if self.trials < 1:
            errs.append("trials must be at least 1")
        if self.threads < 0:
            errs.append("threads must be >= 0 (0 = auto)")
        ks = self.k_schedule
        if not ks:
            errs.append("k_schedule must be nonempty")
        elif any(k < 1 or k & (k - 1) for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
            errs.append("k_schedule must be strictly increasing powers of two")
        if self.regime in ("Critical", "PhaseScan"):
            if not self.d_values:
                errs.append(f"{self.regime} needs d_values")
            if self.regime == "Critical" and any(not 0 < d < 1 for d in self.d_values):
                errs.append("Critical requires every d in (0, 1)")
            if any(d < 0 or d > self.n for d in self.d_values):
                errs.append("d must lie in [0, n]")
        elif self.regime in ("Subcritical", "Supercritical"):
            if self.p_rule is None:
                errs.append(f"{self.regime} needs p_rule")
            elif isinstance(self.p_rule, str):
                if self.p_rule != "OneOverNLogN":
                    errs.append(f"unknown p_rule {self.p_rule!r}")
            elif not 0 <= self.p_rule <= 1:
                errs.append("explicit p must lie in [0, 1]")
        return errs

    @property
    def degree_driven(self) -> bool:
        return self.regime in ("Critical", "PhaseScan")

    def points(self) -> list[float]:
        """One value per experiment point: d for Critical/PhaseScan, p otherwise."""
        if self.degree_driven:
            return list(self.d_values)
        if self.p_rule == "OneOverNLogN":
            return [1.0 / (self.n * math.log(self.n))] if self.n > 1 else [0.0]
        return [float(self.p_rule)]

    def d_and_p(self, d_or_p: float) -> tuple[float, float]:
        if self.degree_driven:
            return d_or_p, d_or_p / self.n
        return self.n * d_or_p, d_or_p

    def params(self, p: float) -> EnsembleParams:
        return EnsembleParams(
            n=self.n,
            edge_prob=p,
            weights=self.weights,
            allow_self_loops=self.allow_self_loops,
            master_seed=self.master_seed,
        )

    def to_dict(self) -> dict:
        out = {
            "regime": self.regime,
            "n": self.n,
            "trials": self.trials,
            "d_values": list(self.d_values),
            "p_rule": self.p_rule if isinstance(self.p_rule, str) or self.p_rule is None
            else {"Explicit": self.p_rule},
            "weights": self.weights.describe(),
            "k_schedule": list(self.k_schedule),
            "master_seed": self.master_seed,
            "threads": self.threads,
            "output_path": self.output_path,
            "structure_only": self.structure_only,
            "allow_self_loops": self.allow_self_loops,
            "norm_rel_tol": self.norm_rel_tol,
            "norm_max_iter": self.norm_max_iter,
            "tolerances": asdict(self.tolerances),
        }
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        """Build from a (schema-valid) JSON object."""
        obj = dict(obj)
        if "seed" in obj:
            obj["master_seed"] = obj.pop("seed")
        rule = obj.get("p_rule")
        if isinstance(rule, dict):
            obj["p_rule"] = float(rule["Explicit"])
        if "tolerances" in obj:
            obj["tolerances"] = Tolerances(**obj["tolerances"])
        if "weights" in obj:
            obj["weights"] = parse_weight_spec(obj["weights"])
        return cls(**obj)


@dataclass
class TrialRecord:
    trial_index: int
    derived_seed: int
    d: float
    p: float
    structure: dict
    radius: dict | None
    wall_time_ms: dict = field(default_factory=dict)

    @property
    def acyclic(self) -> bool:
        return self.structure["acyclic"]

    @property
    def cycles_only(self) -> bool:
        return self.structure["num_complex"] == 0

    @property
    def log_radius(self) -> float | None:
        """Exact log radius if known, else the upper bound at the largest k."""
        if self.radius is None:
            return None
        if self.radius["exact_log_radius"] is not None:
            return self.radius["exact_log_radius"]
        return self.radius["log_upper"]


def run_trial(config: ExperimentConfig, trial_index: int, d_or_p: float) -> TrialRecord:
    d, p = config.d_and_p(d_or_p)
    seed = derive_trial_seed(config.master_seed, trial_index)
    timings = {}
    t0 = time.perf_counter()
    z = sample_matrix(config.params(p), seed)
    t1 = time.perf_counter()
    report = structure_report(z)
    t2 = time.perf_counter()
    timings["sample"] = (t1 - t0) * 1e3
    timings["structure"] = (t2 - t1) * 1e3
    structure = {
        "acyclic": report.acyclic,
        "num_simple_cycles": report.num_simple_cycles,
        "num_complex": report.num_complex,
        "max_cycle_length": report.max_cycle_length,
        "largest_component_size": report.largest_component_size,
        "cycles_ge_3": cycle_count_ge(report, 3),
    }
    radius = None
    if not config.structure_only:
        rb = estimate_radius(
            z,
            config.k_schedule,
            config.norm_rel_tol,
            report=report,
            max_iter=config.norm_max_iter,
            seed=seed,
        )
        uppers = [e.log_upper for e in rb.entries]
        rises = [b - a for a, b in zip(uppers, uppers[1:]) if a != NEG_INF]
        radius = {
            "method": rb.method,
            "exact_log_radius": rb.exact_log_radius,
            "k_max": rb.entries[-1].k if rb.entries else None,
            "log_upper": rb.final_log_upper,
            "log_lower": rb.final_log_lower,
            "upper_max_rise": max(rises) if rises else None,
            "converged": all(e.converged for e in rb.entries),
        }
        timings["radius"] = (time.perf_counter() - t2) * 1e3
    return TrialRecord(trial_index, seed, d, p, structure, radius, timings)


def _run_chunk(args) -> list[TrialRecord]:
    config, jobs = args
    return [run_trial(config, idx, v) for idx, v in jobs]


def _jobs(config: ExperimentConfig) -> list[tuple[int, float]]:
    return [
        (a * config.trials + t, v)
        for a, v in enumerate(config.points())
        for t in range(config.trials)
    ]


def resolve_workers(threads: int) -> int:
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def iter_experiment(config: ExperimentConfig, threads: int | None = None) -> Iterator[TrialRecord]:
    """Yield records in trial_index order, computed by a bounded process pool."""
    workers = resolve_workers(config.threads if threads is None else threads)
    jobs = _jobs(config)
    if workers <= 1 or len(jobs) < 2:
        for idx, v in jobs:
            yield run_trial(config, idx, v)
        return
    size = max(1, min(256, len(jobs) // (workers * 8)))
    chunks = [(config, jobs[i:i + size]) for i in range(0, len(jobs), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for batch in pool.map(_run_chunk, chunks):
            yield from batch


def run_experiment(config: ExperimentConfig, threads: int | None = None):
    records = list(iter_experiment(config, threads))
    return records, summarize(records, config)


def _finite_exp(x):
    return 0.0 if x == NEG_INF else math.exp(x)


def summarize(records, config: ExperimentConfig | None = None) -> dict:
    """Per-point statistics.  Points are keyed by d = n p in first-seen order."""
    records = list(records)
    if not records:
        raise ValueError("cannot summarize an empty record list")
    groups: dict[float, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault(r.d, []).append(r)
    tol = config.tolerances if config is not None else Tolerances()
    supercritical = config is not None and config.regime == "Supercritical"
    out = []
    for d, recs in groups.items():
        trials = len(recs)
        n_acyclic = sum(r.acyclic for r in recs)
        lo, hi = wilson_interval(n_acyclic, trials)
        formula = acyclic_limit_formula(d) if 0 < d < 1 else None
        frac = n_acyclic / trials
        cyc_only = [r.structure["cycles_ge_3"] for r in recs if r.cycles_only]
        n_short = sum(c == 0 for c in cyc_only)
        cmean, cse = mean_and_stderr(cyc_only)
        radii = [_finite_exp(r.log_radius) for r in recs if not r.acyclic and r.log_radius is not None]
        entry = {
            "d": d,
            "p": recs[0].p,
            "trials": trials,
            "acyclic_count": n_acyclic,
            "acyclic_fraction": frac,
            "wilson_95_interval": [lo, hi],
            "formula_value": formula,
            "abs_gap": abs(frac - formula) if formula is not None else None,
            "no_long_cycle_fraction": n_short / trials,
            "no_long_cycle_wilson_95": list(wilson_interval(n_short, trials)),
            "two_cycle_model_limit": cycle_free_limit(d, 2) if 0 < d < 1 else None,
            "complex_fraction": sum(not r.cycles_only for r in recs) / trials,
            "cycle_only_trials": len(cyc_only),
            "cycle_count_mean": cmean,
            "cycle_count_stderr": cse,
            "cycle_count_bound": d**3 / (1 - d) if 0 < d < 1 else None,
            "largest_component_median": float(
                np.median([r.structure["largest_component_size"] for r in recs])
            ),
            "radius_quantiles": quantiles(radii),
            "scaled_radius_quantiles": None,
        }
        if supercritical and radii:
            entry["scaled_radius_quantiles"] = quantiles(np.asarray(radii) / math.sqrt(d))
        entry["checks"] = _checks(entry, config, tol, recs)
        out.append(entry)
    return {"points": out, "passed": all(all(e["checks"].values()) for e in out)}


def _checks(entry, config, tol: Tolerances, recs) -> dict[str, bool]:
    regime = config.regime if config is not None else None
    checks = {}
    if entry["formula_value"] is not None and regime == "Critical":
        checks["acyclic_fraction_near_limit"] = entry["abs_gap"] <= tol.acyclic_abs
        checks["complex_fraction_small"] = entry["complex_fraction"] <= tol.complex_max
        if entry["cycle_count_mean"] is not None:
            checks["cycle_count_moment"] = (
                entry["cycle_count_mean"] <= entry["cycle_count_bound"] + 3 * entry["cycle_count_stderr"]
            )
    q = entry["radius_quantiles"]
    if q is not None and regime in ("Critical",):
        checks["radius_q01_band"] = q["q01"] >= tol.q01_min
        checks["radius_q99_band"] = q["q99"] <= tol.q99_max
    if regime == "Subcritical":
        checks["mostly_acyclic"] = entry["acyclic_fraction"] >= tol.subcritical_min_acyclic
    if entry["scaled_radius_quantiles"] is not None:
        med = entry["scaled_radius_quantiles"]["q50"]
        checks["scaled_median_band"] = tol.scaled_low <= med <= tol.scaled_high
    if any(r.radius is not None for r in recs):
        checks["acyclic_iff_zero_radius"] = all(
            r.acyclic == (r.radius["method"] == "ExactAcyclic") == (r.log_radius == NEG_INF)
            for r in recs
        )
    return checks
