"""Monte Carlo benchmarking of the TDC estimation methods.

Runs N independent replications of (simulate, rank-transform, estimate with
each method) and aggregates bias, standard deviation, and RMSE against the
generator's true tail coefficient.  Replication r draws its generator from
the substream seeded by (seed, r), so results are byte-identical no matter
how many workers execute the loop.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .copulas import Copula, DomainError
from .empirical import pseudo_sample
from .selection import METHOD_ALIASES, METHODS, estimate_method


@dataclass(frozen=True)
class ExperimentSpec:
    """One Monte Carlo study: a generator, sizes, methods, and a seed."""

    generator: Copula
    n: int
    seed: int
    reps: int = 100
    tail: str = "upper"
    methods: tuple[str, ...] = ("fixed1pct", "fixed2pct", "mle", "plateau", "plugin", "twostep")
    family: str | None = None  # plug-in family; defaults by tail
    label: str = ""

    def __post_init__(self):
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        if self.n < 50:
            raise DomainError("n must be >= 50")
        for m in self.methods:
            resolved = METHOD_ALIASES.get(str(m), str(m))
            if resolved not in METHODS:
                raise DomainError(f"unknown method {m!r}")


@dataclass(frozen=True)
class MethodStats:
    """Replication aggregates; rmse^2 = bias^2 + sd^2 (N-1)/N up to round-off."""

    bias: float
    sd: float
    rmse: float
    n_ok: int
    n_failed: int


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    lambda_true: float
    stats: dict[str, MethodStats]
    estimates: dict[str, np.ndarray] = field(repr=False, default_factory=dict)
    failures: dict[str, int] = field(default_factory=dict)


def rmse(estimates, truth: float) -> float:
    """Root mean squared deviation of estimates from the truth."""
    est = np.asarray(estimates, dtype=float)
    if est.size < 1:
        raise DomainError("need at least one estimate")
    return float(np.sqrt(np.mean((est - truth) ** 2)))


def _run_replication(spec: ExperimentSpec, rep: int) -> dict[str, float | None]:
    rng = np.random.default_rng([spec.seed, rep])
    x, y = spec.generator.sample(spec.n, rng)
    sample = pseudo_sample(x, y)
    out: dict[str, float | None] = {}
    for m in spec.methods:
        name = METHOD_ALIASES.get(str(m), str(m))
        try:
            out[name] = estimate_method(sample, spec.tail, name, family=spec.family).estimate
        except Exception:
            # designed fallbacks (plateau zero, plug-in fallback) are values,
            # not exceptions; anything surfacing here is a genuine failure
            out[name] = None
    return out


def _aggregate(spec: ExperimentSpec, lam: float, per_rep: list[dict]) -> ExperimentResult:
    stats: dict[str, MethodStats] = {}
    estimates: dict[str, np.ndarray] = {}
    failures: dict[str, int] = {}
    for m in spec.methods:
        name = METHOD_ALIASES.get(str(m), str(m))
        vals = np.array([r[name] for r in per_rep if r[name] is not None], dtype=float)
        n_failed = spec.reps - vals.size
        failures[name] = n_failed
        estimates[name] = vals
        if vals.size == 0:
            stats[name] = MethodStats(float("nan"), float("nan"), float("nan"), 0, n_failed)
            continue
        bias = float(np.mean(vals) - lam)
        sd = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
        stats[name] = MethodStats(
            bias=bias, sd=sd, rmse=rmse(vals, lam), n_ok=int(vals.size), n_failed=n_failed
        )
    return ExperimentResult(spec=spec, lambda_true=lam, stats=stats,
                            estimates=estimates, failures=failures)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Run all replications of a study; deterministic for a fixed seed.

    ``workers`` > 1 fans replications out to a process pool; aggregation
    always happens in replication order, so the output does not depend on
    the worker count.
    """
    lam = spec.generator.tdc_lower() if spec.tail == "lower" else spec.generator.tdc_upper()
    if workers <= 1:
        per_rep = [_run_replication(spec, r) for r in range(spec.reps)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, spec.reps // (workers * 4))
            per_rep = list(
                pool.map(_run_replication, [spec] * spec.reps, range(spec.reps),
                         chunksize=chunk)
            )
    return _aggregate(spec, lam, per_rep)


def bootstrap_se(estimates, truth: float, n_boot: int = 2000, seed: int = 0):
    """Bootstrap standard errors of (bias, rmse) from one set of replications."""
    est = np.asarray(estimates, dtype=float)
    if est.size < 2:
        raise DomainError("need at least two estimates to bootstrap")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, est.size, size=(n_boot, est.size))
    draws = est[idx]
    biases = draws.mean(axis=1) - truth
    rmses = np.sqrt(np.mean((draws - truth) ** 2, axis=1))
    return float(np.std(biases, ddof=1)), float(np.std(rmses, ddof=1))


# ---------------------------------------------------------------------------
# table emission
# ---------------------------------------------------------------------------

_COLUMNS = ("dataset", "method", "n", "bias", "sd", "rmse", "n_failed")


def table_rows(results: list[ExperimentResult]) -> list[dict]:
    """Flatten results into stable, sorted table rows."""
    rows = []
    for res in results:
        label = res.spec.label or res.spec.generator.name
        for m in res.spec.methods:
            name = METHOD_ALIASES.get(str(m), str(m))
            st = res.stats[name]
            rows.append(
                {
                    "dataset": label,
                    "method": name,
                    "n": res.spec.n,
                    "bias": st.bias,
                    "sd": st.sd,
                    "rmse": st.rmse,
                    "n_failed": st.n_failed,
                }
            )
    rows.sort(key=lambda r: (r["dataset"], r["n"], METHODS.index(r["method"])))
    return rows


def emit_table(rows: list[dict], fmt: str = "tsv") -> str:
    """Render table rows as TSV (2 decimals, like the reference layout) or JSON."""
    if fmt == "tsv":
        lines = ["\t".join(_COLUMNS)]
        for r in rows:
            lines.append(
                "\t".join(
                    [
                        str(r["dataset"]),
                        str(r["method"]),
                        str(r["n"]),
                        f"{r['bias']:.2f}",
                        f"{r['sd']:.2f}",
                        f"{r['rmse']:.2f}",
                        str(r["n_failed"]),
                    ]
                )
            )
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps(rows, sort_keys=True, indent=2) + "\n"
    raise DomainError(f"format must be 'tsv' or 'json', got {fmt!r}")


def read_table_json(text: str) -> list[dict]:
    """Inverse of emit_table(..., 'json'); full-precision round trip."""
    rows = json.loads(text)
    if not isinstance(rows, list):
        raise DomainError("expected a JSON list of rows")
    return rows
