"""Experiment runner: perturb datasets, query every technique, score against ground truth.

For each dataset and error setting the collection is z-normalised and
perturbed once. Each query is answered leave-one-out against the rest of the
collection. The ground truth is the query's 10 exact nearest neighbours; every
technique's threshold is its own distance from the query to the 10th
Euclidean neighbour on the observations.
"""
from __future__ import annotations

import math
import os
import re
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from ..core import KIND_CODE, Dataset, ErrorKind, ErrorModel, ValidationError, resample, z_normalize
from ..distances import (
    DustTables,
    dust_many,
    inverse_normal_cdf,
    lp_many,
    moments_many,
    munich_bounds,
    munich_probability,
    normalized_eps,
    window_filter,
)
from ..distances.dust import PHI_MIN
from ..core import MultiObservationSeries
from ..perturbation import MixedSchedule, PerturbationSpec, perturb, perturb_both
from ..queries import DEFAULT_NEIGHBORS, Technique
from .metrics import confidence_interval_95, f1, precision_recall

DEFAULT_SIGMAS = tuple(round(0.2 * i, 1) for i in range(1, 11))
DEFAULT_TAU_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))


@dataclass(frozen=True)
class TechniqueParams:
    """Per-technique knobs; each technique reads only the fields it needs."""

    p: int = 2
    bins: int = 256
    exact_cap: int = 10**6
    tau_grid: tuple = DEFAULT_TAU_GRID
    w: int = 2
    lam: float = 1.0
    normalized_filters: bool = False
    # replaces the true per-timestamp stds with one constant (what the technique is told)
    assumed_sigma: Optional[float] = None
    grid_step: Optional[float] = None
    max_delta: Optional[float] = None
    phi_min: float = PHI_MIN


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple
    data_dir: str = "data/ucr"
    error_kind: ErrorKind = ErrorKind.NORMAL
    mix_kinds: Optional[tuple] = None
    sigmas: tuple = DEFAULT_SIGMAS
    mixed: Optional[MixedSchedule] = None
    shared_schedule: bool = False
    seed: int = 0
    max_series: Optional[int] = None
    max_queries: Optional[int] = None
    truncate: Optional[int] = None
    length: Optional[int] = None
    samples: int = 5
    neighbors: int = DEFAULT_NEIGHBORS
    time_limit: float = 10.0
    threads: Optional[int] = None
    techniques: tuple = (Technique.EUCLID, Technique.PROUD, Technique.DUST)
    params: dict = field(default_factory=dict)
    output: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "error_kind", ErrorKind.parse(self.error_kind))
        if self.mix_kinds is not None:
            object.__setattr__(self, "mix_kinds", tuple(ErrorKind.parse(k) for k in self.mix_kinds))
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        object.__setattr__(self, "techniques", tuple(Technique.parse(t) for t in self.techniques))
        object.__setattr__(self, "params", {Technique.parse(k): v for k, v in self.params.items()})
        if not self.datasets:
            raise ValidationError("at least one dataset is required")
        if not self.techniques:
            raise ValidationError("at least one technique is required")
        if self.mixed is None and (not self.sigmas or any(s <= 0 for s in self.sigmas)):
            raise ValidationError("sigma grid values must be positive")
        if self.samples < 1:
            raise ValidationError("samples must be at least 1")

    def technique_params(self, technique) -> TechniqueParams:
        return self.params.get(Technique.parse(technique), TechniqueParams())


@dataclass
class ReportCell:
    dataset: str
    technique: str
    error_kind: str
    sigma: float
    param: str
    precision: float
    precision_ci: float
    recall: float
    recall_ci: float
    f1: float
    f1_ci: float
    mean_query_ms: float
    queries: int
    skipped: int
    # per-query values behind the aggregates (not written to CSV)
    per_query: Optional[dict] = field(default=None, repr=False, compare=False)

    def sort_key(self):
        return (self.dataset, self.technique, self.sigma, param_sort_key(self.param))


def param_sort_key(param: str):
    parts = []
    for item in filter(None, param.split(";")):
        name, _, value = item.partition("=")
        try:
            parts.append((name, 0, float(value), ""))
        except ValueError:
            parts.append((name, 1, 0.0, value))
    return tuple(parts)


@dataclass
class EvalReport:
    cells: list = field(default_factory=list)

    def sorted_cells(self):
        return sorted(self.cells, key=ReportCell.sort_key)

    def extend(self, other: "EvalReport"):
        self.cells.extend(other.cells)

    def find(self, **where):
        return [c for c in self.cells if all(getattr(c, k) == v for k, v in where.items())]


# ---------------------------------------------------------------- preparation


@dataclass(frozen=True)
class ErrorPoint:
    label: str
    sigma: float
    spec_kw: dict


def error_points(config: ExperimentConfig):
    kinds = "+".join(k.value for k in (config.mix_kinds or (config.error_kind,)))
    if config.mixed is not None:
        m = config.mixed
        label = f"{kinds}-mix{m.fraction_high:g}x{m.std_high:g}/{m.std_low:g}"
        return [ErrorPoint(label, m.mean_std, {"schedule": m, "std": None})]
    return [ErrorPoint(kinds, s, {"std": s}) for s in config.sigmas]


def _seed(*parts) -> int:
    return int(np.random.SeedSequence(parts[0], spawn_key=tuple(parts[1:])).generate_state(1, np.uint64)[0])


def _tag(text: str) -> int:
    return zlib.crc32(text.encode())


@dataclass
class Prepared:
    """A z-normalised, perturbed collection ready for querying."""

    name: str
    exact: np.ndarray
    obs: np.ndarray
    stds: np.ndarray
    kinds: np.ndarray
    multi: Optional[np.ndarray]
    queries: list
    point: ErrorPoint

    @property
    def size(self):
        return self.exact.shape[0]


def preprocess(ds: Dataset, config: ExperimentConfig) -> np.ndarray:
    """Subsample, truncate, resample and z-normalise the raw series."""
    values = ds.values
    tag = _tag(ds.name)
    if config.max_series is not None and config.max_series < values.shape[0]:
        rng = np.random.default_rng(_seed(config.seed, tag, 1))
        keep = np.sort(rng.choice(values.shape[0], config.max_series, replace=False))
        values = values[keep]
    if config.truncate is not None:
        values = values[:, : config.truncate]
    if config.length is not None:
        values = resample(values, config.length)
    return np.ascontiguousarray(z_normalize(values))


def pick_queries(n_series: int, name: str, config: ExperimentConfig) -> list:
    if config.max_queries is None or config.max_queries >= n_series:
        return list(range(n_series))
    rng = np.random.default_rng(_seed(config.seed, _tag(name), 2))
    return sorted(rng.choice(n_series, config.max_queries, replace=False).tolist())


def prepare(name: str, exact: np.ndarray, point: ErrorPoint, config: ExperimentConfig,
            need_multi: bool) -> Prepared:
    if exact.shape[0] <= config.neighbors:
        raise ValidationError(f"{name}: need more than {config.neighbors} series for leave-one-out queries")
    tag = _tag(name)
    ptag = _tag(f"{point.label}@{point.sigma!r}")
    sched_seed = _seed(config.seed, tag, 4, ptag) if config.shared_schedule else None
    obs = np.empty(exact.shape)
    stds = np.empty(exact.shape)
    kinds = np.empty(exact.shape, dtype=np.int8)
    multi = np.empty((exact.shape[0], config.samples, exact.shape[1])) if need_multi else None
    for i, row in enumerate(exact):
        spec = PerturbationSpec(
            kind=config.error_kind,
            mix_kinds=config.mix_kinds,
            seed=_seed(config.seed, tag, 3, ptag, i),
            schedule_seed=sched_seed,
            **point.spec_kw,
        )
        if need_multi:
            ps, ms = perturb_both(row, spec, config.samples)
            multi[i] = np.stack(ms.samples, axis=1)
        else:
            ps = perturb(row, spec)
        obs[i], stds[i], kinds[i] = ps.observations, ps.stds, ps.kinds
    return Prepared(name, exact, obs, stds, kinds, multi, pick_queries(exact.shape[0], name, config), point)


# ---------------------------------------------------------------- per query


@dataclass
class QueryContext:
    query: int
    candidates: np.ndarray
    truth: frozenset
    neighbor: int  # global index of the 10th Euclidean neighbour on observations
    neighbor_pos: int  # its position inside `candidates`
    eps_eucl: float


def _stable_knn(d, k):
    return np.argsort(d, kind="stable")[:k]


def query_context(prep: Prepared, qi: int, k: int) -> QueryContext:
    cand = np.delete(np.arange(prep.size), qi)
    exact_d = lp_many(prep.exact[qi], prep.exact[cand], 2)
    truth = frozenset(cand[_stable_knn(exact_d, k)].tolist())
    obs_d = lp_many(prep.obs[qi], prep.obs[cand], 2)
    pos = int(_stable_knn(obs_d, k)[-1])
    return QueryContext(qi, cand, truth, int(cand[pos]), pos, float(obs_d[pos]))


@dataclass
class QueryOutcome:
    elapsed_ms: float
    skipped: bool = False
    retrieved: Optional[frozenset] = None
    scores: Optional[np.ndarray] = None  # probabilistic techniques: accept iff score >= threshold(tau)


def _stds(prep, params: TechniqueParams):
    if params.assumed_sigma is not None:
        return np.full(prep.stds.shape, float(params.assumed_sigma))
    return prep.stds


def _within(cand, d, eps):
    return frozenset(cand[d <= eps].tolist())


def build_tables(prep: Prepared, params: TechniqueParams) -> DustTables:
    tables = DustTables(params.grid_step, params.max_delta, params.phi_min)
    stds = _stds(prep, params)
    models = {ErrorModel(ErrorKind(_KIND_NAMES[k]), s) for k, s in zip(prep.kinds.ravel(), stds.ravel())}
    for a in sorted(models, key=lambda m: (m.kind.value, m.std)):
        for b in sorted(models, key=lambda m: (m.kind.value, m.std)):
            tables.get(a, b)
    tables.packed()
    return tables


_KIND_NAMES = {code: kind.value for kind, code in KIND_CODE.items()}


def evaluate_query(prep: Prepared, ctx: QueryContext, technique: Technique, params: TechniqueParams,
                   tables: Optional[DustTables] = None, time_limit: float = math.inf) -> QueryOutcome:
    qi, cand = ctx.query, ctx.candidates
    start = time.perf_counter()
    cpu_start = time.thread_time()
    # distances are computed against the whole collection (no copies), then the query's own row is dropped
    if technique is Technique.EUCLID:
        d = lp_many(prep.obs[qi], prep.obs, params.p)[cand]
        out = QueryOutcome(0.0, retrieved=_within(cand, d, d[ctx.neighbor_pos]))
    elif technique is Technique.DUST:
        stds = _stds(prep, params)
        d = dust_many(prep.obs[qi], prep.kinds[qi], stds[qi], prep.obs, prep.kinds, stds, tables)[cand]
        out = QueryOutcome(0.0, retrieved=_within(cand, d, d[ctx.neighbor_pos]))
    elif technique in (Technique.UMA, Technique.UEMA):
        stds = _stds(prep, params)
        lam = params.lam if technique is Technique.UEMA else 0.0
        filtered = window_filter(prep.obs, stds, params.w, lam, params.normalized_filters)
        d = lp_many(filtered[qi], filtered, 2)[cand]
        out = QueryOutcome(0.0, retrieved=_within(cand, d, d[ctx.neighbor_pos]))
    elif technique is Technique.PROUD:
        stds = _stds(prep, params)
        mean, var = moments_many(prep.obs[qi], stds[qi], prep.obs, stds)
        out = QueryOutcome(0.0, scores=normalized_eps(ctx.eps_eucl, mean[cand], var[cand]))
    elif technique is Technique.MUNICH:
        if prep.multi is None:
            raise ValidationError("MUNICH needs multi-observation samples")
        q = MultiObservationSeries.from_matrix(prep.multi[qi])
        probs = np.empty(cand.size)
        skipped = False
        for j, ci in enumerate(cand):
            y = MultiObservationSeries.from_matrix(prep.multi[ci])
            probs[j] = munich_probability(q, y, ctx.eps_eucl, params.p, params.bins, params.exact_cap)
            if time.perf_counter() - start > time_limit:
                skipped = True
                break
        out = QueryOutcome(0.0, skipped=skipped, scores=None if skipped else probs)
    else:  # pragma: no cover
        raise ValidationError(f"unsupported technique {technique}")
    # reported time is this thread's CPU time; the limit is on wall-clock time
    out.elapsed_ms = 1000.0 * (time.thread_time() - cpu_start)
    if time.perf_counter() - start > time_limit:
        out.skipped = True
    return out


def threshold_for(technique: Technique, tau: float) -> float:
    if technique is Technique.PROUD:
        return inverse_normal_cdf(tau)
    return tau


def retrieved_at(ctx: QueryContext, outcome: QueryOutcome, technique: Technique, tau: float) -> frozenset:
    if outcome.retrieved is not None:
        return outcome.retrieved
    thr = threshold_for(technique, tau)
    return frozenset(ctx.candidates[outcome.scores >= thr].tolist())


def score(ctx, retrieved):
    p, r = precision_recall(retrieved, ctx.truth)
    return p, r, f1(p, r)


# ---------------------------------------------------------------- aggregation


@dataclass(frozen=True)
class TauSweep:
    best_tau: float
    curve: dict  # tau -> mean F1


def sweep_outcomes(contexts, outcomes, technique, grid) -> TauSweep:
    """Mean F1 at each tau; the best tau is the first maximiser (smallest tau on ties)."""
    curve = {}
    kept = [(c, o) for c, o in zip(contexts, outcomes) if not o.skipped]
    for tau in grid:
        f = [score(c, retrieved_at(c, o, technique, tau))[2] for c, o in kept]
        curve[tau] = float(np.mean(f)) if f else float("nan")
    best = max(grid, key=lambda t: (np.nan_to_num(curve[t], nan=-1.0), -t))
    return TauSweep(best, curve)


def _ci(values):
    if len(values) < 2:
        return (float(values[0]) if values else float("nan")), float("nan")
    return confidence_interval_95(values)


def make_cell(prep: Prepared, technique: Technique, param: str, contexts, outcomes, tau=None) -> ReportCell:
    rows = []
    times = []
    for ctx, out in zip(contexts, outcomes):
        if out.skipped:
            continue
        rows.append(score(ctx, retrieved_at(ctx, out, technique, tau)))
        times.append(out.elapsed_ms)
    arr = np.array(rows).reshape(-1, 3)
    (p, pci), (r, rci), (f, fci) = (_ci(arr[:, j].tolist()) for j in range(3))
    return ReportCell(
        dataset=prep.name,
        technique=technique.value,
        error_kind=prep.point.label,
        sigma=prep.point.sigma,
        param=param,
        precision=p, precision_ci=pci,
        recall=r, recall_ci=rci,
        f1=f, f1_ci=fci,
        mean_query_ms=float(np.mean(times)) if times else float("nan"),
        queries=len(rows),
        skipped=len(outcomes) - len(rows),
        per_query={"precision": arr[:, 0], "recall": arr[:, 1], "f1": arr[:, 2],
                   "query": [c.query for c, o in zip(contexts, outcomes) if not o.skipped],
                   "elapsed_ms": np.array(times)},
    )


def technique_label(technique: Technique, params: TechniqueParams) -> str:
    if technique is Technique.UMA:
        return f"w={params.w}"
    if technique is Technique.UEMA:
        return f"w={params.w};lambda={params.lam:g}"
    return ""


def _join(*parts):
    return ";".join(p for p in parts if p)


# ---------------------------------------------------------------- drivers


def worker_count(config: ExperimentConfig) -> int:
    if config.threads is not None:
        return max(1, int(config.threads))
    env = os.environ.get("UNCERTTS_THREADS")
    return max(1, int(env)) if env else 1


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class Variant:
    """One technique configuration to evaluate on a prepared collection."""

    technique: Technique
    params: TechniqueParams
    extra_label: str = ""
    report_all_taus: bool = False


def evaluate_variants(prep: Prepared, variants: Sequence[Variant], config: ExperimentConfig,
                      contexts=None) -> EvalReport:
    threads = worker_count(config)
    if contexts is None:
        contexts = _map(lambda qi: query_context(prep, qi, config.neighbors), prep.queries, threads)
    report = EvalReport()
    for v in variants:
        tables = build_tables(prep, v.params) if v.technique is Technique.DUST else None
        outcomes = _map(
            lambda ctx: evaluate_query(prep, ctx, v.technique, v.params, tables, config.time_limit),
            contexts, threads,
        )
        base = _join(v.extra_label, technique_label(v.technique, v.params))
        if not v.technique.probabilistic:
            report.cells.append(make_cell(prep, v.technique, base, contexts, outcomes))
            continue
        grid = tuple(v.params.tau_grid)
        if v.report_all_taus:
            for tau in grid:
                report.cells.append(make_cell(prep, v.technique, _join(base, f"tau={tau:g}"), contexts, outcomes, tau))
            continue
        sweep = sweep_outcomes(contexts, outcomes, v.technique, grid)
        cell = make_cell(prep, v.technique, _join(base, f"tau={sweep.best_tau:g}"), contexts, outcomes, sweep.best_tau)
        cell.per_query["tau_curve"] = sweep.curve
        report.cells.append(cell)
    return report


def default_params(config: ExperimentConfig, technique: Technique, point: ErrorPoint) -> TechniqueParams:
    params = config.technique_params(technique)
    if technique is Technique.PROUD and config.mixed is not None and params.assumed_sigma is None:
        # PROUD models one constant std; give it the schedule's mean
        params = replace(params, assumed_sigma=config.mixed.mean_std)
    return params


def load_named(config: ExperimentConfig, name: str) -> Dataset:
    from ..cli.io import load_dataset

    return load_dataset(config.data_dir, name)


def _run(config: ExperimentConfig, make_variants: Callable, loader=None) -> EvalReport:
    loader = loader or (lambda name: load_named(config, name))
    need_multi = Technique.MUNICH in config.techniques
    report = EvalReport()
    for name in config.datasets:
        exact = preprocess(loader(name), config)
        for point in error_points(config):
            prep = prepare(name, exact, point, config, need_multi)
            report.extend(evaluate_variants(prep, make_variants(point), config))
    return report


def run_experiment(config: ExperimentConfig, loader=None) -> EvalReport:
    """Every (dataset, error setting, technique) cell of the configured experiment.

    ``loader`` maps a dataset name to a :class:`Dataset`; by default datasets
    are read from ``config.data_dir``.
    """
    def variants(point):
        return [Variant(t, default_params(config, t, point)) for t in config.techniques]

    return _run(config, variants, loader)


def tau_sweep(config: ExperimentConfig, technique, grid=DEFAULT_TAU_GRID, loader=None) -> dict:
    """``{(dataset, error label, sigma): TauSweep}`` for a probabilistic technique."""
    technique = Technique.parse(technique)
    if not technique.probabilistic:
        raise ValidationError("tau sweeps need MUNICH or PROUD")
    config = replace(config, techniques=(technique,))
    out = {}
    loader = loader or (lambda name: load_named(config, name))
    for name in config.datasets:
        exact = preprocess(loader(name), config)
        for point in error_points(config):
            prep = prepare(name, exact, point, config, technique is Technique.MUNICH)
            params = replace(default_params(config, technique, point), tau_grid=tuple(grid))
            contexts = [query_context(prep, qi, config.neighbors) for qi in prep.queries]
            tables = None
            outcomes = [evaluate_query(prep, c, technique, params, tables, config.time_limit) for c in contexts]
            out[(name, point.label, point.sigma)] = sweep_outcomes(contexts, outcomes, technique, tuple(grid))
    return out


SWEEP_DEFAULTS = {
    "w": tuple(range(0, 21)),
    "lambda": (0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0),
    "length": (50, 100, 200, 400, 600, 800, 1000),
    "tau": DEFAULT_TAU_GRID,
}


def parameter_sweep(config: ExperimentConfig, parameter: str, values=None, loader=None) -> EvalReport:
    """Re-run the experiment across values of ``w``, ``lambda``, ``length`` or ``tau``."""
    parameter = parameter.lower()
    if parameter not in SWEEP_DEFAULTS:
        raise ValidationError(f"unknown sweep parameter {parameter!r}")
    values = tuple(values if values is not None else SWEEP_DEFAULTS[parameter])

    if parameter == "length":
        report = EvalReport()
        for length in values:
            sub = run_experiment(replace(config, length=int(length)), loader)
            for cell in sub.cells:
                cell.param = _join(f"length={int(length)}", cell.param)
            report.extend(sub)
        return report

    def variants(point):
        out = []
        for t in config.techniques:
            base = default_params(config, t, point)
            if parameter == "w" and t in (Technique.UMA, Technique.UEMA):
                out.extend(Variant(t, replace(base, w=int(v))) for v in values)
            elif parameter == "lambda" and t is Technique.UEMA:
                out.extend(Variant(t, replace(base, lam=float(v))) for v in values)
            elif parameter == "tau" and t.probabilistic:
                out.append(Variant(t, replace(base, tau_grid=tuple(float(v) for v in values)), report_all_taus=True))
        if not out:
            raise ValidationError(f"no configured technique takes parameter {parameter!r}")
        return out

    return _run(config, variants, loader)


def linear_fit_r2(x, y) -> float:
    """Coefficient of determination of a least-squares line through ``(x, y)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = ((y - y.mean()) ** 2).sum()
    return float(1.0 - (resid ** 2).sum() / total) if total > 0 else 1.0
