"""Acceptance criteria 1-10 at desk scale.

Each test records one PASS/FAIL line, printed in the terminal summary.
Thresholds are asserted exactly as stated; nothing is relaxed to pass.
"""
import gc
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import DATA_DIR, record
from oracles import gaussian_dust, munich_brute_force, random_munich_instance
from uncertts.core import ErrorModel, MultiObservationSeries, ProbabilisticSeries
from uncertts.distances import (
    DustTables,
    build_dust_table,
    dust_many,
    dust_point,
    lp_many,
    munich_probability_dp,
    munich_probability_exact,
    proud_accepts,
)
from uncertts.evaluation import linear_fit_r2, parameter_sweep, run_experiment
from uncertts.evaluation.experiment import ExperimentConfig, error_points, prepare, preprocess
from uncertts.cli.io import load_dataset
from uncertts.perturbation import MixedSchedule
from uncertts.queries import Technique

DATASETS = ("ArrowHead", "GunPoint", "ItalyPowerDemand", "OSULeaf", "PickupGestureWiimoteZ")
EUCLID, PROUD, DUST, UMA, UEMA, MUNICH = (Technique.EUCLID, Technique.PROUD, Technique.DUST,
                                          Technique.UMA, Technique.UEMA, Technique.MUNICH)
MIXED = MixedSchedule(0.2, 1.0, 0.4)


def mos(rows):
    return MultiObservationSeries(tuple(np.asarray(r, dtype=float) for r in rows))


def mean_f1(report, technique, **where):
    cells = report.find(technique=technique.value, **where)
    return float(np.mean([c.f1 for c in cells]))


def by_sigma(report, technique, field="f1"):
    sigmas = sorted({c.sigma for c in report.cells})
    return sigmas, [float(np.mean([getattr(c, field) for c in report.find(technique=technique.value, sigma=s)]))
                    for s in sigmas]


# ---------------------------------------------------------------- shared runs


@pytest.fixture(scope="module")
def truncated_run():
    cfg = ExperimentConfig(datasets=("GunPoint",), data_dir=str(DATA_DIR), sigmas=(0.2,), truncate=6,
                           max_series=60, max_queries=5, samples=5, seed=0, time_limit=120.0,
                           techniques=(EUCLID, PROUD, DUST, MUNICH, UMA, UEMA))
    start = time.perf_counter()
    report = run_experiment(cfg)
    return report, time.perf_counter() - start


@pytest.fixture(scope="module")
def sigma_run():
    cfg = ExperimentConfig(datasets=DATASETS, data_dir=str(DATA_DIR), max_series=100, max_queries=50,
                           seed=0, techniques=(EUCLID, PROUD, DUST))
    return run_experiment(cfg)


def mixed_config(**kw):
    base = dict(datasets=DATASETS, data_dir=str(DATA_DIR), mixed=MIXED, max_series=100, max_queries=50,
                seed=0, techniques=(EUCLID, DUST, UMA, UEMA))
    base.update(kw)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------- criteria


def test_criterion_1_munich_exactness():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    exact_ok = enclosed = 0
    for _ in range(200):
        X, Y = random_munich_instance(rng, max_n=3, max_s=3)
        eps = float(rng.uniform(0.0, 4.0))
        want = munich_brute_force(X, Y, eps, 2)
        got = munich_probability_exact(mos(X), mos(Y), eps, 2)
        est = munich_probability_dp(mos(X), mos(Y), eps, 2)
        exact_ok += got == want
        enclosed += est.lower <= want <= est.upper
    elapsed = time.perf_counter() - start
    ok = exact_ok == 200 and enclosed == 200 and elapsed < 10
    record(1, ok, f"exact {exact_ok}/200 bit-equal, enclosure {enclosed}/200, {elapsed:.2f}s (< 10s)")
    assert ok


def test_criterion_2_dust_euclid_equivalence():
    sigma = 1.0
    cfg = ExperimentConfig(datasets=DATASETS, data_dir=str(DATA_DIR), sigmas=(sigma,), max_series=100,
                           max_queries=10, seed=0)
    tables = DustTables()
    same = total = 0
    for name in DATASETS:
        exact = preprocess(load_dataset(DATA_DIR, name), cfg)
        prep = prepare(name, exact, error_points(cfg)[0], cfg, False)
        for qi in prep.queries:
            cand = np.delete(np.arange(prep.size), qi)
            d = dust_many(prep.obs[qi], prep.kinds[qi], prep.stds[qi], prep.obs[cand], prep.kinds[cand],
                          prep.stds[cand], tables)
            e = lp_many(prep.obs[qi], prep.obs[cand], 2)
            same += np.array_equal(np.argsort(d, kind="stable"), np.argsort(e, kind="stable"))
            total += 1
    worst = 0.0
    for s in (0.2, 0.4, 1.0, 2.0):
        t = build_dust_table(ErrorModel("normal", s), ErrorModel("normal", s))
        for delta in np.linspace(0.01 * s, 6 * s, 200):
            worst = max(worst, abs(dust_point(0.0, delta, t) / gaussian_dust(delta, s) - 1))
    ok = total == 50 and same == total and worst <= 0.01
    record(2, ok, f"identical rankings {same}/{total} queries (sigma={sigma:g}); "
                  f"max point error {100 * worst:.4f}% (<= 1%)")
    assert ok


def test_criterion_3_proud_monte_carlo():
    rng = np.random.default_rng(3)
    n, sigma, tau, draws = 200, 0.4, 0.9, 10**6
    start = time.perf_counter()
    agree = counted = 0
    s2 = 2 * sigma * sigma  # variance of the difference of two perturbed points
    for _ in range(500):
        q_obs = rng.normal(size=n)
        y_obs = q_obs + rng.uniform(0.05, 1.0) * rng.normal(size=n)
        q = ProbabilisticSeries(q_obs, np.full(n, sigma), np.ones(n, dtype=np.int8))
        y = ProbabilisticSeries(y_obs, np.full(n, sigma), np.ones(n, dtype=np.int8))
        mean = ((q_obs - y_obs) ** 2).sum() + n * s2
        sd = math.sqrt(2 * n * s2 * s2 + 4 * s2 * ((q_obs - y_obs) ** 2).sum())
        eps = math.sqrt(max(mean + rng.uniform(-4, 4) * sd, 1e-12))
        accepted, _ = proud_accepts(q, y, eps, tau)
        # sum of (delta_i + N(0, s2))^2 is s2 times a noncentral chi-square with n dof
        lam = ((q_obs - y_obs) ** 2).sum() / s2
        prob = float((s2 * rng.noncentral_chisquare(n, lam, draws) <= eps * eps).mean())
        if abs(prob - tau) <= 0.02:
            continue
        counted += 1
        agree += accepted == (prob >= tau)
    elapsed = time.perf_counter() - start
    rate = agree / counted
    ok = rate >= 0.98 and elapsed < 300
    record(3, ok, f"agreement {agree}/{counted} = {100 * rate:.1f}% (>= 98%) outside tau +- 0.02, "
                  f"{elapsed:.1f}s (< 300s)")
    assert ok


@pytest.mark.slow
def test_criterion_4_truncated_gunpoint(truncated_run):
    report, elapsed = truncated_run
    f = {t: mean_f1(report, t) for t in (EUCLID, PROUD, DUST, MUNICH)}
    ok = all(v >= 0.70 for v in f.values()) and f[MUNICH] >= 0.78 and elapsed < 120
    record(4, ok, "F1 " + ", ".join(f"{t.value} {v:.3f}" for t, v in f.items())
           + f" (all >= 0.70, munich >= 0.78), {elapsed:.1f}s (< 120s)")
    assert ok


def _monotone(values, band=0.03):
    return all(b <= a + band for a, b in zip(values, values[1:]))


@pytest.mark.slow
def test_criterion_5_sigma_degradation(sigma_run):
    parts, ok = [], True
    for t in (EUCLID, PROUD, DUST):
        sigmas, f = by_sigma(sigma_run, t)
        drop = f[0] - f[-1]
        good = drop >= 0.20 and _monotone(f)
        ok &= good
        parts.append(f"{t.value} {f[0]:.3f}->{f[-1]:.3f} (drop {100 * drop:.1f}, monotone {_monotone(f)})")
    record(5, ok, "; ".join(parts) + " over " + ", ".join(DATASETS))
    assert ok


@pytest.mark.slow
def test_criterion_6_proud_precision_recall(sigma_run):
    _, prec = by_sigma(sigma_run, PROUD, "precision")
    _, rec = by_sigma(sigma_run, PROUD, "recall")
    p_drop = prec[0] - prec[-1]
    r_span = max(rec) - min(rec)
    ok = p_drop >= 0.25 and r_span <= 0.25
    record(6, ok, f"proud precision {prec[0]:.3f}->{prec[-1]:.3f} (drop {100 * p_drop:.1f} >= 25); "
                  f"recall range {min(rec):.3f}..{max(rec):.3f} (span {100 * r_span:.1f} <= 25)")
    assert ok


@pytest.mark.slow
def test_criterion_7_mixed_error_ordering():
    report = run_experiment(mixed_config())
    f = {t: mean_f1(report, t) for t in (EUCLID, DUST, UMA, UEMA)}
    ok = f[UEMA] >= f[UMA] >= f[DUST] and f[UEMA] - f[DUST] >= 0.02
    record(7, ok, "F1 " + ", ".join(f"{t.value} {v:.3f}" for t, v in f.items())
           + f" (uema >= uma >= dust, uema - dust = {100 * (f[UEMA] - f[DUST]):.1f} >= 2)")
    assert ok


@pytest.mark.slow
def test_criterion_8_window_sweep():
    report = parameter_sweep(mixed_config(techniques=(UMA,)), "w", (0, 2, 20))
    f = {w: mean_f1(report, UMA, param=f"w={w}") for w in (0, 2, 20)}
    gain = f[2] - f[0]
    ok = gain >= 0.05 and f[20] < f[2]
    record(8, ok, f"uma F1 w=0 {f[0]:.3f}, w=2 {f[2]:.3f}, w=20 {f[20]:.3f} "
                  f"(gain {100 * gain:.1f} >= 5, w=20 below peak)")
    assert ok


@pytest.mark.slow
def test_criterion_9_timing(truncated_run):
    report, _ = truncated_run
    ms = {t: report.find(technique=t.value)[0].mean_query_ms for t in (EUCLID, UMA, UEMA, DUST, MUNICH)}
    order = ms[EUCLID] <= min(ms[UMA], ms[UEMA]) and max(ms[UMA], ms[UEMA]) <= ms[DUST] < ms[MUNICH]
    ratio = ms[MUNICH] / ms[EUCLID]
    # 100 series keep the collection cache-resident at every length (<= 800 KB), so
    # the fit sees the algorithm rather than the memory hierarchy. Sub-millisecond CPU
    # timings on a shared VM drift with the host: repeat the sweep and keep each
    # length's fastest mean, with the collector paused as timeit does
    cfg = ExperimentConfig(datasets=("GunPoint",), data_dir=str(DATA_DIR), sigmas=(0.4,), max_series=100,
                           seed=0, techniques=(EUCLID, PROUD, DUST))
    lengths = (50, 100, 200, 400, 600, 800, 1000)
    gc.disable()
    try:
        sweeps = [parameter_sweep(cfg, "length", lengths) for _ in range(5)]
    finally:
        gc.enable()
    r2 = {}
    for t in (EUCLID, PROUD, DUST):
        times = np.min([[next(c.mean_query_ms for c in s.find(technique=t.value)
                              if c.param.split(";")[0] == f"length={n}") for n in lengths] for s in sweeps], axis=0)
        r2[t] = linear_fit_r2(lengths, times)
    ok = order and ratio >= 50 and all(v >= 0.95 for v in r2.values())
    record(9, ok, "ms/query " + ", ".join(f"{t.value} {v:.3f}" for t, v in ms.items())
           + f" (ordered {order}, munich/euclid {ratio:.0f}x >= 50); length R^2 "
           + ", ".join(f"{t.value} {v:.3f}" for t, v in r2.items()) + " (>= 0.95)")
    assert ok


@pytest.mark.slow
def test_criterion_10_invariant_suites():
    here = Path(__file__).resolve().parent
    r = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(here),
         "--ignore", str(here / "test_acceptance.py")],
        capture_output=True, text=True, cwd=here.parent,
    )
    last = r.stdout.strip().splitlines()[-1] if r.stdout.strip() else r.stderr.strip()[-200:]
    ok = r.returncode == 0
    record(10, ok, f"module invariant suites: {last}")
    assert ok, r.stdout[-3000:]
