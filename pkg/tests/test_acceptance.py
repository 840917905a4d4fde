"""
Acceptance gate: one test per criterion, each printing a PASS or FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are repeated in
the terminal summary) or directly with ``python tests/test_acceptance.py``.
All runs use the package defaults: 5 folds, 75/25 splits, the network
settings of the reference table, eps_max 0.8, eps_min 0.1.
"""
import functools
import json
import math
import sys

import numpy as np

from takensnet.cli import main
from takensnet.embed import build_pev
from takensnet.estimate import aggregate, select_embedding
from takensnet.forecast import metrics
from takensnet.net import NetConfig, Network, gradient_check
from takensnet.pipeline import RunConfig, forecast_split, load_series, run_estimate, run_forecast
from takensnet.series import TimeSeries, integrate, normalize

SEEDS = range(5)
RESULTS = {}


def report(n: int, ok: bool, title: str, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} | {detail}"
    RESULTS[n] = line
    print(line)
    return ok


@functools.lru_cache(maxsize=None)
def estimate(dataset, m_max, tau_max, seed, noise=0.0):
    cfg = RunConfig(dataset=dataset, m_max=m_max, tau_max=tau_max, seed=seed, noise_sigma=noise)
    return run_estimate(cfg).estimate


def fmt(e):
    return f"({e.m},{e.tau}){'*' if e.stochastic_flag else ''}"


# ---------------------------------------------------------------------------

def test_criterion_1_logistic():
    ests = [estimate("logistic", 5, 3, s) for s in SEEDS]
    hits = sum((e.m, e.tau) == (2, 1) for e in ests)
    assert report(1, hits >= 4, "logistic MEB (5,3) gives (2,1) in >= 4/5 seeds",
                  f"{hits}/5 hits: {' '.join(fmt(e) for e in ests)}")


def test_criterion_2_henon():
    ests = [estimate("henon", 4, 4, s) for s in range(3)]
    ok = all(e.m in (2, 3) and 1 <= e.tau <= 4 for e in ests)
    assert report(2, ok, "Henon MEB (4,4), 3 initializations: m in {2,3}, tau in 1..4",
                  " ".join(fmt(e) for e in ests))


def test_criterion_3_lorenz_mid_range():
    grid = [(5, 3), (7, 2), (3, 8)]
    ests = [estimate("lorenz", m, t, 0) for m, t in grid]
    m3 = sum(e.m == 3 for e in ests)
    taus_ok = all(5 <= e.tau <= 13 for e in ests)
    detail = " ".join(f"{g}->{fmt(e)}" for g, e in zip(grid, ests))
    assert report(3, m3 >= 2 and taus_ok,
                  "Lorenz MEBs (5,3),(7,2),(3,8): m=3 in >= 2 and every tau in [5,13]",
                  f"m=3 in {m3}/3, taus in band: {taus_ok}; {detail}")


def test_criterion_4_rossler():
    ests = [estimate("rossler", 4, 5, s) for s in SEEDS]
    hits = sum(e.m == 3 and 5 <= e.tau <= 12 for e in ests)
    assert report(4, hits >= 4, "Rossler MEB (4,5): m=3, tau in [5,12] in >= 4/5 seeds",
                  f"{hits}/5 hits: {' '.join(fmt(e) for e in ests)}")


def test_criterion_5_stochasticity_flag():
    gauss = [estimate("gaussian", 5, 5, s) for s in SEEDS]
    flagged = sum(e.stochastic_flag for e in gauss)
    benchmarks = [("logistic", 5, 3), ("henon", 4, 4), ("lorenz", 4, 5), ("rossler", 4, 5)]
    false_alarms = {b[0]: sum(estimate(*b, s).stochastic_flag for s in SEEDS) for b in benchmarks}
    ok = flagged >= 4 and not any(false_alarms.values())
    scores = " ".join(f"{e.stochastic_score:.2f}" for e in gauss)
    assert report(5, ok, "Gaussian MEB (5,5) flagged (exit 3) in >= 4/5; benchmarks in 0/5",
                  f"gaussian {flagged}/5 flagged (scores {scores}, threshold 0.5); "
                  f"benchmark flags {false_alarms}")


def test_criterion_6_noise_robustness():
    low = [estimate("lorenz", 4, 5, s, 0.2) for s in SEEDS]
    hits = sum(e.m == 3 and 8 <= e.tau <= 12 for e in low)
    high = [estimate("lorenz", 4, 5, s, 4.0) for s in SEEDS]
    degraded = sum(e.stochastic_flag or not (e.m == 3 and 8 <= e.tau <= 12) for e in high)
    ok = hits >= 3 and degraded >= 3
    assert report(6, ok, "Lorenz+N(0,0.2) MEB (4,5): (3, 8..12) in >= 3/5; N(0,4) degraded",
                  f"sigma 0.2: {hits}/5 [{' '.join(fmt(e) for e in low)}]; "
                  f"sigma 4: {degraded}/5 flagged or out of band [{' '.join(fmt(e) for e in high)}]")


def test_criterion_7_forecast():
    cfg = RunConfig(dataset="rossler", m_max=4, tau_max=5, seed=0)
    fc, _, _, _ = run_forecast(cfg, horizon=250)
    # context: the trivial "next value = last value" predictor on the same rows
    data = build_pev(load_series(cfg), cfg.space)
    _, test_rows = forecast_split(len(data), 250)
    _, naive = metrics(data.inputs[test_rows, -1], data.targets[test_rows])
    assert report(7, fc.nrmse < 0.05, "Rossler MEB (4,5) single-step forecast, 250 steps, nrmse < 0.05",
                  f"nrmse {fc.nrmse:.4f} (persistence baseline {naive:.4f})")


def test_criterion_8_properties(tmp_path, monkeypatch):
    rng = np.random.default_rng(2024)
    checks = {}

    worst = 0.0
    for k in range(100):
        N = int(rng.integers(2, 31))
        L = int(rng.integers(1, 7))
        sign = lambda *s: rng.choice([-1.0, 1.0], size=s)  # noqa: E731
        mag = lambda *s: rng.uniform(0.01, 1.0, size=s) * sign(*s)  # noqa: E731
        cfg = NetConfig(N, n_hidden=L, output=("sigmoid", "identity")[k % 2])
        net = Network(cfg, mag(N, L), mag(L), mag(L), mag(1))
        worst = max(worst, gradient_check(net, (rng.uniform(size=N), rng.uniform()), lam=0.001))
    checks["gradcheck"] = (worst < 1e-5, f"max rel err {worst:.1e}")

    errs = [abs(integrate(lambda s: s, np.array([1.0]), 1.0 / n, n)[-1, 0] - math.e)
            for n in (10, 20, 40, 80)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    checks["rk4"] = (min(ratios) >= 14, f"halving ratios {min(ratios):.1f}..{max(ratios):.1f}")

    exact = True
    for _ in range(200):
        x = rng.normal(size=int(rng.integers(2, 500))) * 10 ** rng.uniform(-6, 6)
        y = normalize(TimeSeries(x)).values
        exact &= y.min() == 0.0 and y.max() == 1.0
    checks["normalize"] = (bool(exact), "min/max exactly 0/1 on 200 series")

    invariant = True
    for _ in range(100):
        I = rng.uniform(size=int(rng.integers(2, 31))) ** rng.uniform(0.5, 4)
        c = 10 ** rng.uniform(-4, 4)
        a, b = select_embedding(I), select_embedding(c * I)
        invariant &= (a.m, a.tau, a.j, a.k) == (b.m, b.tau, b.j, b.k)
    checks["scale"] = (bool(invariant), "100 profiles")

    in_range = True
    for _ in range(1000):
        N = int(rng.integers(2, 31))
        I = rng.uniform(size=N) * (rng.uniform(size=N) < rng.uniform(0.3, 1.0))
        if not I.any():
            I[rng.integers(N)] = 1.0
        e = select_embedding(aggregate([I * rng.uniform(0.8, 1.2, size=N) for _ in range(3)]))
        in_range &= e.m >= 2 and 1 <= e.tau <= N
    checks["ranges"] = (bool(in_range), "1000 profiles")

    monkeypatch.chdir(tmp_path)
    main(["estimate", "--dataset", "logistic", "--mmax", "5", "--taumax", "3", "--seed", "11", "--outdir", "a"])
    main(["estimate", "--replay", "a/estimate.json", "--outdir", "b"])
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in ("relevance.csv", "relevance.svg"))
    ja, jb = (json.loads((tmp_path / d / "estimate.json").read_text()) for d in "ab")
    same &= ja["relevance"] == jb["relevance"] and ja["estimate"] == jb["estimate"]
    checks["replay"] = (bool(same), "estimate rebuilt from provenance")

    ok = all(v for v, _ in checks.values())
    detail = "; ".join(f"{k} {'ok' if v else 'FAILED'} ({d})" for k, (v, d) in checks.items())
    assert report(8, ok, "property suite", detail)


def test_criterion_9_worked_example():
    e = select_embedding([1.0, 0.9, 0.3, 0.2, 0.25, 0.15, 0.3, 0.05])
    got = (e.m, e.tau, e.j, e.k)
    assert report(9, got == (2, 6, 1, 6), "worked relevance vector gives (m,tau,j,k) = (2,6,1,6)",
                  f"got {got}, q = {e.threshold:.2f}")


if __name__ == "__main__":
    import pathlib
    import tempfile

    class _Patch:
        def chdir(self, path):
            import os
            os.chdir(path)

    failed = 0
    for name, fn in sorted(globals().items()):
        if not name.startswith("test_criterion"):
            continue
        try:
            if name == "test_criterion_8_properties":
                fn(pathlib.Path(tempfile.mkdtemp()), _Patch())
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
