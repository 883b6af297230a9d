"""Acceptance suite: one printed PASS/FAIL line per criterion.

The scenarios themselves live in :mod:`fbqueue.experiments` (they are also
what ``fbqueue paper`` runs).  Each is executed once per session and its
verdict, details and wall-clock time are checked here.  Run with ``-s`` to
see the summary lines.
"""

import filecmp
import json

import pytest

from fbqueue import experiments as ex
from fbqueue.cli import main

SEED = ex.DEFAULT_SEED


def report(number, ok, text):
    print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}: {text}")


@pytest.fixture(scope="session")
def results():
    return {r.name: r for r in ex.run_all(seed=SEED, workers=1)}


@pytest.fixture(scope="session")
def artifacts(results, tmp_path_factory):
    out = tmp_path_factory.mktemp("paper_lib")
    ex.write_artifacts(list(results.values()), out, seed=SEED)
    return out


def test_01_mm1_exactness(results):
    r = results["mm1_exactness"]
    zs = [c["z"] for c in r.details["checks"]]
    ok = r.passed and r.elapsed < 60
    report(1, ok, f"M/M/1 rho=0.5, 1e5 cycles, n=1..5, max |z| = {max(map(abs, zs)):.2f} <= 3, "
                  f"{r.elapsed:.1f} s < 60 s")
    assert [c["n"] for c in r.details["checks"]] == [1, 2, 3, 4, 5]
    assert r.details["cycles"] == 100_000
    assert ok


def test_02_pareto_bound(results):
    r = results["pareto_rho_bound"]
    margins = [c["margin"] for c in r.details["checks"] if c["n"] >= 1]
    report(2, r.passed, f"Pareto(4) rho=0.9, 1e6 cycles: min over n>=1 of rho^n + 3 SE - r_hat = {min(margins):.2e}; "
                        f"r_hat_1 z = {r.details['r1_z']:.2f}")
    assert [c["n"] for c in r.details["checks"]] == list(range(9))
    assert r.details["cycles"] == 1_000_000
    assert r.passed


def test_03_q_sequence_ratio(results):
    r = results["q_sequence_ratio"]
    ok = r.passed and r.elapsed < 1.0
    report(3, ok, f"ratio = {r.details['ratio']:.4f} (7.5 +- 10%), {r.elapsed:.3f} s < 1 s")
    assert ok


def test_04_fbstar(results):
    r = results["fbstar_decomposition"]
    zs = [c["z"] for c in r.details["checks"]]
    pv = {k: v["p_value"] for k, v in r.details["poisson_fit"].items()}
    report(4, r.passed, f"FB* max |z| = {max(map(abs, zs)):.2f} (n=1..4); Poisson fit p-values {pv}")
    assert set(pv) == {"0.5", "1.0", "2.0"}
    assert r.passed


def test_05_overflow(results):
    r = results["overflow_reproduction"]
    p = r.details["pareto"]
    w = r.details["weibull"]["0.25"]
    ok = r.passed and r.elapsed < 1.0
    report(5, ok, f"FB Pareto t = {p['fb']['t_quantile']:.3e} > 1e46; FIFO median {p['fifo_t']:.3e} < 1e8; "
                  f"Weibull(1/4) log10 t = {w['fb_log10_t']:.2f} > 48; {r.elapsed:.3f} s")
    assert ok


def test_06_horizon_maximum(results):
    r = results["horizon_maximum"]
    d = r.details
    report(6, r.passed, f"P_hat(M(t)<=2) = {d['empirical']:.5f} vs {d['approx']:.5f}, tol {d['tolerance']:.3f}")
    assert d["replications"] == 10_000 and d["t"] == 50 * d["mu"]
    assert r.passed


def test_07_coupling(results):
    r = results["coupling_pathwise"]
    d = r.details
    report(7, r.passed, f"{d['paths']} paths, {d['events']} epochs: {d['dominance_violations']} dominance "
                        f"violations, {d['young_mismatches']} young-count mismatches")
    assert d["paths"] == 10_000
    assert r.passed


def test_08_critical_value(results):
    r = results["critical_value"]
    report(8, r.passed, f"c* - ln 2 = {r.details['error']:.2e}, residual {r.details['residual']:.2e}")
    assert r.passed


def test_09_log_convexity(results):
    r = results["log_convexity"]
    report(9, r.passed, "; ".join(f"{k}: {'pass' if v['passed'] else 'fail'}" for k, v in r.details.items()))
    assert len(r.details) == 9
    assert r.passed


def test_10_fb_versus_fifo(results):
    r = results["fb_versus_fifo"]
    d = r.details
    report(10, r.passed, f"mean max FB {d['mean_max_fb']:.2f} vs FIFO {d['mean_max_fifo']:.2f} "
                         f"(difference {d['mean_difference']:.2f}, paired SE {d['paired_se']:.3f})")
    assert d["replications"] == 10_000
    assert r.passed


def test_11_determinism(artifacts, tmp_path, capsys):
    code = main(["paper", "--out", str(tmp_path), "--threads", "2", "--seed", str(SEED)])
    capsys.readouterr()
    names = sorted(p.name for p in artifacts.iterdir())
    assert names == sorted(p.name for p in tmp_path.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(artifacts, tmp_path, names, shallow=False)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    anchored = [k for k, v in manifest.items() if v["anchor"]]
    ok = code == 0 and not mismatch and not errors and len(anchored) >= 10
    report(11, ok, f"paper preset rerun with --threads 2: {len(match)} files byte-identical, "
                   f"{len(mismatch)} differ; {len(anchored)} anchored artifacts")
    assert ok
