import csv
import io
import json
import math
import subprocess
import sys

import pytest

from fbqueue import __version__, analytics
from fbqueue.cli import ExperimentConfig, main
from fbqueue.dist import Pareto
from fbqueue.errors import DomainError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_bounds_exponential(capsys):
    code, out, _ = run(capsys, "bounds", "--dist", "exp:rate=2", "--lambda", "1", "--nmax", "10")
    assert code == 0
    header = [ln for ln in out.splitlines() if ln.startswith("#")]
    assert header[0] == f"# fbqueue {__version__}"
    assert "# time unit: ms" in header
    assert any(ln.startswith("# seed: ") for ln in header)
    assert any("dist=exp:rate=2" in ln and "lam=1.0" in ln for ln in header)
    rows = parse_csv(out)
    assert list(rows[0]) == ["n", "rho_pow", "q_n", "exact_mm1", "r_hat", "ci_low", "ci_high"]
    assert len(rows) == 11
    for r in rows:
        assert float(r["exact_mm1"]) == pytest.approx(analytics.mm1_exceedance(0.5, int(r["n"])), rel=1e-15)
        assert r["r_hat"] == ""


def test_bounds_pareto_ratio_from_columns(capsys):
    code, out, _ = run(capsys, "bounds", "--dist", "pareto:alpha=4", "--lambda", "1.8", "--nmax", "100")
    assert code == 0
    rows = parse_csv(out)
    assert rows[-1]["n"] == "100" and rows[1]["exact_mm1"] == ""
    ratio = float(rows[1]["q_n"]) * float(rows[99]["rho_pow"]) / float(rows[100]["q_n"])
    assert abs(ratio / 7.5 - 1) <= 0.10


def test_bounds_with_simulation(capsys):
    code, out, _ = run(capsys, "bounds", "--dist", "exp:rate=2", "--lambda", "1", "--nmax", "4", "--cycles", "500")
    assert code == 0
    rows = parse_csv(out)
    assert float(rows[0]["r_hat"]) == 1.0
    for r in rows:
        assert float(r["ci_low"]) <= float(r["r_hat"]) <= float(r["ci_high"])


def test_bounds_infinite_mean_exit_2(capsys):
    code, out, err = run(capsys, "bounds", "--dist", "pareto:alpha=1.5", "--lambda", "1")
    assert code == 2
    assert "infinite mean" in err
    assert out == ""


def test_bounds_unstable_exit_2(capsys):
    code, _, err = run(capsys, "bounds", "--dist", "exp:rate=1", "--lambda", "1")
    assert code == 2 and "load" in err


def test_bad_distribution_exit_2(capsys):
    code, _, err = run(capsys, "bounds", "--dist", "lognormal:s=1", "--lambda", "1")
    assert code == 2 and "unknown distribution" in err


def test_overflow_pareto(capsys):
    code, out, _ = run(capsys, "overflow", "--dist", "pareto:alpha=4", "--lambda", "1.8", "-d", "1000", "-p", "0.5")
    assert code == 0
    obj = json.loads(out)
    assert obj["fb"]["t_quantile"] > 1e46
    assert obj["fifo"]["t_median"] < 1e8
    assert obj["fb"]["bound_kind"] == "rho_pow" and obj["fb"]["asymptotic"] is True
    assert obj["meta"]["time_unit"] == "ms" and obj["meta"]["version"] == f"fbqueue {__version__}"


def test_overflow_small_buffer(capsys):
    code, out, _ = run(capsys, "overflow", "--dist", "pareto:alpha=4", "--lambda", "1.8", "-d", "1")
    obj = json.loads(out)
    assert code == 0 and 0 < obj["fb"]["t_quantile"] < math.inf


def test_overflow_weibull_half(capsys):
    lam = 0.9 / 2.0
    code, out, _ = run(capsys, "overflow", "--dist", "weibull:beta=0.5", "--lambda", str(lam))
    obj = json.loads(out)
    assert code == 0
    assert obj["fb"]["log10_t_quantile"] > 40
    assert math.isfinite(obj["fifo"]["log10_t"])


def test_couple_json(capsys):
    code, out, _ = run(capsys, "couple", "--dist-f", "pareto:alpha=2", "--dist-g", "spliced:a=10",
                       "--lambda", "0.1", "-t", "500", "--paths", "50")
    assert code == 0
    obj = json.loads(out)
    assert obj["summary"]["dominance_violations"] == 0
    assert obj["meta"]["config"]["p_splice"] == pytest.approx(1 - 1 / 11)


def test_couple_bad_splice_exit_2(capsys):
    code, _, err = run(capsys, "couple", "--dist-f", "pareto:alpha=3", "--dist-g", "spliced:a=10",
                       "--lambda", "0.1", "--paths", "5")
    assert code == 2 and "disagree" in err


def test_simulate_byte_identical_and_thread_invariant(tmp_path):
    outs = []
    for threads in ("1", "2", "1"):
        path = tmp_path / f"sim{len(outs)}.csv"
        code = main(["simulate", "--dist", "pareto:alpha=4", "--lambda", "1.8", "--cycles", "3000",
                     "--nmax", "6", "--seed", "5", "--threads", threads, "--out", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert b"seed: 5" in outs[0]


def test_simulate_json_and_disciplines(capsys):
    for disc in ("fb", "fbstar", "fifo"):
        code, out, _ = run(capsys, "simulate", "--dist", "exp:rate=2", "--lambda", "1", "--discipline", disc,
                           "--cycles", "300", "--nmax", "3", "--format", "json")
        obj = json.loads(out)
        assert code == 0 and len(obj["rows"]) == 4
        assert ("rho_pow" in obj["rows"][1]) == (disc == "fb")


def test_simulate_unstable_needs_flag(capsys):
    code, _, err = run(capsys, "simulate", "--dist", "exp:rate=1", "--lambda", "2", "--cycles", "5")
    assert code == 2


def test_config_roundtrip():
    cfg = ExperimentConfig(scenario="x", dist="weibull:beta=0.25", lam=0.0375, nmax=7, allow_unstable=True,
                           p=0.125, seed=3, sigmas=2.5)
    again = ExperimentConfig.from_text(cfg.to_text())
    assert again == cfg
    assert again.to_text() == cfg.to_text()


def test_config_unknown_key():
    with pytest.raises(DomainError, match="unknown config keys"):
        ExperimentConfig.from_text("lam = 1\nspeed = 3\n")
    with pytest.raises(DomainError):
        ExperimentConfig.from_text("nmax = 2.5\n")
    with pytest.raises(DomainError):
        ExperimentConfig.from_text("just words\n")


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# comment\ndist = exp:rate=2\nlam = 1\nnmax = 3\nseed = 9\n")
    code, out, _ = run(capsys, "bounds", "--config", str(cfg))
    assert code == 0 and len(parse_csv(out)) == 4 and "seed: 9" in out
    code, out, _ = run(capsys, "bounds", "--config", str(cfg), "--nmax", "5", "--seed", "10")
    assert code == 0 and len(parse_csv(out)) == 6 and "seed: 10" in out
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    code, _, err = run(capsys, "bounds", "--config", str(bad))
    assert code == 2 and "colour" in err


def test_out_file(tmp_path):
    path = tmp_path / "sub" / "b.csv"
    assert main(["bounds", "--dist", "exp:rate=2", "--lambda", "1", "--nmax", "2", "--out", str(path)]) == 0
    assert path.read_text().startswith("# fbqueue")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fbqueue", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
    res = subprocess.run([sys.executable, "-m", "fbqueue", "bounds", "--dist", "pareto:alpha=1.5", "--lambda", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 2 and "infinite mean" in res.stderr


def test_paper_failure_exit_code(tmp_path, monkeypatch, capsys):
    from fbqueue import experiments

    def failing(**_):
        return experiments.CheckResult("critical_value", "forced failure", False, {}, {"x.json": "{}\n"})

    monkeypatch.setattr(experiments, "GATES", (failing,))
    monkeypatch.setattr(experiments, "EXTRAS", ())
    code, out, err = run(capsys, "paper", "--out", str(tmp_path))
    assert code == 1
    assert "[FAIL] critical_value" in out and "critical_value" in err
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert "x.json" in manifest
