"""Command-line front end.

Subcommands ``bounds``, ``simulate``, ``overflow``, ``couple`` and ``paper``.
Every output starts with a header carrying the package version, the seed and
the full configuration, and contains no timestamps, so reruns are
byte-identical.  Times are in milliseconds.

Exit codes: 0 success, 1 failed acceptance check, 2 configuration or domain
error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import __version__, analytics, experiments
from .dist import parse_dist
from .errors import DomainError, SimulationTruncated
from .sim import QueueParams, exceedance_rows, simulate_coupled, simulate_cycles

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2


@dataclass
class ExperimentConfig:
    """Flat key/value experiment description.

    The file format is one ``key = value`` pair per line; blank lines and
    lines starting with ``#`` are ignored.  Unknown keys are rejected.
    """

    scenario: str = "custom"
    dist: str = "exp:rate=2"
    lam: float = 1.0
    discipline: str = "fb"
    bound: str = "rho_pow"
    nmax: int = 20
    cycles: int = 0
    paths: int = 1000
    d: int = 1000
    p: float = 0.5
    t: float = 1000.0
    dist_g: str = "spliced:a=10"
    p_splice: float = 0.0
    k_sigma: float = 3.0
    sigmas: float = 3.0
    allow_unstable: bool = False
    seed: int = experiments.DEFAULT_SEED
    out: str = "-"
    format: str = "csv"
    threads: int = 1

    def to_text(self) -> str:
        return "".join(f"{f.name} = {_render(getattr(self, f.name))}\n" for f in fields(self))

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return cls().updated(_parse_pairs(text))

    def updated(self, values: dict) -> "ExperimentConfig":
        types = {f.name: f.type for f in fields(self)}
        unknown = sorted(set(values) - set(types))
        if unknown:
            raise DomainError(f"unknown config keys: {', '.join(unknown)}")
        conv = {k: _convert(k, types[k], v) for k, v in values.items()}
        return dataclasses.replace(self, **conv)

    def items(self) -> list[tuple[str, object]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


def _parse_pairs(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DomainError(f"config line {lineno}: expected key = value")
        values[key.strip()] = value.strip()
    return values


def _render(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _convert(key: str, typ: str, value):
    if not isinstance(value, str):
        return value
    try:
        if typ == "bool":
            low = value.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return low in ("true", "1", "yes")
        if typ == "int":
            f = float(value)
            if f != int(f):
                raise ValueError(value)
            return int(f)
        if typ == "float":
            return float(value)
    except ValueError:
        raise DomainError(f"config key {key!r}: cannot convert {value!r} to {typ}") from None
    return value


# fields that never influence results: destination and worker count
_NOT_IN_HEADER = ("out", "threads")


def _meta(cfg: ExperimentConfig) -> dict:
    return {
        "version": f"fbqueue {__version__}",
        "seed": cfg.seed,
        "time_unit": "ms",
        "config": {k: v for k, v in cfg.items() if k not in _NOT_IN_HEADER},
    }


def _header_lines(meta: dict) -> list[str]:
    cfg = "; ".join(f"{k}={_render(v)}" for k, v in meta["config"].items())
    return [meta["version"], "time unit: ms", f"seed: {meta['seed']}", f"config: {cfg}"]


def _emit(cfg: ExperimentConfig, text: str):
    if cfg.out in ("-", ""):
        sys.stdout.write(text)
    else:
        path = Path(cfg.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _table_output(cfg: ExperimentConfig, meta: dict, rows: list[dict]) -> str:
    if cfg.format == "json":
        return _json_text({"meta": meta, "rows": rows})
    return experiments.bounds_csv(rows, _header_lines(meta))


def cmd_bounds(cfg: ExperimentConfig) -> int:
    dist = parse_dist(cfg.dist)
    table = analytics.q_table(dist, cfg.lam, cfg.nmax)
    est = None
    if cfg.cycles > 0:
        batch = simulate_cycles(QueueParams(cfg.lam, dist, "fb"), cfg.cycles, cfg.seed, cfg.threads)
        est = exceedance_rows(batch.max_len, cfg.nmax)
    rows = []
    for r in table.rows:
        row = dict(n=r.n, rho_pow=r.rho_pow, q_n=r.q, exact_mm1=r.exact_mm1)
        if est is not None:
            e = est[r.n]
            row.update(r_hat=e.r_hat, ci_low=e.ci_low, ci_high=e.ci_high)
        rows.append(row)
    _emit(cfg, _table_output(cfg, _meta(cfg), rows))
    return EXIT_OK


def cmd_simulate(cfg: ExperimentConfig) -> int:
    dist = parse_dist(cfg.dist)
    params = QueueParams(cfg.lam, dist, cfg.discipline)
    cycles = cfg.cycles or 10_000
    batch = simulate_cycles(params, cycles, cfg.seed, cfg.threads, allow_unstable=cfg.allow_unstable)
    est = exceedance_rows(batch.max_len, cfg.nmax)
    table = None
    if cfg.discipline == "fb" and params.rho < 1.0:
        table = analytics.q_table(dist, cfg.lam, cfg.nmax)
    rows = []
    for e in est:
        row = dict(n=e.n, r_hat=e.r_hat, ci_low=e.ci_low, ci_high=e.ci_high)
        if table is not None:
            tr = table.rows[e.n]
            row.update(rho_pow=tr.rho_pow, q_n=tr.q, exact_mm1=tr.exact_mm1)
        rows.append(row)
    meta = _meta(cfg)
    meta["config"]["cycles"] = cycles
    _emit(cfg, _table_output(cfg, meta, rows))
    return EXIT_OK


def cmd_overflow(cfg: ExperimentConfig) -> int:
    dist = parse_dist(cfg.dist)
    fb = analytics.overflow_quantile(cfg.d, cfg.p, cfg.lam, cfg.bound, dist)
    fifo = analytics.fifo_overflow_median(cfg.d, cfg.lam, dist, cfg.k_sigma)
    out = {
        "meta": _meta(cfg),
        "fb": fb.as_dict(),
        "fifo": dataclasses.asdict(fifo),
    }
    _emit(cfg, _json_text(out))
    return EXIT_OK


def cmd_couple(cfg: ExperimentConfig) -> int:
    f, g = parse_dist(cfg.dist), parse_dist(cfg.dist_g)
    p = cfg.p_splice
    if not 0.0 < p < 1.0:
        # default splice level: the mass of F below the splice point of G
        if not hasattr(g, "a"):
            raise DomainError("p_splice must be in (0, 1) unless dist_g is a spliced law")
        p = float(f.cdf(g.a))
    s = simulate_coupled(cfg.lam, f, g, p, cfg.t, cfg.paths, cfg.seed, cfg.threads)
    meta = _meta(cfg)
    meta["config"]["p_splice"] = p
    body = dataclasses.asdict(s)
    if cfg.format == "csv":
        cols = list(body)
        text = "".join(f"# {h}\n" for h in _header_lines(meta))
        text += ",".join(cols) + "\n" + ",".join(_render(body[c]) for c in cols) + "\n"
    else:
        text = _json_text({"meta": meta, "summary": body})
    _emit(cfg, text)
    return 0 if s.dominance_violations == 0 and s.young_mismatches == 0 else EXIT_CHECK_FAILED


def cmd_paper(cfg: ExperimentConfig) -> int:
    outdir = Path("paper_artifacts" if cfg.out in ("-", "") else cfg.out)

    def progress(res):
        print(f"{res.line()}  ({res.elapsed:.1f} s)", flush=True)

    results = experiments.run_all(seed=cfg.seed, workers=cfg.threads, sigmas=cfg.sigmas, progress=progress)
    experiments.write_artifacts(results, outdir, seed=cfg.seed)
    failed = [r.name for r in results if r.gate and not r.passed]
    gates = sum(r.gate for r in results)
    print(f"{gates - len(failed)}/{gates} checks passed; artifacts in {outdir}")
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


COMMANDS = {
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "overflow": cmd_overflow,
    "couple": cmd_couple,
    "paper": cmd_paper,
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global")
    g.add_argument("--config", help="flat key = value config file; flags override it")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="output file (directory for paper); '-' is stdout")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--threads", type=int, help="worker processes; changes speed only")

    parser = argparse.ArgumentParser(prog="fbqueue", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"fbqueue {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def queue_args(p, dist=True):
        if dist:
            p.add_argument("--dist", help="e.g. exp:rate=2, pareto:alpha=4, weibull:beta=0.5")
        p.add_argument("--lambda", dest="lam", type=float, help="arrival rate per ms")

    p = sub.add_parser("bounds", parents=[common], help="rho^n and q_n bound table")
    queue_args(p)
    p.add_argument("--nmax", type=int)
    p.add_argument("--cycles", type=int, help="also simulate this many FB busy cycles")

    p = sub.add_parser("simulate", parents=[common], help="empirical P(M > n) by simulation")
    queue_args(p)
    p.add_argument("--discipline", choices=("fb", "fbstar", "fifo"))
    p.add_argument("--nmax", type=int)
    p.add_argument("--cycles", type=int)
    p.add_argument("--allow-unstable", dest="allow_unstable", action="store_const", const="true")

    p = sub.add_parser("overflow", parents=[common], help="buffer overflow time, FB bound and FIFO heuristic")
    queue_args(p)
    p.add_argument("-d", "--buffer", dest="d", type=int)
    p.add_argument("-p", "--prob", dest="p", type=float)
    p.add_argument("--bound", choices=("rho_pow", "q_sequence"))
    p.add_argument("--k-sigma", dest="k_sigma", type=float)

    p = sub.add_parser("couple", parents=[common], help="pathwise coupling of two FB queues")
    p.add_argument("--dist-f", dest="dist")
    p.add_argument("--dist-g", dest="dist_g")
    p.add_argument("--p-splice", dest="p_splice", type=float)
    queue_args(p, dist=False)
    p.add_argument("--horizon", "-t", dest="t", type=float)
    p.add_argument("--paths", type=int)

    p = sub.add_parser("paper", parents=[common], help="run every validation scenario and write artifacts")
    p.add_argument("--sigmas", type=float, help="standard errors allowed in statistical checks")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(scenario=args.command)
    if args.command == "couple":
        cfg = dataclasses.replace(cfg, dist="pareto:alpha=2", lam=0.1, format="json")
    if args.command == "overflow":
        cfg = dataclasses.replace(cfg, format="json")
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise DomainError(f"cannot read config file: {exc}") from None
        cfg = cfg.updated(_parse_pairs(text))
    overrides = {
        k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None
    }
    return cfg.updated(overrides)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args)
        if cfg.threads < 1:
            raise DomainError("threads must be >= 1")
        return COMMANDS[args.command](cfg)
    except (DomainError, SimulationTruncated) as exc:
        print(f"fbqueue: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"fbqueue: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
