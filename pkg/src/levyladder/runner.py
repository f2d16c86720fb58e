"""Config-driven experiment runner.

A run is described by a JSON config (schema below), executes a list of
checks against the shipped or inline-defined fixtures, and writes one CSV
per check plus a ``summary.csv``.  Outputs are a pure function of
``(config, seed)``: rerunning with the same seed produces byte-identical
files, and the ``workers`` setting never changes any number, only wall
time.  The exit status is 0 iff every check passed its budget.

Config schema (unknown keys are rejected, with the offending path named)::

    {
      "seed": 42,                  # master seed (CLI --seed overrides)
      "n": 100000,                 # default sample count
      "workers": 1,                # worker threads (CLI --workers overrides)
      "out": "results",            # output directory (CLI --out overrides)
      "chunk_size": 16384,         # RNG chunk size (part of reproducibility)
      "fixtures": {                # optional inline fixture definitions
        "MYFIX": {"kind": "levy", "drift": 1.0, "rate": 2.0,
                   "jumps": {"variant": "discrete", "atoms": [[1, 0.5], [-1, 0.5]]}}
      },
      "checks": [
        {"name": "p-estimate", "fixture": "P1", "t": 0.5, "u": [0.25, 0.5]},
        {"name": "V-grid",     "fixture": "B1", "t": [0.5, 1], "u": [0.5, 1]},
        {"name": "ct1",        "fixture": "P1", "t": 0.5, "u": 0.25, "delta": 0.005},
        {"name": "subpint",    "fixture": "B1", "t": 0.5, "u": 0.4},
        {"name": "quintuple",  "fixture": "P3", "u": 2.0},
        {"name": "quadruple",  "fixture": "B1", "u": 1.5},
        {"name": "amicale",    "fixture": "P2"},
        {"name": "slfi",       "fixture": "B1", "mu": 1, "rho": 2, "ell": 0, "nu": 1, "theta": 1},
        {"name": "slfi-fluct", "fixture": "P2", "mu": 1, "rho": 2, "ell": 0, "nu": 1, "theta": 1},
        {"name": "wiener-hopf","fixture": "P3", "a": [0.5, 1, 2]},
        {"name": "resolvent",  "fixture": "S1", "q": 1.0, "u": 0.5},
        {"name": "alpha",      "fixture": "P3"}
      ]
    }

Every check accepts an optional ``"n"`` overriding the default sample count.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any, Mapping

import numpy as np

from . import lawcheck, renewal, transforms
from .fixtures import FIXTURES, ConfigError, spec_from_config
from .passage import estimate_p
from .processes import BivariateSubordinatorSpec, ProcessSpec
from .results import REPORT_HEADER, SUMMARY_HEADER, CheckReport, write_csv
from .rng import RngPolicy

__all__ = ["ExperimentConfig", "run", "report_plotdata", "main"]

CHECK_NAMES = (
    "p-estimate", "V-grid", "ct1", "subpint", "quintuple", "quadruple",
    "amicale", "slfi", "slfi-fluct", "wiener-hopf", "resolvent", "alpha",
)

_TOP_KEYS = {"seed", "n", "workers", "out", "chunk_size", "fixtures", "checks"}


class ExperimentConfig:
    """Validated runner configuration; see the module docstring for the schema."""

    def __init__(self, raw: Mapping[str, Any]):
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"config: unknown keys {sorted(unknown)}")
        self.seed = int(raw.get("seed", 0))
        self.n = int(raw.get("n", 10000))
        self.workers = int(raw.get("workers", 1))
        self.out = str(raw.get("out", "results"))
        self.chunk_size = int(raw.get("chunk_size", 16384))
        self.fixtures = dict(FIXTURES)
        for name, cfg in raw.get("fixtures", {}).items():
            self.fixtures[name] = spec_from_config(cfg, where=f"fixtures.{name}")
        checks = raw.get("checks")
        if not checks:
            raise ConfigError("config.checks: at least one check is required")
        self.checks = [self._validate_check(i, c) for i, c in enumerate(checks)]

    def _validate_check(self, i: int, c: Mapping[str, Any]) -> dict[str, Any]:
        where = f"checks[{i}]"
        if "name" not in c:
            raise ConfigError(f"{where}.name: missing")
        name = c["name"]
        if name not in CHECK_NAMES:
            raise ConfigError(f"{where}.name: unknown check {name!r}; allowed {list(CHECK_NAMES)}")
        if "fixture" not in c or c["fixture"] not in self.fixtures:
            raise ConfigError(f"{where}.fixture: must name a shipped or inline fixture")
        spec = self.fixtures[c["fixture"]]
        allowed = {"name", "fixture", "n"}
        per_check = {
            "p-estimate": {"t", "u"},
            "V-grid": {"t", "u", "route"},
            "ct1": {"t", "u", "delta"},
            "subpint": {"t", "u"},
            "quintuple": {"u", "cap", "mesh", "delta"},
            "quadruple": {"u", "mesh", "delta"},
            "amicale": {"mesh"},
            "slfi": {"mu", "rho", "ell", "nu", "theta", "u_nodes"},
            "slfi-fluct": {"mu", "rho", "ell", "nu", "theta", "u_nodes", "cap"},
            "wiener-hopf": {"a"},
            "resolvent": {"q", "u", "delta"},
            "alpha": {"s_max"},
        }[name]
        unknown = set(c) - allowed - per_check
        if unknown:
            raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
        is_biv = isinstance(spec, BivariateSubordinatorSpec)
        if name in ("slfi",) and not is_biv:
            raise ConfigError(f"{where}: slfi needs a bivariate fixture")
        if name in ("p-estimate", "ct1", "quintuple", "amicale", "slfi-fluct",
                    "wiener-hopf", "resolvent", "alpha") and is_biv:
            raise ConfigError(f"{where}: {name} needs a Levy fixture")
        if name == "quadruple" and not is_biv:
            raise ConfigError(f"{where}: quadruple needs a bivariate fixture")
        if name in ("slfi", "slfi-fluct"):
            p = _params_from(c)
            if not p.derivative_branch and abs(p.mu + p.ell - p.rho) < 1e-9:
                raise ConfigError(
                    f"{where}: mu + ell - rho is numerically zero; use the derivative branch"
                    " (set ell = rho - mu exactly)"
                )
            if isinstance(spec, BivariateSubordinatorSpec):
                try:
                    p.validate_for(spec)
                except ValueError as exc:
                    raise ConfigError(f"{where}: inadmissible transform parameters: {exc}") from None
        return dict(c)


def _params_from(c: Mapping[str, Any]) -> transforms.TransformParams:
    return transforms.TransformParams(
        mu=float(c.get("mu", 1.0)),
        rho=float(c.get("rho", 2.0)),
        ell=float(c.get("ell", 0.0)),
        nu=float(c.get("nu", 1.0)),
        theta=float(c.get("theta", 1.0)),
    )


def _as_list(x) -> list[float]:
    if isinstance(x, (list, tuple)):
        return [float(v) for v in x]
    return [float(x)]


def _run_check(c: dict[str, Any], cfg: ExperimentConfig, policy: RngPolicy,
               out_dir: str, idx: int) -> CheckReport:
    name = c["name"]
    fixture = c["fixture"]
    spec = cfg.fixtures[fixture]
    n = int(c.get("n", cfg.n))
    sub = policy.substream(f"{idx}:{name}:{fixture}")
    w = cfg.workers

    if name == "p-estimate":
        t = float(c["t"])
        rows = []
        monitors: dict[str, int] = {}
        for u in _as_list(c["u"]):
            est, mon = estimate_p(spec, t, u, n, sub.substream(f"u{u}"), w)
            rows.append([fixture, t, u, est.value, est.se, est.n])
            for k, v in mon.items():
                monitors[k] = monitors.get(k, 0) + v
        write_csv(os.path.join(out_dir, f"check{idx:02d}_p_estimate.csv"),
                  ["fixture", "t", "u", "p", "se", "n"], rows)
        return CheckReport(check=name, fixture=fixture, params={"t": t, "u": c["u"], "n": n},
                           lhs=rows[-1][3], rhs=math.nan, distance=0.0, budget=math.inf,
                           passed=True, n_paths=n * len(rows), monitors=monitors)

    if name == "V-grid":
        grid = renewal.estimate_V(spec, _as_list(c["t"]), _as_list(c["u"]), n, sub, w,
                                  route=str(c.get("route", "integrate")))
        grid.to_csv(os.path.join(out_dir, f"check{idx:02d}_V_grid.csv"))
        return CheckReport(check=name, fixture=fixture,
                           params={"t": c["t"], "u": c["u"], "n": n},
                           lhs=float(grid.value[-1, -1]), rhs=math.nan, distance=0.0,
                           budget=math.inf, passed=True,
                           n_paths=n * grid.value.size)

    if name == "ct1":
        t, u = float(c["t"]), float(c["u"])
        delta = float(c.get("delta", 0.005))
        est, mon = estimate_p(spec, t, u, n, sub.substream("p"), w)
        band = renewal.fluct_boxes(spec, [(0.0, t, u - delta, u)], n, sub.substream("b"), w)[0]
        band2 = renewal.fluct_boxes(spec, [(0.0, t, u - 2 * delta, u - delta)], n,
                                    sub.substream("b2"), w)[0]
        deriv = spec.drift * band.value / delta
        deriv_se = spec.drift * band.se / delta
        bias = spec.drift * abs(band.value - band2.value) / delta
        dist = abs(est.value - deriv)
        budget = 3.0 * math.hypot(est.se, deriv_se) + bias
        rep = CheckReport(check=name, fixture=fixture,
                          params={"t": t, "u": u, "delta": delta, "n": n},
                          lhs=est.value, rhs=deriv, se_lhs=est.se, se_rhs=deriv_se,
                          distance=dist, budget=budget, passed=dist <= budget,
                          n_paths=3 * n, monitors=mon,
                          details=[{"delta_bias": bias}])
    elif name == "subpint":
        rep = renewal.check_subpint(spec, float(c["t"]), float(c["u"]), n, sub, w,
                                    fixture=fixture)
    elif name == "quintuple":
        rep = lawcheck.check_quintuple(spec, float(c["u"]), n, sub, w,
                                       cap=float(c.get("cap", 30000.0)),
                                       mesh=float(c.get("mesh", 0.1)),
                                       delta=float(c.get("delta", 0.005)),
                                       fixture=fixture)
    elif name == "quadruple":
        rep = lawcheck.check_quadruple(spec, float(c["u"]), n, sub, w,
                                       mesh=float(c.get("mesh", 0.05)),
                                       delta=c.get("delta"), fixture=fixture)
    elif name == "amicale":
        rep = lawcheck.check_amicale(spec, n, sub, w, mesh=float(c.get("mesh", 0.1)),
                                     fixture=fixture)
    elif name == "slfi":
        rep = transforms.slfi_check(spec, _params_from(c), n, sub, w,
                                    u_nodes=int(c.get("u_nodes", 40)), fixture=fixture)
    elif name == "slfi-fluct":
        rep = transforms.slfi_fluct_check(spec, _params_from(c), n, sub, w,
                                          u_nodes=int(c.get("u_nodes", 40)),
                                          cap=float(c.get("cap", 60.0)), fixture=fixture)
    elif name == "wiener-hopf":
        rep = transforms.wiener_hopf_check(spec, tuple(_as_list(c.get("a", [0.5, 1.0, 2.0]))),
                                           n, sub, w, fixture=fixture)
    elif name == "resolvent":
        rep = transforms.check_resolvent_creep(spec, float(c.get("q", 1.0)), float(c["u"]),
                                               n, sub, w, delta=c.get("delta"), fixture=fixture)
    elif name == "alpha":
        s_max = float(c.get("s_max", 12.0))
        rep = lawcheck.check_alpha_embedding(spec, n, sub, w,
                                             s_grid=tuple(np.arange(0.5, s_max + 0.25, 0.5)),
                                             fixture=fixture)
    else:  # pragma: no cover - guarded by config validation
        raise ConfigError(f"unhandled check {name}")

    if rep.details:
        header = sorted({k for row in rep.details for k in row})
        write_csv(os.path.join(out_dir, f"check{idx:02d}_{name.replace('-', '_')}.csv"),
                  header, [[row.get(k, "") for k in header] for row in rep.details])
    return rep


def run(config: Mapping[str, Any] | ExperimentConfig, out_dir: str | None = None) -> int:
    """Execute every configured check; returns the process exit status.

    Writes ``summary.csv`` plus one CSV per check under the output
    directory.  Exit status 0 iff no check failed its budget.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig(config)
    out = out_dir or cfg.out
    os.makedirs(out, exist_ok=True)
    policy = RngPolicy(cfg.seed, cfg.chunk_size)
    reports: list[CheckReport] = []
    for idx, c in enumerate(cfg.checks):
        rep = _run_check(c, cfg, policy, out, idx)
        reports.append(rep)
        print(rep.line())
    write_csv(os.path.join(out, "summary.csv"), SUMMARY_HEADER,
              [r.summary_row() for r in reports])
    write_csv(os.path.join(out, "reports.csv"), REPORT_HEADER,
              [r.report_row() for r in reports])
    monitors: dict[str, int] = {}
    total_paths = 0
    for r in reports:
        total_paths += r.n_paths
        for k, v in r.monitors.items():
            monitors[k] = monitors.get(k, 0) + v
    write_csv(os.path.join(out, "monitors.csv"), ["monitor", "count", "total_paths"],
              [[k, v, total_paths] for k, v in sorted(monitors.items())])
    return 0 if all(r.passed for r in reports) else 1


def report_plotdata(results_dir: str, out_dir: str | None = None) -> list[str]:
    """Reshape stored check CSVs into long-format plot data.

    Pure transformation of the stored files (no recomputation): rerunning
    produces identical bytes.  Emits one ``plot_*.csv`` per reshapeable
    input; missing inputs are an error naming the directory.
    """
    if not os.path.isdir(results_dir):
        raise FileNotFoundError(f"results directory not found: {results_dir}")
    out = out_dir or results_dir
    names = sorted(os.listdir(results_dir))
    written: list[str] = []
    for fname in names:
        if fname.startswith("plot_"):
            continue
        path = os.path.join(results_dir, fname)
        if fname.endswith("_p_estimate.csv"):
            rows = _read_csv(path)
            plot = [["p_vs_u", r["u"], r["p"], r["se"], r["fixture"]] for r in rows]
            dest = os.path.join(out, "plot_" + fname)
            write_csv(dest, ["figure", "x", "y", "se", "series"], plot)
            written.append(dest)
        elif fname.endswith("_V_grid.csv"):
            rows = _read_csv(path)
            plot = [["V_vs_u", r["u"], r["V"], r["SE"], f"t={r['t']}"] for r in rows]
            dest = os.path.join(out, "plot_" + fname)
            write_csv(dest, ["figure", "x", "y", "se", "series"], plot)
            written.append(dest)
    if not written:
        raise FileNotFoundError(
            f"no reshapeable check CSVs (p-estimate or V-grid) in {results_dir}"
        )
    return written


def _read_csv(path: str) -> list[dict[str, str]]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        return [dict(zip(header, line.strip().split(","))) for line in fh if line.strip()]


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="levyladder-verify",
        description="Run fluctuation-identity verification suites from a JSON config.",
    )
    parser.add_argument("--config", required=True, help="path to the JSON experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker threads (must not change results)")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--plotdata", action="store_true",
                        help="also emit long-format plot CSVs from the results")
    args = parser.parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    if args.out is not None:
        raw["out"] = args.out
    try:
        cfg = ExperimentConfig(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    status = run(cfg)
    if args.plotdata:
        report_plotdata(cfg.out)
    return status


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
