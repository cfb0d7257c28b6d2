"""Command-line experiment driver.

Subcommands
-----------
run          one co-simulation; writes trajectory.csv and steps.csv
sweep-dt     error and cost across reference step sizes, per method
sweep-rho    error and cost across damper ratings (spectral radii)
list-methods names accepted by ``--method``

Options may also come from ``--config FILE``, a flat ``key = value`` file
whose keys carry a section prefix, e.g.::

    model.D_D = 0.64
    solver.method = anderson
    solver.anderson.m = 10
    run.dt_ref = 0.05
    run.eps = 1e-6
    sweep.dt_ref = 0.2, 0.1, 0.05
    sweep.D_D = 4, 1, 0.25
    sweep.methods = newtonls, anderson
    output.dir = results

Command-line flags win over the file.
"""
import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, CosimError
from .orchestrator import run_cosimulation
from .solvers import METHOD_NAMES, JfmConfig
from .testbench import (MsdParams, error_metric, make_msd_run, monolithic_reference,
                        spectral_radius)

EXIT_OK, EXIT_ABORT, EXIT_CONFIG = 0, 1, 2

DEFAULT_DT_LIST = (0.2, 0.1, 0.05, 0.025, 0.0125)
DEFAULT_DD_LIST = (4.0, 2.5, 1.5625, 1.0, 0.64, 0.25, 0.04, 0.01)
MODELS = ("msd",)
SAMPLE_GRID = "committed-macro-step-times"
SECTIONS = ("model", "solver", "run", "sweep", "output")


@dataclass
class ExperimentConfig:
    model: str = "msd"
    model_overrides: dict = field(default_factory=dict)
    method: str = "newtonls"
    methods: tuple = METHOD_NAMES
    solver_overrides: dict = field(default_factory=dict)
    dt_ref: float = 0.1
    dt_list: tuple = DEFAULT_DT_LIST
    dd_list: tuple = DEFAULT_DD_LIST
    eps_abs: float = 1e-4
    eps_rel: float = 1e-4
    out_dir: str = "."
    seed: int = 0  # reserved; every run is deterministic
    jobs: int = 1

    def params(self, **extra):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; available: {', '.join(MODELS)}")
        values = dict(self.model_overrides)
        values.update(extra)
        names = {f.name for f in dataclasses.fields(MsdParams)}
        bad = sorted(set(values) - names)
        if bad:
            raise ConfigError(f"unknown model parameter(s): {', '.join(bad)}")
        try:
            return MsdParams(**{k: float(v) for k, v in values.items()})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def solver(self, method=None):
        overrides = dict(self.solver_overrides)
        overrides.setdefault("eps_abs", self.eps_abs)
        overrides.setdefault("eps_rel", self.eps_rel)
        try:
            return JfmConfig.from_name(method or self.method, **overrides)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self):
        for m in (self.method, *self.methods):
            self.solver(m)
        self.params()
        if not self.dt_list or not self.dd_list or not self.methods:
            raise ConfigError("sweep lists must not be empty")
        if self.dt_ref <= 0 or any(d <= 0 for d in self.dt_list):
            raise ConfigError("dt_ref values must be positive")
        if any(d <= 0 for d in self.dd_list):
            raise ConfigError("D_D values must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    def digest(self, command):
        # output location and parallelism do not change results
        fields = {k: v for k, v in dataclasses.asdict(self).items()
                  if k not in ("out_dir", "jobs")}
        blob = json.dumps({"command": command, **fields},
                          sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# -- configuration parsing ----------------------------------------------------

def _floats(text):
    try:
        return tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _float(text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None


def _int(text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _names(text):
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


def read_config_file(path):
    """Parse a flat ``section.key = value`` file into a dict."""
    entries = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if "." not in key:
            raise ConfigError(f"{path}:{lineno}: key {key!r} lacks a section prefix")
        entries[key] = value
    return entries


def apply_entry(cfg, key, value):
    section, name = key.split(".", 1)
    if section == "model":
        if name == "name":
            cfg.model = value.strip().lower()
        else:
            cfg.model_overrides[name] = _float(value)
    elif section == "solver":
        if name == "method":
            cfg.method = value.strip()
        else:
            cfg.solver_overrides[name] = value
    elif section == "run":
        if name == "dt_ref":
            cfg.dt_ref = _float(value)
        elif name == "eps":
            cfg.eps_abs = cfg.eps_rel = _float(value)
        elif name in ("eps_abs", "eps_rel"):
            setattr(cfg, name, _float(value))
        elif name == "seed":
            cfg.seed = _int(value)
        else:
            raise ConfigError(f"unknown key {key!r}")
    elif section == "sweep":
        if name == "dt_ref":
            cfg.dt_list = _floats(value)
        elif name == "D_D":
            cfg.dd_list = _floats(value)
        elif name == "methods":
            cfg.methods = _names(value)
        elif name == "jobs":
            cfg.jobs = _int(value)
        else:
            raise ConfigError(f"unknown key {key!r}")
    elif section == "output":
        if name == "dir":
            cfg.out_dir = value
        else:
            raise ConfigError(f"unknown key {key!r}")
    else:
        raise ConfigError(f"unknown section {section!r} in key {key!r}")


def build_config(args):
    cfg = ExperimentConfig()
    if args.command == "sweep-rho":
        cfg.dt_ref, cfg.eps_abs, cfg.eps_rel = 1e-2, 1e-4, 1e-4
    if args.config:
        for key, value in read_config_file(args.config).items():
            apply_entry(cfg, key, value)
    if args.model is not None:
        cfg.model = args.model
    if args.eps is not None:
        cfg.eps_abs = cfg.eps_rel = args.eps
    for item in args.opt or ():
        if "=" not in item:
            raise ConfigError(f"--opt expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        section = key.split(".", 1)[0]
        apply_entry(cfg, key if section in SECTIONS else "solver." + key, value)
    if args.jobs is not None:
        cfg.jobs = args.jobs
    if args.out_dir is not None:
        cfg.out_dir = args.out_dir
    if args.dd is not None:
        dd = _floats(args.dd)
        if args.command == "sweep-rho":
            cfg.dd_list = dd
        elif len(dd) != 1:
            raise ConfigError("--dd takes a single value here")
        else:
            cfg.model_overrides["D_D"] = dd[0]
    if args.dt_ref is not None:
        dts = _floats(args.dt_ref)
        if args.command == "sweep-dt":
            cfg.dt_list = dts
        elif len(dts) != 1:
            raise ConfigError("--dt-ref takes a single value here")
        else:
            cfg.dt_ref = dts[0]
    if args.method is not None:
        names = _names(args.method)
        if args.command in ("sweep-dt", "sweep-rho"):
            cfg.methods = names
        elif len(names) != 1:
            raise ConfigError("--method takes a single name here")
        else:
            cfg.method = names[0]
    cfg.validate()
    return cfg


# -- experiments ----------------------------------------------------------------

def simulate(cfg, method, dt_ref, D_D=None):
    """One run; returns (params, result, error or None)."""
    p = cfg.params(**({} if D_D is None else {"D_D": D_D}))
    result = run_cosimulation(make_msd_run(p, cfg.solver(method), dt_ref=dt_ref))
    err = None
    if result.completed:
        ref = monolithic_reference(p, result.t)
        err = error_metric(result.state_matrix(), ref)
    return p, result, err


def _sweep_point(job):
    cfg, method, dt_ref, D_D = job
    _, result, err = simulate(cfg, method, dt_ref, D_D)
    outcome = "converged" if result.completed else "diverged"
    return result.total_iterations, result.total_residual_evals, err, outcome


def _run_jobs(cfg, jobs):
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(j) for j in jobs]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def _write_csv(path, meta, header, rows):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _meta(cfg, command, **extra):
    meta = {"command": command, "config_hash": cfg.digest(command),
            "model": cfg.model, "eps_abs": repr(cfg.eps_abs), "eps_rel": repr(cfg.eps_rel),
            "sample_grid": SAMPLE_GRID}
    meta.update(extra)
    return meta


U_NAMES = ("u_v_C", "u_x_C", "u_f_C")
Y_NAMES = ("y_f_C", "y_v_C", "y_x_C")


def cmd_run(cfg, out=None):
    out = out or sys.stdout
    p, result, err = simulate(cfg, cfg.method, cfg.dt_ref)
    meta = _meta(cfg, "run", method=cfg.solver().method.value, dt_ref=repr(cfg.dt_ref),
                 D_D=repr(p.D_D))
    states = result.state_matrix()
    rows = [[t, *s, *u, *y] for t, s, u, y in zip(result.t, states, result.u, result.y)]
    _write_csv(os.path.join(cfg.out_dir, "trajectory.csv"), meta,
               ["t", "v_L", "x_L", "x_D", *U_NAMES, *Y_NAMES], rows)
    _write_csv(os.path.join(cfg.out_dir, "steps.csv"), meta,
               ["N", "t_N", "dt", "iterations", "residual_evals", "outcome"],
               [[s.N, s.t_start, s.dt, s.iterations, s.residual_evals, s.outcome]
                for s in result.steps])
    if not result.completed:
        print(f"diverged: step size underflow at t={result.abort_time!r} "
              f"(total_iterations={result.total_iterations} "
              f"total_integrations={result.total_residual_evals})", file=out)
        return EXIT_ABORT
    print(f"completed error={err:.6e} total_iterations={result.total_iterations} "
          f"total_integrations={result.total_residual_evals} steps={len(result.t) - 1}",
          file=out)
    return EXIT_OK


def cmd_sweep_dt(cfg, out=None):
    out = out or sys.stdout
    if len(cfg.dt_list) < 2:
        raise ConfigError("sweep-dt needs at least two dt_ref values")
    jobs = [(cfg, m, dt, None) for m in cfg.methods for dt in cfg.dt_list]
    results = _run_jobs(cfg, jobs)
    rows = [[m, dt, err, it, ev, oc] for (_, m, dt, _), (it, ev, err, oc) in zip(jobs, results)]
    path = os.path.join(cfg.out_dir, "sweep_dt.csv")
    _write_csv(path, _meta(cfg, "sweep-dt", D_D=repr(cfg.params().D_D),
                           dt_grid=",".join(repr(d) for d in cfg.dt_list)),
               ["method", "dt_ref", "error", "total_iterations", "total_integrations",
                "outcome"], rows)
    print(f"wrote {len(rows)} rows to {path}", file=out)
    return EXIT_OK


def cmd_sweep_rho(cfg, out=None):
    out = out or sys.stdout
    p = cfg.params()
    jobs = [(cfg, m, cfg.dt_ref, dd) for dd in cfg.dd_list for m in cfg.methods]
    results = _run_jobs(cfg, jobs)
    rows = [[dd, spectral_radius(p.D_SD, dd), m, it, ev, err, oc]
            for (_, m, _, dd), (it, ev, err, oc) in zip(jobs, results)]
    path = os.path.join(cfg.out_dir, "sweep_rho.csv")
    _write_csv(path, _meta(cfg, "sweep-rho", dt_ref=repr(cfg.dt_ref)),
               ["D_D", "rho", "method", "total_iterations", "total_integrations", "error",
                "outcome"], rows)
    print(f"wrote {len(rows)} rows to {path}", file=out)
    return EXIT_OK


def cmd_list_methods(cfg=None, out=None):
    out = out or sys.stdout
    for name in METHOD_NAMES:
        print(name, file=out)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep-dt": cmd_sweep_dt, "sweep-rho": cmd_sweep_rho,
            "list-methods": cmd_list_methods}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def make_parser():
    parser = _Parser(prog="hermite-cosim", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "list-methods":
            continue
        sp.add_argument("--model", help="model preset (only 'msd')")
        sp.add_argument("--dd", help="damper rating D_D; a comma list for sweep-rho")
        sp.add_argument("--dt-ref", help="reference macro-step; a comma list for sweep-dt")
        sp.add_argument("--eps", type=float, help="absolute and relative coupling tolerance")
        sp.add_argument("--method", help="solver name; a comma list for sweeps")
        sp.add_argument("--out-dir", help="directory for CSV output")
        sp.add_argument("--config", help="flat key = value configuration file")
        sp.add_argument("--opt", action="append", metavar="KEY=VALUE",
                        help="solver parameter, e.g. newton.gmres_rtol=1e-6 (repeatable)")
        sp.add_argument("--jobs", type=int, help="parallel runs for sweeps")
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    if args.command == "list-methods":
        return cmd_list_methods()
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CosimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
